"""
Interval decomposition k_m and the submeasures phi_m

k_m = min{k : f(g(k)) >= 2^m} splits omega into blocks [k_m, k_{m+1});
phi_m(C) = f(|C ∩ [k_m, k_{m+1})|) / f(g(k_m)). Z_g(f) is the set of C
with phi_m(C) -> 0, and the boundedness criteria below decide when
Z_g(f) = Z(f).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath

from density import RatioTrace, membership_verdict
from errors import BoundedModulus, EmptyRange, IndexOutOfRange, NotMonotone, ParameterError
from functions import real_ratio, scan_grid
from lab_config import LabConfig

logger = logging.getLogger(__name__)


def composed(f, g):
    """k -> f(g(k))"""
    return lambda k: f.eval_big(g(k))


def floor_real(x):
    if isinstance(x, mpmath.mpf):
        return int(mpmath.floor(x))
    return int(math.floor(x))


@dataclass
class Decomposition:
    f: object
    g: object
    k_seq: list
    m_max: int
    start_m: int
    form: str = 'pow2'
    thresholds: list = field(default_factory=list)
    truncated: Optional[str] = None

    def interval(self, m):
        self._check_m(m)
        return self.k_seq[m], self.k_seq[m + 1]

    def weight_at(self, m):
        """f(g(k_m))"""
        return self.f.eval_big(self.g(self.k_seq[m]))

    def nonempty_blocks(self):
        return [m for m in range(self.start_m, self.m_max) if self.k_seq[m + 1] > self.k_seq[m]]

    def _check_m(self, m):
        if not self.start_m <= m < self.m_max:
            raise IndexOutOfRange(f"m={m} outside [{self.start_m}, {self.m_max})")


@dataclass(frozen=True)
class SubmeasureValue:
    m: int
    value: float
    count: int


def _search_first(F, reached, lo, label):
    """Smallest k >= lo with reached(F(k)), by doubling steps then bisection.
    Returns None past the index ceiling."""
    value = F(lo)
    if reached(value):
        return lo
    previous, bad, step = value, lo, 1
    while True:
        hi = bad + step
        if hi > LabConfig.INDEX_CEILING:
            return None
        value = F(hi)
        if value < previous:
            raise NotMonotone(f"{label}: f(g(k)) decreased between k={bad} and k={hi}")
        if reached(value):
            break
        previous, bad = value, hi
        step *= 2
    while hi - bad > 1:
        mid = (bad + hi) // 2
        if reached(F(mid)):
            hi = mid
        else:
            bad = mid
    return hi


def _check_inputs(f, g, m_max):
    if not f.is_unbounded:
        raise BoundedModulus(f"{f.name} is bounded; f(g(k)) never reaches every 2^m")
    if not g.is_nondecreasing:
        raise NotMonotone(f"{g.name} is not nondecreasing")
    if m_max < 1:
        raise ParameterError(f"m_max must be >= 1, got {m_max}")


def build_decomposition(f, g, m_max, stop_above=None):
    """k_0 = 0, k_m = min{k : f(g(k)) >= 2^m}; truncates at the index ceiling.

    k_seq is nondecreasing. A jump of f∘g past several powers of two repeats
    k_m; nonempty_blocks() lists the blocks where it strictly increases.

    With stop_above, the search ends after the first k_m beyond that index."""
    _check_inputs(f, g, m_max)
    F = composed(f, g)
    label = f"{f.name}/{g.name}"

    k_seq, thresholds, truncated = [0], [1], None
    for m in range(1, m_max + 1):
        k = _search_first(F, lambda v, t=2**m: v >= t, k_seq[-1], label)
        if k is None:
            truncated = f"k_{m} exceeds the index ceiling 2^{LabConfig.INDEX_CEILING.bit_length() - 1}"
            logger.info(f"decomposition {label} truncated: {truncated}")
            break
        k_seq.append(k)
        thresholds.append(2**m)
        if stop_above is not None and k > stop_above:
            break

    stored = len(k_seq) - 1
    start_m = 0 if F(0) > 0 else 1
    return Decomposition(f, g, k_seq, stored, start_m, 'pow2', thresholds, truncated)


def first_positive_index(f, g):
    """k_0' = min{k : f(g(k)) > 0}"""
    F = composed(f, g)
    k = _search_first(F, lambda v: v > 0, 0, f"{f.name}/{g.name}")
    if k is None:
        raise EmptyRange(f"f(g(k)) = 0 up to the index ceiling for {f.name}/{g.name}")
    return k


def doubling_decomposition(f, g, m_max):
    """Variant starting at k_0' with k_{m+1} = min{k : f(g(k)) >= 2 f(g(k_m))}"""
    _check_inputs(f, g, m_max)
    F = composed(f, g)
    label = f"{f.name}/{g.name} doubling"

    k_seq = [first_positive_index(f, g)]
    thresholds = [F(k_seq[0])]
    truncated = None
    for m in range(1, m_max + 1):
        target = 2 * F(k_seq[-1])
        k = _search_first(F, lambda v, t=target: v >= t, k_seq[-1], label)
        if k is None:
            truncated = f"k_{m} exceeds the index ceiling"
            break
        k_seq.append(k)
        thresholds.append(target)
    return Decomposition(f, g, k_seq, len(k_seq) - 1, 0, 'doubling', thresholds, truncated)


def phi(decomp, m, C):
    """phi_m(C) = f(|C ∩ [k_m, k_{m+1})|) / f(g(k_m))"""
    a, b = decomp.interval(m)
    n = C.count(b) - C.count(a)
    return SubmeasureValue(m, real_ratio(decomp.f.eval_big(n), decomp.weight_at(m)), n)


def phi_trace(decomp, C):
    """phi_m(C) over blocks with nonempty intervals, as a trace indexed by k_m"""
    blocks = decomp.nonempty_blocks()
    values = [phi(decomp, m, C) for m in blocks]
    return RatioTrace(
        decomp.f.name, decomp.g.name, C.name,
        sample_indices=[decomp.k_seq[m] for m in blocks],
        ratios=[v.value for v in values],
        counts=[v.count for v in values],
    )


def decomposition_verdict(decomp, C, epsilon=None, delta=None):
    """Verdict from the phi_m(C) sequence, same tail rules as the direct verdict"""
    trace = phi_trace(decomp, C)
    if not trace.ratios:
        raise EmptyRange(f"no nonempty blocks in the {decomp.f.name}/{decomp.g.name} decomposition")
    verdict = membership_verdict(trace, epsilon, delta)
    verdict.kind = 'decomposition'
    return verdict


def sup_phi_omega(decomp):
    """(max phi_m(omega), argmax m) over start_m <= m < m_max"""
    if decomp.start_m >= decomp.m_max:
        raise EmptyRange("decomposition stores no complete block")
    best_m, best = None, -1.0
    for m in range(decomp.start_m, decomp.m_max):
        a, b = decomp.k_seq[m], decomp.k_seq[m + 1]
        value = real_ratio(decomp.f.eval_big(b - a), decomp.weight_at(m))
        if value > best:
            best_m, best = m, value
    return best, best_m


def preimage_count_criterion(decomp, m):
    """f(|(f∘g)^{-1}([2^m, 2^{m+1}))|) / 2^m, the preimage count being k_{m+1} - k_m"""
    if decomp.form != 'pow2':
        raise ParameterError("preimage counts need the 2^m decomposition")
    a, b = decomp.interval(m)
    return real_ratio(decomp.f.eval_big(b - a), 2**m)


def _decomposition_points(f, g, horizon):
    try:
        decomp = build_decomposition(f, g, 4096, stop_above=horizon)
    except (BoundedModulus, NotMonotone):
        return []
    points = []
    for k in decomp.k_seq:
        if k > horizon:
            break
        points.extend((k - 1, k) if k > 0 else (k,))
    return points


def ratio_bounded_criterion(f, g, horizon):
    """(sup f(k)/f(g(k)), argmax) over the scan grid plus every k_m and k_m - 1 in range"""
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    points = set(scan_grid(g, horizon))
    points.update(k for k in _decomposition_points(f, g, horizon) if 1 <= k <= horizon)

    best, best_k = None, None
    for k in sorted(points):
        f_g = f.eval_big(g(k))
        if not f_g > 0:
            continue
        value = real_ratio(f.eval_big(k), f_g)
        if best is None or value > best:
            best, best_k = value, k
    if best is None:
        raise EmptyRange("f(g(k)) = 0 on the whole grid")
    return best, best_k


def _step_ratios(f, g, scale, horizon):
    """(k, f(g(k + floor(scale f(g(k))))) / f(g(k))) for grid k with f(g(k)) > 0"""
    F = composed(f, g)
    out = []
    for k in scan_grid(g, horizon):
        base = F(k)
        if not base > 0:
            continue
        jump = k + floor_real(scale * base)
        out.append((k, real_ratio(F(jump), base)))
    return out


def growth_criterion_pd3(f, g, M, L, horizon):
    """Grid points where f(g(k + floor(L f(g(k))))) / f(g(k)) > M fails"""
    if not M > 0 or not L > 0:
        raise ParameterError(f"growth criterion needs M > 0 and L > 0, got M={M} L={L}")
    return [k for k, r in _step_ratios(f, g, L, horizon) if not r > M]


def ts1_boundedness_test(f, g, M, epsilon, horizon):
    """Grid points where f(g(k + floor(eps f(g(k))))) / f(g(k)) exceeds M"""
    if not M > 0 or not epsilon > 0:
        raise ParameterError(f"boundedness test needs M > 0 and epsilon > 0, got M={M} epsilon={epsilon}")
    return [k for k, r in _step_ratios(f, g, epsilon, horizon) if r > M]


def phi_table(decomp, C=None):
    """Rows (m, k_m, phi_omega, phi_set) for export; phi_set only when C is given"""
    rows = []
    for m in range(decomp.start_m, decomp.m_max):
        a, b = decomp.k_seq[m], decomp.k_seq[m + 1]
        row = {
            'm': m,
            'k_m': a,
            'phi_omega': real_ratio(decomp.f.eval_big(b - a), decomp.weight_at(m)),
        }
        if C is not None:
            row['phi_set'] = phi(decomp, m, C).value
        rows.append(row)
    return rows
