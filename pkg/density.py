"""
Density ratio traces and finite-horizon membership verdicts

A trace samples r_k = f(|C ∩ [0,k-1]|) / f(g(k)) on an index schedule.
Verdicts read the tail (last half) of a trace: the limsup form decides
Z_g(f), the liminf form decides the lower ideals. Verdicts are labels
for what was observed up to the horizon, never proofs.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from errors import NotInCatalog, ParameterError, RepresentationTooWeak
from functions import (
    PowerOfTwoOffset,
    as_real,
    catalog_modulus,
    catalog_weight,
    geometric_grid,
    power_of_two,
    real_ratio,
    scaled,
    scan_grid,
)
from lab_config import LabConfig

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    LIKELY_IN = 'LIKELY_IN'
    LIKELY_OUT = 'LIKELY_OUT'
    UNDECIDED = 'UNDECIDED'


@dataclass
class RatioTrace:
    f_name: str
    g_name: str
    set_name: str
    sample_indices: list
    ratios: list
    counts: list = field(default_factory=list)
    f_counts: list = field(default_factory=list)
    f_gs: list = field(default_factory=list)
    skipped: list = field(default_factory=list)   # indices with f(g(k)) = 0
    skipped_prefix: Optional[object] = None       # first index with f(g(k)) > 0

    def __len__(self):
        return len(self.ratios)

    @property
    def horizon(self):
        return self.sample_indices[-1] if self.sample_indices else 0

    def tail(self):
        """(indices, ratios) over the last TAIL_FRACTION of the samples"""
        n = len(self.ratios)
        start = min(int(n * (1 - LabConfig.TAIL_FRACTION)), max(n - 1, 0))
        return self.sample_indices[start:], self.ratios[start:]


@dataclass(frozen=True)
class OutWitness:
    indices: tuple
    ratios: tuple
    delta: float


@dataclass
class MembershipVerdict:
    verdict: Verdict
    horizon: object
    tail_sup: float
    epsilon: float
    delta: float
    out_witness: Optional[OutWitness] = None
    tail_inf: Optional[float] = None
    samples: int = 0
    kind: str = 'limsup'

    @property
    def decided(self):
        return self.verdict is not Verdict.UNDECIDED


def _check_thresholds(epsilon, delta):
    epsilon = LabConfig.DEFAULT_EPSILON if epsilon is None else epsilon
    delta = LabConfig.DEFAULT_DELTA if delta is None else delta
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not delta > epsilon:
        raise ParameterError(f"delta must exceed epsilon, got delta={delta} epsilon={epsilon}")
    return epsilon, delta


def _check_schedule(schedule):
    points = list(schedule)
    if not points:
        raise ParameterError("schedule is empty")
    for a, b in zip(points, points[1:]):
        if not a < b:
            raise ParameterError(f"schedule must be strictly increasing, got {a} then {b}")
    if points[0] < 0:
        raise ParameterError("schedule indices must be >= 0")
    return points


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

def geometric_schedule(horizon, ratio=None, start=1):
    return geometric_grid(horizon, ratio, start)


def _sequence_schedule(term, horizon, first=1):
    points, m = [], first
    while True:
        k = term(m)
        if k > horizon:
            return points
        if not points or k > points[-1]:
            points.append(k)
        m += 1


SCHEDULES = {
    'geometric': lambda horizon, g, start: geometric_grid(horizon, start=start),
    'scan': lambda horizon, g, start: scan_grid(g, horizon, start=start),
    'factorial_exp': lambda horizon, g, start: _sequence_schedule(lambda m: power_of_two(math.factorial(m)), horizon),
    'factorial': lambda horizon, g, start: _sequence_schedule(math.factorial, horizon),
    'pow4': lambda horizon, g, start: _sequence_schedule(lambda m: power_of_two(2 * m), horizon),
    'pow2': lambda horizon, g, start: _sequence_schedule(power_of_two, horizon, first=0),
}


def named_schedule(name, horizon, g=None, start=1):
    """Index schedule by name, or an explicit comma list / sequence of indices"""
    if not isinstance(name, str):
        return _check_schedule(int(k) if not isinstance(k, PowerOfTwoOffset) else k for k in name)
    if name == 'linear':
        if horizon > LabConfig.enumeration_budget():
            raise RepresentationTooWeak(f"linear schedule up to {horizon} exceeds the enumeration budget")
        return list(range(max(start, 1), int(horizon) + 1))
    if name in SCHEDULES:
        if name == 'scan' and g is None:
            raise ParameterError("scan schedule needs a weight function")
        return _check_schedule(SCHEDULES[name](horizon, g, start))
    if ',' in name or name.strip().isdigit():
        try:
            return _check_schedule(int(part) for part in name.split(','))
        except ValueError as e:
            raise ParameterError(f"Bad schedule list {name!r}: {e}") from e
    raise NotInCatalog(f"Unknown schedule: {name}")


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

def _sample(f, g, C, k):
    c = C.count(k)
    f_g = f.eval_big(g(k))
    f_c = f.eval_big(c)
    return k, c, f_c, f_g


def ratio_trace(f, g, C, schedule, n_jobs=1):
    """Exact counts and f-ratios at each schedule index; indices with f(g(k)) = 0 are skipped"""
    points = _check_schedule(schedule)
    if n_jobs == 1:
        samples = [_sample(f, g, C, k) for k in points]
    else:
        samples = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(_sample)(f, g, C, k) for k in points)

    trace = RatioTrace(f.name, g.name, C.name, [], [])
    for k, c, f_c, f_g in samples:
        if not f_g > 0:
            trace.skipped.append(k)
            continue
        if trace.skipped_prefix is None:
            trace.skipped_prefix = k
        trace.sample_indices.append(k)
        trace.counts.append(c)
        trace.f_counts.append(as_real(f_c))
        trace.f_gs.append(as_real(f_g))
        trace.ratios.append(real_ratio(f_c, f_g))

    if trace.skipped:
        logger.debug(f"trace {f.name}/{g.name}/{C.name}: skipped {len(trace.skipped)} indices with f(g(k)) = 0")
    return trace


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

def membership_verdict(trace, epsilon=None, delta=None):
    """limsup verdict: LIKELY_IN when the tail sup is below epsilon,
    LIKELY_OUT when at least OUT_FRACTION of tail samples reach delta"""
    epsilon, delta = _check_thresholds(epsilon, delta)
    if not trace.ratios:
        raise ParameterError("cannot judge an empty trace")

    indices, ratios = trace.tail()
    values = np.asarray(ratios, dtype=float)
    tail_sup = float(values.max())
    hit_mask = values >= delta
    hits = [(k, r) for k, r, hit in zip(indices, ratios, hit_mask) if hit]

    witness = None
    if tail_sup < epsilon:
        verdict = Verdict.LIKELY_IN
    elif len(hits) >= LabConfig.OUT_FRACTION * len(ratios):
        verdict = Verdict.LIKELY_OUT
        witness = OutWitness(tuple(k for k, _ in hits), tuple(r for _, r in hits), delta)
    else:
        verdict = Verdict.UNDECIDED

    return MembershipVerdict(
        verdict=verdict,
        horizon=trace.horizon,
        tail_sup=tail_sup,
        epsilon=epsilon,
        delta=delta,
        out_witness=witness,
        tail_inf=float(values.min()),
        samples=len(ratios),
    )


def lower_verdict(trace, epsilon=None, delta=None):
    """liminf verdict for the lower ideals: LIKELY_IN when some tail ratio dips below
    epsilon, LIKELY_OUT when every tail ratio stays at or above delta"""
    epsilon, delta = _check_thresholds(epsilon, delta)
    if not trace.ratios:
        raise ParameterError("cannot judge an empty trace")

    indices, ratios = trace.tail()
    values = np.asarray(ratios, dtype=float)
    tail_inf = float(values.min())
    witness = None
    if tail_inf < epsilon:
        verdict = Verdict.LIKELY_IN
    elif tail_inf >= delta:
        verdict = Verdict.LIKELY_OUT
        witness = OutWitness(tuple(indices), tuple(ratios), delta)
    else:
        verdict = Verdict.UNDECIDED

    return MembershipVerdict(
        verdict=verdict,
        horizon=trace.horizon,
        tail_sup=float(values.max()),
        epsilon=epsilon,
        delta=delta,
        out_witness=witness,
        tail_inf=tail_inf,
        samples=len(ratios),
        kind='liminf',
    )


def liminf_ratio(f, g, schedule):
    """min of f(k)/f(g(k)) over the schedule tail, with the index where it occurs"""
    points = _check_schedule(schedule)
    values = []
    for k in points:
        f_g = f.eval_big(g(k))
        if f_g > 0:
            values.append((k, real_ratio(f.eval_big(k), f_g)))
    if not values:
        raise ParameterError("f(g(k)) = 0 at every schedule index")
    tail = values[min(int(len(values) * (1 - LabConfig.TAIL_FRACTION)), len(values) - 1):]
    k, value = min(tail, key=lambda kv: kv[1])
    return value, k


def _rank_schedule(total, m_max):
    ranks = [x - 1 for x in geometric_grid(total)]
    return ranks[-m_max:]


def membership_on_enumeration(f, g, C, m_max, horizon=None, epsilon=None, delta=None):
    """Verdict from ratios f(m)/f(g(c_m)) at the set's own elements c_m (m = rank).

    Without a horizon the first m_max elements are used; with one, up to m_max
    ranks spread geometrically over the elements below the horizon."""
    if not g.is_nondecreasing:
        raise ParameterError(f"enumeration criterion needs a nondecreasing weight, {g.name} is not")
    if m_max < 1:
        raise ParameterError(f"m_max must be >= 1, got {m_max}")
    epsilon, delta = _check_thresholds(epsilon, delta)

    size = C.known_size()
    if C.is_finite and f.is_unbounded:
        # finite sets have ratios f(|C|)/f(g(k)) -> 0 past their last element
        return MembershipVerdict(Verdict.LIKELY_IN, horizon or 0, 0.0, epsilon, delta, tail_inf=0.0, kind='enumeration')

    if horizon is None:
        ranks = list(range(m_max if size is None else min(m_max, size)))
    else:
        total = C.count(horizon)
        ranks = _rank_schedule(total, m_max) if total else []
    if not ranks:
        raise ParameterError(f"{C.name} has no elements to enumerate")

    elements, counts, ratios = [], [], []
    for m in ranks:
        c = C.nth_element(m)
        f_g = f.eval_big(g(c))
        if f_g > 0:
            elements.append(c)
            counts.append(m)
            ratios.append(real_ratio(f.eval_big(m), f_g))
    if not ratios:
        raise ParameterError(f"f(g(c)) = 0 at every sampled element of {C.name}")

    trace = RatioTrace(f.name, g.name, C.name, elements, ratios, counts=counts)
    verdict = membership_verdict(trace, epsilon, delta)
    verdict.kind = 'enumeration'
    return verdict


def classical_verdicts(C, horizon, f=None, epsilon=None, delta=None, schedule=None):
    """Verdicts for Z, Z_lower, Z(f) and Z_lower(f), from identity-weight traces"""
    if horizon < 100:
        raise ParameterError(f"classical verdicts need horizon >= 100, got {horizon}")
    f = catalog_modulus('log1p') if f is None else f
    identity_f, identity_g = catalog_modulus('identity'), catalog_weight('identity')
    points = geometric_grid(horizon) if schedule is None else _check_schedule(schedule)

    plain = ratio_trace(identity_f, identity_g, C, points)
    modular = ratio_trace(f, identity_g, C, points)
    return {
        'Z': membership_verdict(plain, epsilon, delta),
        'Z_lower': lower_verdict(plain, epsilon, delta),
        'Z(f)': membership_verdict(modular, epsilon, delta),
        'Z_lower(f)': lower_verdict(modular, epsilon, delta),
    }


# ---------------------------------------------------------------------------
# Identities checked on traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingComparison:
    factor: float
    base: MembershipVerdict
    scaled: MembershipVerdict

    @property
    def consistent(self):
        # only an IN against OUT split contradicts Z_g(f) = Z_{a g}(f)
        pair = {self.base.verdict, self.scaled.verdict}
        return pair != {Verdict.LIKELY_IN, Verdict.LIKELY_OUT}


def scaling_comparison(f, g, C, a, schedule, epsilon=None, delta=None):
    """Verdicts under g and under a*g for a >= 1"""
    if a < 1:
        raise ParameterError(f"scaling factor must be >= 1, got {a}")
    points = _check_schedule(schedule)
    base = membership_verdict(ratio_trace(f, g, C, points), epsilon, delta)
    other = membership_verdict(ratio_trace(f, scaled(a, g), C, points), epsilon, delta)
    return ScalingComparison(a, base, other)


def power_modulus_deviation(beta, g, C, schedule):
    """max |r_k(x^beta) - r_k(identity)^beta| over the schedule"""
    power = catalog_modulus(f"power({beta})")
    identity = catalog_modulus('identity')
    points = _check_schedule(schedule)
    powered = ratio_trace(power, g, C, points)
    plain = ratio_trace(identity, g, C, points)
    if powered.sample_indices != plain.sample_indices:
        raise ParameterError("traces sampled different indices")
    return max((abs(a - b ** beta) for a, b in zip(powered.ratios, plain.ratios)), default=0.0)
