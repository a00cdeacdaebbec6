"""
Witness constructions

Explicit sets, weights and measure ideals that separate or identify density
ideals: the square-root profile, vanishing-ratio interval witnesses, anchored
step weights, the growth-jump weight h and the g_alpha family built from it,
the two power-profile sets, and the Erdős–Ulam measure ideals with their
increasing-invariance pairs.

Everything here is a pure builder. Anchor searches scan the same grids the
density traces use, so a construction found at a horizon is verifiable at it.
"""

import itertools
import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import mpmath

from density import RatioTrace, geometric_schedule, liminf_ratio, membership_verdict, ratio_trace
from errors import (
    AnchorsNotFound,
    EmptyAnchors,
    EmptyRange,
    NoVanishingSubsequence,
    NotInCatalog,
    ParameterError,
)
from functions import (
    WeightFunction,
    floor_log2,
    parse_call,
    parse_number,
    power_of_two,
    ratio_evidence,
    real_ratio,
    scan_grid,
    value_lt,
    value_max,
)
from lab_config import LabConfig
from omega_sets import EMPTY, OMEGA, boolean_combo, finite_set, interval_union, profile_set

logger = logging.getLogger(__name__)


def integer_root(n, q):
    """floor(n^(1/q)) for integers n >= 0, q >= 1"""
    if n < 0 or q < 1:
        raise ParameterError(f"integer_root needs n >= 0 and q >= 1, got n={n} q={q}")
    if n < 2 or q == 1:
        return n
    with mpmath.workprec(n.bit_length() // q + 64):
        y = int(mpmath.floor(mpmath.root(mpmath.mpf(n), q)))
    while y**q > n:
        y -= 1
    while (y + 1)**q <= n:
        y += 1
    return y


def floor_power(k, exponent):
    """floor(k^exponent) for a rational exponent, exactly"""
    return integer_root(k**exponent.numerator, exponent.denominator)


# ---------------------------------------------------------------------------
# Profile sets
# ---------------------------------------------------------------------------

def example_e_set():
    """count(k) = floor(sqrt(k)): density zero, but not in Z(log1p)"""
    return profile_set(math.isqrt, 'sqrt')


def eec_case1_set(alpha):
    """count(k) = floor(k^(alpha/2)) for 0 < alpha < 1"""
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    exponent = Fraction(alpha).limit_denominator(1000) / 2
    return profile_set(lambda k: floor_power(k, exponent), f'eec1({alpha:g})')


LOG2_WEIGHT = WeightFunction('log2p', lambda k: floor_log2(k + 1), True, True, None)


def eec_case2_anchors(h, m_max):
    """Exponents e_m with k_m = 2^e_m, (1 + h(k_m))^(m+1) <= k_m and
    e_{m-1}(m+1) < e_m m, i.e. k_{m-1}^(1/m) < k_m^(1/(m+1))"""
    exponents = []
    for m in range(m_max):
        e = 1 if not exponents else exponents[-1] * (m + 1) // m + 1
        while (1 + h(power_of_two(e)))**(m + 1) > power_of_two(e):
            e += 1
            if e > LabConfig.MATERIALIZE_BITS:
                raise AnchorsNotFound(f"no anchor for block {m} below 2^{LabConfig.MATERIALIZE_BITS}")
        exponents.append(e)
    return exponents


def eec_case2_set(h=None, m_max=12):
    """Maximal profile with count(k) <= k^(1/(m+1)) - 1 on [k_m, k_{m+1}).

    Returns (set, anchors). With the default h(k) = floor(log2(1+k)) the set
    stays out of Z_h while its log-ratios against eeu3 fall like 2/(m+1)."""
    if m_max < 1:
        raise ParameterError(f"m_max must be >= 1, got {m_max}")
    h = h or LOG2_WEIGHT
    anchors = [1 << e for e in eec_case2_anchors(h, m_max)]

    def bound(k, m):
        return integer_root(k, m + 1) - 1

    def profile(k):
        m = max(bisect_right(anchors, k) - 1, 0)
        cap = bound(k, m)
        if m + 1 < len(anchors):
            cap = min(cap, bound(anchors[m + 1], m + 1))
        return max(cap, 0)

    return profile_set(profile, f'eec2({h.name})', check_points=anchors), anchors


# ---------------------------------------------------------------------------
# Vanishing-ratio witnesses
# ---------------------------------------------------------------------------

def _record_lows(points):
    """(k, r) pairs where r drops below every earlier ratio"""
    best = math.inf
    for k, r in points:
        if r < best:
            best = r
            yield k, r


def _weight_ratios(f, g, grid):
    for k in grid:
        f_g = f.eval_big(g(k))
        if k >= 1 and f_g > 0:
            yield k, real_ratio(f.eval_big(k), f_g)


def lo1_witness(f, g, m_max, horizon=None, threshold=None):
    """C = union of [k_m, 2k_m) over anchors where f(k)/f(g(k)) reaches new lows.

    Anchors are chosen greedily from the record lows of the ratio on the scan
    grid with k_{m+1} > 2k_m; a later record low at k <= 2k_m replaces k_m.
    For es1 the anchors are 2^(m!) from m = 2. C lies in Z_g(f) but not in Z(f)."""
    if m_max < 1:
        raise ParameterError(f"m_max must be >= 1, got {m_max}")
    horizon = horizon or power_of_two(LabConfig.MATERIALIZE_BITS)
    threshold = LabConfig.VANISHING_THRESHOLD if threshold is None else threshold
    grid = scan_grid(g, horizon)

    value, k_at = liminf_ratio(f, g, grid)
    if value >= threshold:
        raise NoVanishingSubsequence(
            f"f(k)/f(g(k)) for {f.name}/{g.name} stays >= {value:.4g} (at k={k_at}) on the grid up to {horizon}")

    anchors = []
    for k, _ in _record_lows(_weight_ratios(f, g, grid)):
        if anchors and k <= 2 * anchors[-1]:
            anchors[-1] = k
            continue
        if len(anchors) == m_max:
            break
        anchors.append(k)
    logger.info(f"lo1 witness {f.name}/{g.name}: {len(anchors)} anchors")
    witness = interval_union([(k, 2 * k) for k in anchors], f'lo1[{f.name},{g.name}]')
    return witness, anchors


def anchor_schedule(anchors):
    """k_m, 2k_m - 1, 2k_m and k_{m+1} - 1 for every anchor"""
    points = set()
    for i, k in enumerate(anchors):
        points.update((k, 2 * k - 1, 2 * k))
        if i + 1 < len(anchors):
            points.add(anchors[i + 1] - 1)
    return sorted(p for p in points if p >= 1)


def _check_anchors(anchors):
    anchors = [int(a) for a in anchors]
    if not anchors:
        raise EmptyAnchors("anchor sequence is empty")
    if anchors[0] < 0 or any(not a < b for a, b in zip(anchors, anchors[1:])):
        raise ParameterError("anchors must be nonnegative and strictly increasing")
    return anchors


def p1_weight(anchors):
    """g(k) = min{k_m : k <= k_m}; continues as the identity past the last anchor"""
    anchors = _check_anchors(anchors)
    last = anchors[-1]

    def evaluate(k):
        if k > last:
            return k
        return anchors[bisect_left(anchors, k)]

    def breakpoints(horizon):
        return [a + 1 for a in anchors if a + 1 <= horizon]

    return WeightFunction(f'p1[{len(anchors)}]', evaluate, True, True, breakpoints)


@dataclass
class UnionWitness:
    weight: WeightFunction
    anchors: list
    anchor_ratios: list
    verdict: object
    trace: Optional[RatioTrace] = field(default=None, repr=False)


def p1_union_witness(f, C, horizon, threshold=None, epsilon=None, delta=None):
    """A step weight g with C in Z_g(f), for C whose f(count(k))/f(k) dips toward 0.

    Anchors are the record lows of f(count(k))/f(k) past the first element;
    between anchors g jumps to the next anchor, so the g-ratio at k is
    bounded by the ratio at the next anchor."""
    threshold = LabConfig.VANISHING_THRESHOLD if threshold is None else threshold
    grid = geometric_schedule(horizon)

    def ratios():
        for k in grid:
            c = C.count(k)
            if c > 0:
                yield k, real_ratio(f.eval_big(c), f.eval_big(k))

    lows = list(_record_lows(ratios()))
    if not lows:
        raise EmptyRange(f"{C.name} has no elements below {horizon}")
    if lows[-1][1] >= threshold:
        raise NoVanishingSubsequence(
            f"f(count(k))/f(k) for {C.name} stays >= {lows[-1][1]:.4g} up to {horizon}")

    anchors = [k for k, _ in lows]
    g = p1_weight(anchors)
    schedule = sorted(set(k for k in grid if k <= anchors[-1]) | set(anchors))
    trace = ratio_trace(f, g, C, schedule)
    verdict = membership_verdict(trace, epsilon, delta)
    return UnionWitness(g, anchors, [r for _, r in lows], verdict, trace)


# ---------------------------------------------------------------------------
# Growth-jump weight and the g_alpha family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthAnchor:
    m: int
    k: int
    width: int      # floor(f(g(k)) / 2^m)
    ratio: float    # f(g(k + width)) / f(g(k))

    @property
    def end(self):
        return self.k + self.width


def _floor(x):
    if isinstance(x, mpmath.mpf):
        return int(mpmath.floor(x))
    return math.floor(x)


def ts1_anchors(f, g, horizon, m_start=2, max_anchors=None):
    """Grid points k_m (m = m_start, m_start+1, ...) with
    f(g(k_m + floor(f(g(k_m))/2^m))) / f(g(k_m)) > m and
    k_m > k_{m-1} + f(g(k_{m-1}))/2^(m-1)"""
    if m_start < 2:
        raise ParameterError(f"anchor numbering starts at m >= 2, got {m_start}")
    anchors = []
    m = m_start
    for k in scan_grid(g, horizon):
        if anchors:
            prev = anchors[-1]
            if not k - prev.k > f.eval_big(g(prev.k)) / 2**prev.m:
                continue
        base = f.eval_big(g(k))
        if not base > 0:
            continue
        width = _floor(base / 2**m)
        ratio = real_ratio(f.eval_big(g(k + width)), base)
        if ratio > m:
            anchors.append(GrowthAnchor(m, k, width, ratio))
            m += 1
            if max_anchors is not None and len(anchors) >= max_anchors:
                break

    if not anchors:
        raise AnchorsNotFound(f"no growth anchors for {f.name}/{g.name} up to {horizon}")
    logger.info(f"growth anchors {f.name}/{g.name}: {len(anchors)} found, last at m={anchors[-1].m}")
    return anchors


def ts1_weight(f, g, horizon=None, anchors=None):
    """h = g(k_m + width_m) on each I_m = [k_m, k_m + width_m], h = g elsewhere"""
    if anchors is None:
        if horizon is None:
            raise ParameterError("ts1_weight needs a horizon or explicit anchors")
        anchors = ts1_anchors(f, g, horizon)
    starts = [a.k for a in anchors]
    ends = [a.end for a in anchors]
    values = [g(a.end) for a in anchors]

    def evaluate(k):
        i = bisect_right(starts, k) - 1
        if i >= 0 and k <= ends[i]:
            return values[i]
        return g(k)

    def breakpoints(horizon):
        points = set(g.jump_points(horizon)) | set(starts) | {e + 1 for e in ends}
        return sorted(p for p in points if p <= horizon)

    return WeightFunction(f'ts1[{g.name}]', evaluate, g.is_nondecreasing, g.is_integer_valued, breakpoints)


def _check_bits(vector):
    bits = tuple(int(b) for b in vector)
    if any(b not in (0, 1) for b in bits):
        raise ParameterError(f"bit vectors hold 0/1 entries, got {vector!r}")
    return bits


def ps1_family(f, g, h, anchors, bit_vectors):
    """One g_alpha per bit vector: max{g, h} on [k_m, k_{m+1}) when alpha_m = 1, g otherwise.

    Blocks past the vector's length, and indices before the first anchor, use g."""
    anchors = _check_anchors(a.k if isinstance(a, GrowthAnchor) else a for a in anchors)
    evidence = ratio_evidence(f, g, h, anchors)
    if not any(r > 1 for _, r in evidence):
        raise ParameterError(f"{h.name} never exceeds {g.name} under {f.name} at the anchors")

    def member(bits):
        def evaluate(k):
            i = bisect_right(anchors, k) - 1
            if 0 <= i < len(bits) and bits[i]:
                return value_max(g(k), h(k))
            return g(k)

        def breakpoints(horizon):
            points = set(g.jump_points(horizon)) | set(h.jump_points(horizon)) | set(anchors)
            return sorted(p for p in points if p <= horizon)

        label = ''.join(map(str, bits))
        return WeightFunction(f'{g.name}[{label}]', evaluate,
                              g.is_nondecreasing and h.is_nondecreasing,
                              g.is_integer_valued and h.is_integer_valued, breakpoints)

    return [member(_check_bits(v)) for v in bit_vectors]


def antichain_bit_vectors(blocks, size):
    """Pairwise incomparable 0/1 vectors: each pair has a block where either one is 1 and the other 0"""
    weight = blocks // 2
    family = []
    for ones in itertools.combinations(range(blocks), weight):
        family.append(tuple(1 if i in ones else 0 for i in range(blocks)))
        if len(family) == size:
            return family
    raise ParameterError(f"only {len(family)} incomparable vectors of length {blocks}")


def raw_divergence(g_alpha, g_beta, anchors):
    """Anchors where g_alpha(k) / g_beta(k) exceeds 10^3, compared exactly"""
    return [k for k in anchors if value_lt(1000 * g_beta(k), g_alpha(k))]


# ---------------------------------------------------------------------------
# Erdős–Ulam measure ideals
# ---------------------------------------------------------------------------

SELECTOR_RULES = {
    'all': lambda j: True,
    'even': lambda j: j % 2 == 0,
    'odd': lambda j: j % 2 == 1,
    'squares': lambda j: math.isqrt(j)**2 == j,
}

_pd6_starts = [1]


def pd6_start(j):
    """k_0 = 1, k_{j+1} = k_j + j! + (j+1)!"""
    while len(_pd6_starts) <= j:
        i = len(_pd6_starts) - 1
        _pd6_starts.append(_pd6_starts[i] + math.factorial(i) + math.factorial(i + 1))
    return _pd6_starts[j]


@dataclass(frozen=True)
class MeasureIdealSpec:
    """Exh(sup_{l in L} mu_l) for measures mu_l with uniform atoms on [a_l, b_l)"""

    kind: str
    support: Callable = field(repr=False)     # l -> (a_l, b_l)
    atom: Callable = field(repr=False)        # l -> Fraction
    selector: object = 'all'
    first_index: int = 0

    @property
    def name(self):
        label = self.selector if isinstance(self.selector, str) else ','.join(map(str, self.selector))
        return f'{self.kind}[{label}]'

    def selects(self, j):
        if isinstance(self.selector, str):
            return j >= self.first_index and SELECTOR_RULES[self.selector](j)
        return j in self.selector

    def selected(self, j_max):
        if isinstance(self.selector, str):
            return [j for j in range(self.first_index, j_max + 1) if self.selects(j)]
        return sorted(j for j in self.selector if j <= j_max)

    def indices(self):
        """Selected indices in increasing order, lazily for rule selectors"""
        if isinstance(self.selector, str):
            return (j for j in itertools.count(self.first_index) if self.selects(j))
        return iter(sorted(self.selector))

    def supports(self):
        return (self.support(j) for j in self.indices())

    def mu(self, j, C):
        a, b = self.support(j)
        return self.atom(j) * (C.count(b) - C.count(a))

    def total_mass(self, j):
        a, b = self.support(j)
        return self.atom(j) * (b - a)


def _eeu_support(width):
    return lambda m: (1 << m, (1 << m) + width(m))


_EU_KINDS = {
    'pd6': (lambda j: (pd6_start(j), pd6_start(j) + math.factorial(j)),
            lambda j: Fraction(1, math.factorial(j)), 0),
    'eeu4': (_eeu_support(lambda m: m), lambda m: Fraction(1, m), 1),
    'eeu5': (_eeu_support(lambda m: m * m), lambda m: Fraction(1, m), 1),
}


def _parse_selector(args):
    if not args:
        return 'all'
    if len(args) == 1 and args[0] in SELECTOR_RULES:
        return args[0]
    try:
        return tuple(sorted({int(parse_number(a)) for a in args}))
    except (ParameterError, TypeError):
        raise ParameterError(f"bad selector {args!r}")


def eu_measure_ideal(kind, selector=None):
    """Measure ideal spec for 'pd6', 'pd6(1,3,5)', 'pd6(even)', 'eeu4' or 'eeu5'"""
    head, args = parse_call(kind)
    if head not in _EU_KINDS:
        raise NotInCatalog(f"Unknown measure ideal: {kind}")
    support, atom, first = _EU_KINDS[head]
    if selector is None:
        selector = _parse_selector(args)
    elif not isinstance(selector, str):
        selector = tuple(sorted(int(j) for j in selector))
    if isinstance(selector, str) and selector not in SELECTOR_RULES:
        raise ParameterError(f"unknown selector rule {selector!r}")
    if not isinstance(selector, str) and any(j < first for j in selector):
        raise ParameterError(f"{head} indices start at {first}")
    return MeasureIdealSpec(head, support, atom, selector, first)


def eu_block_sets(spec):
    """(C, D): C fills each selected support up to mass 1, D is the block of equal
    length just before it. D dominates C in prefix counts, yet C is out and D is in."""
    def blocks(before):
        def factory():
            for j in spec.indices():
                a, _ = spec.support(j)
                w = int(1 / spec.atom(j))
                yield (a - w, a) if before else (a, a + w)
        return factory

    return (interval_union(blocks(False), f'{spec.name}-C'),
            interval_union(blocks(True), f'{spec.name}-D'))


def measure_values(spec, C, j_max):
    """{l: mu_l(C)} for the selected l <= j_max, exact"""
    return {j: spec.mu(j, C) for j in spec.selected(j_max)}


def exh_verdict(spec, C, j_max, epsilon=None, delta=None):
    """Verdict on sup_{l in L, l >= j} mu_l(C) for j up to j_max"""
    if j_max < 2:
        raise ParameterError(f"j_max must be >= 2, got {j_max}")
    values = measure_values(spec, C, j_max)
    indices = list(range(spec.first_index, j_max + 1))

    tail_sups, running = [], Fraction(0)
    for j in reversed(indices):
        running = max(running, values.get(j, Fraction(0)))
        tail_sups.append(running)
    tail_sups.reverse()

    trace = RatioTrace(spec.name, 'sup mu_l', C.name, indices, [float(s) for s in tail_sups])
    verdict = membership_verdict(trace, epsilon, delta)
    verdict.kind = 'exhaustive'
    return verdict


# ---------------------------------------------------------------------------
# Dominance
# ---------------------------------------------------------------------------

def increasing_dominance_check(B, C, horizon):
    """(True, None) when |B ∩ [0,k-1]| <= |C ∩ [0,k-1]| for every k <= horizon,
    otherwise (False, first violating k).

    Violations can only start right after an element of B; inside a run of B
    the difference count_B - count_C never decreases, so each run is bisected."""
    horizon = int(horizon)
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")

    def excess(k):
        return B.count(k) - C.count(k)

    for a, b in B.runs(horizon):
        lo, hi = a + 1, min(b, horizon)
        if excess(hi) <= 0:
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if excess(mid) > 0:
                hi = mid
            else:
                lo = mid + 1
        return False, lo
    return True, None


# ---------------------------------------------------------------------------
# Named sets
# ---------------------------------------------------------------------------

def _squares_profile(k):
    return 0 if k == 0 else math.isqrt(k - 1) + 1


_NAMED_SETS = {
    'empty': lambda: EMPTY,
    'omega': lambda: OMEGA,
    'sqrt': example_e_set,
    'evens': lambda: profile_set(lambda k: (k + 1) // 2, 'evens'),
    'squares': lambda: profile_set(_squares_profile, 'squares'),
    'pow2': lambda: profile_set(lambda k: (k - 1).bit_length() if k else 0, 'pow2'),
    'fourth-root': lambda: profile_set(lambda k: integer_root(k, 4), 'fourth-root'),
}

# sets the weight-family checks compare verdicts on
TEST_SET_NAMES = ('empty', 'sqrt', 'evens', 'eu-c(eeu4)', 'finite(1,2,3,50)')


def set_from_spec(spec):
    """Set spec: a name ('sqrt', 'evens', ...), a call ('eec1(0.5)', 'eec2(12)',
    'eu-c(eeu4)', 'eu-d(pd6(even))', 'finite(1,5,9)') or a JSON object with
    'elements', 'intervals' or 'op'/'left'/'right'"""
    if isinstance(spec, dict):
        if 'elements' in spec:
            return finite_set(spec['elements'], spec.get('label', 'finite'))
        if 'intervals' in spec:
            return interval_union([tuple(iv) for iv in spec['intervals']], spec.get('label', 'intervals'))
        if 'op' in spec:
            return boolean_combo(spec['op'], set_from_spec(spec['left']), set_from_spec(spec['right']))
        if 'name' in spec:
            return set_from_spec(spec['name'])
        raise ParameterError(f"Bad set spec: {spec!r}")

    head, args = parse_call(spec)
    if head in _NAMED_SETS and not args:
        return _NAMED_SETS[head]()
    if head == 'finite':
        return finite_set([int(parse_number(a)) for a in args], spec)
    if head == 'eec1' and len(args) == 1:
        return eec_case1_set(float(parse_number(args[0])))
    if head == 'eec2':
        return eec_case2_set(m_max=int(parse_number(args[0])) if args else 12)[0]
    if head in ('eu-c', 'eu-d') and len(args) == 1:
        C, D = eu_block_sets(eu_measure_ideal(args[0]))
        return C if head == 'eu-c' else D
    raise NotInCatalog(f"Unknown set: {spec}")
