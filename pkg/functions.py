"""
Modulus functions f and weight functions g

Catalog of every named function the lab works with, plus sampled
validation of the modulus axioms and finite evidence that a weight
belongs to G. Huge powers of two (factorial-exponent weights reach 2^(20!)) are
carried as PowerOfTwoOffset values instead of materialized ints.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Callable, Optional

import mpmath

from errors import NotInCatalog, ParameterError, RepresentationTooWeak
from lab_config import LabConfig

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
FLOAT_SAFE_BITS = 1000
HARD_MATERIALIZE_BITS = 2**24
MAX_DIVERGENCE_BOUND = 10**30


@total_ordering
@dataclass(frozen=True, eq=False)
class PowerOfTwoOffset:
    """The integer 2**exponent + offset with |offset| < 2**(exponent - 2)"""
    exponent: int
    offset: int = 0

    def __post_init__(self):
        if self.exponent < 3:
            raise ParameterError(f"exponent {self.exponent} too small for a symbolic power of two")
        if abs(self.offset).bit_length() > self.exponent - 2:
            raise ParameterError(f"offset {self.offset} too large for 2^{self.exponent}")

    def _cmp(self, other):
        if isinstance(other, PowerOfTwoOffset):
            if self.exponent != other.exponent:
                return 1 if self.exponent > other.exponent else -1
            return (self.offset > other.offset) - (self.offset < other.offset)
        if isinstance(other, (int, Fraction)):
            # sign of 2^e - (other - offset)
            d = other - self.offset
            if d <= 0:
                return 1
            bits = math.floor(d).bit_length() if isinstance(d, Fraction) else d.bit_length()
            if bits <= self.exponent:
                return 1
            if d == 1 << self.exponent:
                return 0
            return -1
        mine, theirs = self.to_mpf(), mpmath.mpf(other)
        return (mine > theirs) - (mine < theirs)

    def __eq__(self, other):
        if isinstance(other, (PowerOfTwoOffset, int, float, Fraction)) or isinstance(other, mpmath.mpf):
            return self._cmp(other) == 0
        return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __hash__(self):
        return hash((self.exponent, self.offset))

    def __add__(self, other):
        if not isinstance(other, int):
            return NotImplemented
        return power_of_two(self.exponent, self.offset + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PowerOfTwoOffset) and other.exponent == self.exponent:
            return self.offset - other.offset
        if not isinstance(other, int):
            return NotImplemented
        return power_of_two(self.exponent, self.offset - other)

    def __int__(self):
        if self.exponent > HARD_MATERIALIZE_BITS:
            raise RepresentationTooWeak(f"refusing to materialize {self}")
        return (1 << self.exponent) + self.offset

    def bit_length(self):
        return floor_log2(self) + 1

    def to_mpf(self):
        return mpmath.ldexp(mpmath.mpf(1), self.exponent) + self.offset

    def __str__(self):
        if self.offset:
            return f"2^{self.exponent}{self.offset:+d}"
        return f"2^{self.exponent}"


def power_of_two(exponent, offset=0):
    """2**exponent + offset, as an int when small enough to build"""
    if exponent <= LabConfig.MATERIALIZE_BITS:
        return (1 << exponent) + offset
    return PowerOfTwoOffset(exponent, offset)


def floor_log2(n):
    if isinstance(n, PowerOfTwoOffset):
        return n.exponent if n.offset >= 0 else n.exponent - 1
    if n < 1:
        raise ParameterError(f"floor_log2 needs n >= 1, got {n}")
    return int(n).bit_length() - 1


def to_mpf(x):
    if isinstance(x, PowerOfTwoOffset):
        return x.to_mpf()
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def as_real(x):
    """float when representable, otherwise an mpmath mpf"""
    if isinstance(x, float):
        return x
    if isinstance(x, PowerOfTwoOffset):
        return x.to_mpf()
    if isinstance(x, int):
        return float(x) if x.bit_length() < FLOAT_SAFE_BITS else mpmath.mpf(x)
    if isinstance(x, Fraction):
        return float(x) if abs(x) < 2**FLOAT_SAFE_BITS else to_mpf(x)
    if isinstance(x, mpmath.mpf):
        return float(x) if abs(x) < 1e300 else x
    return float(x)


def real_ratio(num, den):
    """num/den as a float for any mix of float, int and mpf values"""
    if isinstance(num, float) and isinstance(den, float):
        return num / den
    return float(to_mpf(num) / to_mpf(den))


def is_zero(x):
    return x == 0 if not isinstance(x, PowerOfTwoOffset) else False


# ---------------------------------------------------------------------------
# Modulus functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusFunction:
    name: str
    eval_real: Callable[[float], float]
    mp_eval: Callable = field(repr=False)
    is_unbounded: bool = True
    big_eval: Optional[Callable] = field(default=None, repr=False)

    def eval_big(self, n):
        """f(n) for an int, Fraction, mpf or PowerOfTwoOffset argument"""
        if self.big_eval is not None:
            return self.big_eval(n)
        if isinstance(n, (int, float, Fraction)) and abs(n) < 2**53:
            return self.eval_real(float(n))
        return as_real(self.mp_eval(to_mpf(n)))

    def __call__(self, x):
        return self.eval_big(x)


def _identity_big(n):
    return as_real(n)


def _log1p_big(n):
    # ln(1+n) = b*ln2 + ln(n / 2^b) for a b-bit n; the 1 is below double precision
    if isinstance(n, PowerOfTwoOffset):
        correction = mpmath.log1p(mpmath.ldexp(mpmath.mpf(n.offset + 1), -n.exponent))
        return n.exponent * LN2 + float(correction)
    if isinstance(n, int):
        if n < 2**53:
            return math.log1p(n)
        b = n.bit_length()
        top = n >> (b - 53)
        return b * LN2 + math.log(top / 2.0**53)
    if isinstance(n, mpmath.mpf):
        return as_real(mpmath.log1p(n))
    return math.log1p(float(n))


def _bounded_ratio_big(n):
    if isinstance(n, (int, float, Fraction)) and abs(n) < 2**53:
        x = float(n)
        return x / (1.0 + x)
    return as_real(1 - 1 / (1 + to_mpf(n)))


def _power_modulus(beta):
    if not 0 < beta < 1:
        raise ParameterError(f"power modulus needs beta in (0, 1), got {beta}")
    return ModulusFunction(
        name=f"power({beta})",
        eval_real=lambda x: x ** beta,
        mp_eval=lambda x: mpmath.power(x, beta),
    )


_MODULUS_CATALOG = {
    'identity': lambda: ModulusFunction('identity', lambda x: x, lambda x: x, True, _identity_big),
    'log1p': lambda: ModulusFunction('log1p', math.log1p, mpmath.log1p, True, _log1p_big),
    'bounded_ratio': lambda: ModulusFunction(
        'bounded_ratio', lambda x: x / (1.0 + x), lambda x: x / (1 + x), False, _bounded_ratio_big),
}


def catalog_modulus(name):
    """Look up a catalog modulus: identity, log1p, power(beta) or bounded_ratio"""
    if isinstance(name, ModulusFunction):
        return name
    head, args = parse_call(name)
    if head == 'power':
        if len(args) != 1:
            raise ParameterError(f"power takes one argument: {name}")
        return _power_modulus(float(parse_number(args[0])))
    if head in _MODULUS_CATALOG and not args:
        return _MODULUS_CATALOG[head]()
    raise NotInCatalog(f"Unknown modulus function: {name}")


def custom_modulus(name, func, is_unbounded=True):
    """Wrap a user-supplied real function (validated by sampling, not trusted)"""
    return ModulusFunction(
        name=name,
        eval_real=func,
        mp_eval=lambda x: mpmath.mpf(func(float(x))),
        is_unbounded=is_unbounded,
    )


# ---------------------------------------------------------------------------
# Weight functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightFunction:
    name: str
    eval: Callable = field(repr=False)
    is_nondecreasing: bool = True
    is_integer_valued: bool = True
    # indices k <= horizon where g(k) != g(k-1); None when g moves at every step
    breakpoints: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, k):
        return self.eval(k)

    def jump_points(self, horizon):
        if self.breakpoints is None:
            return []
        return [b for b in self.breakpoints(horizon) if b <= horizon]


def value_lt(a, b):
    """a < b for weight values that may mix ints, floats, mpf and symbolic powers"""
    if type(a) is type(b) or not any(isinstance(v, (PowerOfTwoOffset, mpmath.mpf)) for v in (a, b)):
        return a < b
    if isinstance(a, PowerOfTwoOffset) and not isinstance(b, mpmath.mpf):
        return a < b
    if isinstance(b, PowerOfTwoOffset) and not isinstance(a, mpmath.mpf):
        return b > a
    return to_mpf(a) < to_mpf(b)


def value_max(a, b):
    return b if value_lt(a, b) else a


def _factorial_level(t):
    """Largest m >= 1 with m! <= t (t >= 1)"""
    m, next_fact = 1, 2
    while next_fact <= t:
        m += 1
        next_fact *= m + 1
    return m


def _identity_weight():
    return WeightFunction('identity', lambda k: k, True, True, None)


def _es1_eval(k):
    if k <= 1:
        return int(k)
    m = _factorial_level(floor_log2(k))
    return power_of_two(math.factorial(m + 1))


def _es1_breakpoints(horizon):
    points, m = [1], 1
    while True:
        b = power_of_two(math.factorial(m))
        if b > horizon:
            return points
        points.append(b)
        m += 1


def _eeu_eval(k):
    if k == 0:
        return 0
    m, fact = 1, 1
    while fact * (m + 1) <= k:
        m += 1
        fact *= m
    return fact * (m + 1)


def _eeu_breakpoints(horizon):
    points, m, fact = [], 1, 1
    while fact <= horizon:
        points.append(fact)
        m += 1
        fact *= m
    return points


def _eeu3_eval(k):
    # g(k) = 1 for k <= 4, 2^m for 4^m < k <= 4^(m+1), m >= 1
    if k <= 4:
        return 1
    return power_of_two(floor_log2(k - 1) // 2)


def _eeu3_breakpoints(horizon):
    points, m = [], 1
    while True:
        b = power_of_two(2 * m, 1)
        if b > horizon:
            return points
        points.append(b)
        m += 1


_WEIGHT_CATALOG = {
    'identity': _identity_weight,
    'es1': lambda: WeightFunction('es1', _es1_eval, True, True, _es1_breakpoints),
    'eeu': lambda: WeightFunction('eeu', _eeu_eval, True, True, _eeu_breakpoints),
    'eeu3': lambda: WeightFunction('eeu3', _eeu3_eval, True, True, _eeu3_breakpoints),
}


def scaled(a, g):
    """a*g for a real a > 0"""
    if a <= 0:
        raise ParameterError(f"scale factor must be positive, got {a}")

    def evaluate(k):
        v = g(k)
        if isinstance(v, (PowerOfTwoOffset, mpmath.mpf)):
            return to_mpf(v) * a
        return a * v

    return WeightFunction(
        name=f"scaled({a},{g.name})",
        eval=evaluate,
        is_nondecreasing=g.is_nondecreasing,
        is_integer_valued=g.is_integer_valued and isinstance(a, int),
        breakpoints=g.breakpoints,
    )


def floor_composed(f, a, g):
    """k -> floor(f(a*g(k)))"""
    inner = scaled(a, g)

    def evaluate(k):
        v = f.eval_big(inner(k))
        if isinstance(v, mpmath.mpf):
            return int(mpmath.floor(v))
        return int(math.floor(v))

    return WeightFunction(
        name=f"floor_composed({f.name},{a},{g.name})",
        eval=evaluate,
        is_nondecreasing=g.is_nondecreasing,
        is_integer_valued=True,
        breakpoints=g.breakpoints,
    )


def pointwise_max(g, h):
    """k -> max(g(k), h(k))"""
    if g.breakpoints is not None and h.breakpoints is not None:
        def breakpoints(horizon):
            return sorted(set(g.breakpoints(horizon)) | set(h.breakpoints(horizon)))
    else:
        breakpoints = None

    return WeightFunction(
        name=f"max({g.name},{h.name})",
        eval=lambda k: value_max(g(k), h(k)),
        is_nondecreasing=g.is_nondecreasing and h.is_nondecreasing,
        is_integer_valued=g.is_integer_valued and h.is_integer_valued,
        breakpoints=breakpoints,
    )


def tabulated(values, name=None):
    """Table for k < len(values), continued as values[-1] + (k - len(values) + 1)"""
    table = tuple(values)
    if not table:
        raise ParameterError("tabulated weight needs at least one value")
    if any(v < 0 for v in table):
        raise ParameterError("tabulated weight values must be nonnegative")
    n = len(table)

    def evaluate(k):
        if k < n:
            return table[int(k)]
        return table[-1] + (k - n + 1)

    return WeightFunction(
        name=name or f"tabulated[{n}]",
        eval=evaluate,
        is_nondecreasing=all(a <= b for a, b in zip(table, table[1:])),
        is_integer_valued=all(isinstance(v, int) for v in table),
        breakpoints=None,
    )


def catalog_weight(name):
    """Look up a catalog weight by name or shorthand such as 'scaled(3,eeu)'"""
    if isinstance(name, WeightFunction):
        return name
    head, args = parse_call(name)
    if head in _WEIGHT_CATALOG and not args:
        return _WEIGHT_CATALOG[head]()
    if head == 'scaled' and len(args) == 2:
        return scaled(parse_number(args[0]), catalog_weight(args[1]))
    if head == 'floor_composed' and len(args) == 3:
        return floor_composed(catalog_modulus(args[0]), parse_number(args[1]), catalog_weight(args[2]))
    if head == 'max' and len(args) == 2:
        return pointwise_max(catalog_weight(args[0]), catalog_weight(args[1]))
    if head == 'tabulated' and args:
        return tabulated([parse_number(a) for a in args])
    raise NotInCatalog(f"Unknown weight function: {name}")


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------

_CALL_RE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*(?:\((.*)\))?\s*$', re.S)


def parse_call(text):
    """'name(a,b(c,d))' -> ('name', ['a', 'b(c,d)'])"""
    if not isinstance(text, str):
        raise ParameterError(f"Expected a name, got {text!r}")
    match = _CALL_RE.match(text)
    if not match:
        raise ParameterError(f"Cannot parse {text!r}")
    head, inner = match.group(1), match.group(2)
    if inner is None or not inner.strip():
        return head, []

    args, depth, current = [], 0, []
    for ch in inner:
        if ch in '([':
            depth += 1
        elif ch in ')]':
            depth -= 1
            if depth < 0:
                raise ParameterError(f"Unbalanced parentheses in {text!r}")
        if ch == ',' and depth == 0:
            args.append(''.join(current).strip())
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ParameterError(f"Unbalanced parentheses in {text!r}")
    args.append(''.join(current).strip())
    return head, args


def parse_number(text):
    if isinstance(text, (int, float)):
        return text
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"Not a number: {text!r}")


def modulus_from_spec(spec):
    """{"kind":"modulus","name":"log1p"} or a catalog name string"""
    if isinstance(spec, (str, ModulusFunction)):
        return catalog_modulus(spec)
    if not isinstance(spec, dict):
        raise ParameterError(f"Bad modulus spec: {spec!r}")
    if spec.get('kind', 'modulus') != 'modulus':
        raise ParameterError(f"Expected a modulus spec, got kind={spec.get('kind')!r}")
    name = spec.get('name')
    if name == 'power' and 'beta' in spec:
        return _power_modulus(float(spec['beta']))
    if name is None:
        raise ParameterError(f"Modulus spec needs a name: {spec!r}")
    return catalog_modulus(name)


def weight_from_spec(spec):
    """Weight spec: catalog name, shorthand string, or JSON object (max/scaled/floor_composed/tabulated)"""
    if isinstance(spec, (str, WeightFunction)):
        return catalog_weight(spec)
    if not isinstance(spec, dict):
        raise ParameterError(f"Bad weight spec: {spec!r}")
    if spec.get('kind', 'weight') != 'weight':
        raise ParameterError(f"Expected a weight spec, got kind={spec.get('kind')!r}")

    op = spec.get('op') or spec.get('name')
    if op == 'max':
        args = spec.get('args') or []
        if len(args) < 2:
            raise ParameterError("max needs at least two args")
        result = weight_from_spec(args[0])
        for arg in args[1:]:
            result = pointwise_max(result, weight_from_spec(arg))
        return result
    if op == 'scaled':
        return scaled(parse_number(spec['a']), weight_from_spec(spec['arg']))
    if op == 'floor_composed':
        return floor_composed(modulus_from_spec(spec['f']), parse_number(spec['a']), weight_from_spec(spec['arg']))
    if op == 'tabulated':
        return tabulated(spec['values'], spec.get('label'))
    if op is None:
        raise ParameterError(f"Weight spec needs a name or op: {spec!r}")
    return catalog_weight(op)


# ---------------------------------------------------------------------------
# Index grids
# ---------------------------------------------------------------------------

def geometric_grid(horizon, ratio=None, start=1):
    """floor(start * ratio^j) up to min(horizon, DENSE_GRID_LIMIT), then powers of two with
    geometrically growing exponents up to horizon; horizon itself is always included"""
    ratio = ratio or LabConfig.SCHEDULE_RATIO
    if ratio <= 1:
        raise ParameterError(f"schedule ratio must exceed 1, got {ratio}")
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")

    dense_limit = LabConfig.DENSE_GRID_LIMIT if horizon > LabConfig.DENSE_GRID_LIMIT else int(horizon)
    points = []
    x = float(max(start, 1))
    while int(x) <= dense_limit:
        k = int(x)
        if not points or k != points[-1]:
            points.append(k)
        x *= ratio

    if horizon > dense_limit:
        e = dense_limit.bit_length()
        while True:
            k = power_of_two(e)
            if k > horizon:
                break
            points.append(k)
            e = max(e + 1, math.ceil(e * ratio))

    if not points or points[-1] < horizon:
        points.append(horizon)
    return points


def scan_grid(g, horizon, ratio=None, start=1):
    """Geometric grid plus every jump point of g (and the index just before it)"""
    extra = []
    for b in g.jump_points(horizon):
        extra.append(b)
        if b >= 1:
            extra.append(b - 1)
    points = set(geometric_grid(horizon, ratio, start))
    points.update(k for k in extra if k >= start and k <= horizon)
    return sorted(points)


# ---------------------------------------------------------------------------
# Validation and evidence
# ---------------------------------------------------------------------------

DEFAULT_MODULUS_SAMPLES = (
    list(range(0, 17))
    + [10**j for j in range(2, 7)]
    + [2**j for j in range(5, 41, 5)]
    + [2.5, 1e6 + 0.5]
)


@dataclass
class AxiomResult:
    axiom: str
    passed: bool
    witness: Optional[tuple] = None
    detail: str = ''


@dataclass
class ValidationReport:
    function: str
    results: list

    @property
    def all_passed(self):
        return all(r.passed for r in self.results)

    def result(self, axiom):
        for r in self.results:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    def failures(self):
        return [r for r in self.results if not r.passed]


def validate_modulus(f, sample_schedule=None):
    """Check the modulus axioms on samples; failures carry the violating sample"""
    samples = sorted(set(DEFAULT_MODULUS_SAMPLES if sample_schedule is None else sample_schedule))
    if not samples:
        raise ParameterError("sample schedule is empty")
    if samples[0] < 0:
        raise ParameterError("sample schedule values must be >= 0")

    tol_add = LabConfig.SUBADDITIVITY_TOL
    tol_mono = LabConfig.MONOTONE_TOL
    values = {x: f.eval_real(float(x)) for x in samples}
    results = []

    zero = f.eval_real(0.0)
    results.append(AxiomResult('zero_at_zero', zero == 0, None if zero == 0 else (0, zero)))

    bad = next((x for x in samples if x > 0 and not values[x] > 0), None)
    results.append(AxiomResult('positive', bad is None, None if bad is None else (bad, values[bad])))

    bad = next(((x, y) for x, y in zip(samples, samples[1:]) if values[x] > values[y] + tol_mono), None)
    results.append(AxiomResult('monotone', bad is None, bad))

    bad = None
    for i, x in enumerate(samples):
        for y in samples[i:]:
            if f.eval_real(float(x + y)) > values[x] + values[y] + tol_add:
                bad = (x, y)
                break
        if bad:
            break
    detail = ''
    if bad:
        x, y = bad
        detail = f"f({x}+{y})={f.eval_real(float(x + y))} > {values[x] + values[y]}"
    results.append(AxiomResult('subadditive', bad is None, bad, detail))

    # right continuity at 0: values along 10^-j decay geometrically or vanish
    eps_values = [f.eval_real(10.0 ** -j) for j in range(1, 13)]
    decaying = all(b < a for a, b in zip(eps_values, eps_values[1:]))
    steps = [b / a for a, b in zip(eps_values, eps_values[1:]) if a > 0]
    ok = eps_values[-1] <= 1e-9 or (decaying and bool(steps) and max(steps) <= 0.999)
    results.append(AxiomResult('right_continuous', ok, None if ok else (1e-12, eps_values[-1])))

    bad = None
    for x in samples:
        if float(x).is_integer() and x < 2**53:
            big, real = f.eval_big(int(x)), values[x]
            if abs(big - real) > LabConfig.CONSISTENCY_RTOL * max(abs(real), 1e-300):
                bad = (x, big, real)
                break
    results.append(AxiomResult('big_consistency', bad is None, bad))

    report = ValidationReport(f.name, results)
    if not report.all_passed:
        logger.info(f"modulus {f.name} failed {[r.axiom for r in report.failures()]}")
    return report


@dataclass(frozen=True)
class GMembershipEvidence:
    weight: str
    horizon: object
    delta: float
    divergence_witnesses: tuple   # (bound, index) with g(index) > bound
    nonvanishing_ratio_witnesses: tuple   # (index, k/g(k)) with k/g(k) >= delta

    @property
    def certified(self):
        return bool(self.divergence_witnesses) and bool(self.nonvanishing_ratio_witnesses)


def g_membership_evidence(g, horizon, delta):
    """Finite evidence that g -> infinity and k/g(k) does not vanish, up to horizon"""
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")

    grid = scan_grid(g, horizon)
    values = [(k, g(k)) for k in grid]

    divergence = []
    bound = 1
    for k, v in values:
        while bound <= MAX_DIVERGENCE_BOUND and value_lt(bound, v):
            divergence.append((bound, k))
            bound *= 10

    delta_q = Fraction(delta).limit_denominator(10**12)
    ratios = []
    for k, v in values:
        if k < 1 or is_zero(v) or isinstance(k, PowerOfTwoOffset):
            continue
        if isinstance(v, int):
            if k * delta_q.denominator >= delta_q.numerator * v:
                ratios.append((k, float(Fraction(k, v))))
        else:
            r = real_ratio(as_real(k), as_real(v))
            if r >= delta:
                ratios.append((k, r))

    if not divergence or not ratios:
        logger.warning(f"weight {g.name}: G membership not certified up to {horizon}")
    return GMembershipEvidence(g.name, horizon, delta, tuple(divergence), tuple(ratios))


def ratio_evidence(f, g, h, anchors):
    """f(h(k))/f(g(k)) at each anchor with f(g(k)) > 0"""
    out = []
    for k in anchors:
        den = f.eval_big(g(k))
        if den > 0:
            out.append((k, real_ratio(f.eval_big(h(k)), den)))
    return out


def dominates(g, h, samples):
    """First sample k with g(k) < h(k), or None when g >= h on every sample"""
    for k in samples:
        if value_lt(g(k), h(k)):
            return k
    return None
