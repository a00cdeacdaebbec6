"""
Claim checks

Every registered claim is a deterministic, parameterized check of one
statement about the ideals Z_g(f) at a finite horizon. A check ends as PASS,
FAIL (carrying the violating values) or INCONCLUSIVE (carrying the undecided
quantity and its horizon). Suites run checks through joblib and report them
sorted by claim id.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np
from joblib import Parallel, delayed

from constructions import (
    LOG2_WEIGHT,
    TEST_SET_NAMES,
    anchor_schedule,
    antichain_bit_vectors,
    eec_case1_set,
    eec_case2_set,
    eu_block_sets,
    eu_measure_ideal,
    example_e_set,
    exh_verdict,
    increasing_dominance_check,
    lo1_witness,
    measure_values,
    p1_union_witness,
    ps1_family,
    raw_divergence,
    set_from_spec,
    ts1_anchors,
    ts1_weight,
)
from decomposition import (
    build_decomposition,
    composed,
    decomposition_verdict,
    doubling_decomposition,
    first_positive_index,
    growth_criterion_pd3,
    phi,
    preimage_count_criterion,
    ratio_bounded_criterion,
    sup_phi_omega,
    ts1_boundedness_test,
)
from density import (
    Verdict,
    classical_verdicts,
    geometric_schedule,
    liminf_ratio,
    lower_verdict,
    membership_on_enumeration,
    membership_verdict,
    named_schedule,
    power_modulus_deviation,
    ratio_trace,
    scaling_comparison,
)
from errors import USAGE_ERRORS, DensityLabError, EmptyRange, NoVanishingSubsequence, ParameterError, UnknownClaim
from functions import (
    WeightFunction,
    catalog_modulus,
    catalog_weight,
    custom_modulus,
    dominates,
    floor_log2,
    g_membership_evidence,
    modulus_from_spec,
    pointwise_max,
    power_of_two,
    ratio_evidence,
    real_ratio,
    scan_grid,
    validate_modulus,
    weight_from_spec,
)
from lab_config import LabConfig
from omega_sets import EMPTY, OMEGA, finite_set

logger = logging.getLogger(__name__)

IDENTITY_MODULUS = catalog_modulus('identity')
IDENTITY_WEIGHT = catalog_weight('identity')

ENUMERATION_SETS = ('empty', 'sqrt', 'evens', 'pow2', 'eu-c(eeu4)')
CLASSICAL_SETS = TEST_SET_NAMES + ('squares', 'pow2', 'fourth-root', 'omega')
DOUBLE_EXP_BLOCKS = [[2**(2**m), 2**(2**m + 1)] for m in range(1, 7)]


class CheckStatus(str, Enum):
    PASS = 'PASS'
    FAIL = 'FAIL'
    INCONCLUSIVE = 'INCONCLUSIVE'


MARKERS = {
    CheckStatus.PASS: '✅',
    CheckStatus.FAIL: '❌',
    CheckStatus.INCONCLUSIVE: '⚠️',
}


@dataclass
class ClaimCheck:
    claim_id: str
    parameters: dict
    status: CheckStatus
    evidence: list          # (description, values)
    runtime: float = 0.0

    @property
    def violations(self):
        return [row for row in self.evidence if row[0].startswith('VIOLATED')]


class Evidence:
    """Rows of (description, values); a failed requirement turns the check into a FAIL"""

    def __init__(self):
        self.rows = []
        self.failed = False

    def note(self, description, *values):
        self.rows.append((description, tuple(values)))

    def require(self, condition, description, *values):
        if not condition:
            self.failed = True
            description = f"VIOLATED: {description}"
        self.note(description, *values)
        return condition


@dataclass(frozen=True)
class Claim:
    claim_id: str
    description: str
    recipe: Callable = field(repr=False)
    defaults: dict = field(default_factory=dict)
    horizon_limited: bool = False


CLAIMS = {}


def register_claim(claim_id, description, defaults=None, horizon_limited=False):
    """Register a recipe(evidence, params) under claim_id; the defaults fix the parameter schema"""
    def decorator(recipe):
        if claim_id in CLAIMS:
            raise ValueError(f"claim {claim_id} is registered twice")
        CLAIMS[claim_id] = Claim(claim_id, description, recipe, dict(defaults or {}), horizon_limited)
        return recipe
    return decorator


def _pair(p):
    return modulus_from_spec(p['f']), weight_from_spec(p['g'])


def _split(a, b):
    """True when one verdict says LIKELY_IN and the other LIKELY_OUT"""
    return {a.verdict, b.verdict} == {Verdict.LIKELY_IN, Verdict.LIKELY_OUT}


def _sup_ratio(f, g, points):
    """(max f(k)/f(g(k)), argmax) over points with f(g(k)) > 0"""
    best, best_k = None, None
    for k in points:
        base = f.eval_big(g(k))
        if k >= 1 and base > 0:
            r = real_ratio(f.eval_big(k), base)
            if best is None or r > best:
                best, best_k = r, k
    return best, best_k


def _phi_omega(decomp, m):
    a, b = decomp.k_seq[m], decomp.k_seq[m + 1]
    return real_ratio(decomp.f.eval_big(b - a), decomp.weight_at(m))


# ---------------------------------------------------------------------------
# Weights, witnesses and the union/intersection over G
# ---------------------------------------------------------------------------

@register_claim(
    'liminf-inclusion',
    'Z(f) ⊆ Z_g(f); a vanishing liminf of f(k)/f(g(k)) yields a set in Z_g(f) \\ Z(f)',
    defaults={'f': 'log1p', 'g': 'es1', 'm_max': 8, 'horizon_bits': 65536, 'set_horizon': 10**6,
              'threshold': 0.25, 'epsilon': 0.25, 'delta': 0.45},
)
def check_liminf_inclusion(ev, p):
    f, g = _pair(p)
    probe = scan_grid(g, p['set_horizon'])
    for name in TEST_SET_NAMES:
        C = set_from_spec(name)
        plain = membership_verdict(ratio_trace(f, IDENTITY_WEIGHT, C, probe))
        if plain.verdict is Verdict.LIKELY_IN:
            weighted = membership_verdict(ratio_trace(f, g, C, probe))
            ev.require(weighted.verdict is not Verdict.LIKELY_OUT,
                       f"{name} in Z(f) is not out of Z_g(f)", weighted.verdict.value, weighted.tail_sup)

    horizon = power_of_two(p['horizon_bits'])
    value, at = liminf_ratio(f, g, scan_grid(g, horizon))
    ev.note('tail minimum of f(k)/f(g(k)) and its index bits', value, floor_log2(at))
    if value >= p['threshold']:
        try:
            lo1_witness(f, g, p['m_max'], horizon=horizon, threshold=p['threshold'])
        except NoVanishingSubsequence:
            ev.note('ratio stays positive and the witness builder refuses', value)
            return None
        ev.require(False, 'witness built although the ratio stays positive', value)
        return None

    C, anchors = lo1_witness(f, g, p['m_max'], horizon=horizon, threshold=p['threshold'])
    ev.note('anchor bit lengths', *[k.bit_length() for k in anchors])

    halves = [(k, real_ratio(f.eval_big(C.count(2 * k)), f.eval_big(2 * k))) for k in anchors]
    k_low, low = min(halves, key=lambda kr: kr[1])
    ev.require(low >= 0.5 - 1e-9, 'f(count(2k))/f(2k) >= 1/2 at every anchor', low, k_low.bit_length())

    excess = -math.inf
    trace = ratio_trace(f, g, C, [2 * k for k in anchors])
    for k, r in zip(trace.sample_indices, trace.ratios):
        base = f.eval_big(g(k // 2))
        if base > 0:
            excess = max(excess, r - 2 * real_ratio(f.eval_big(k // 2), base))
    ev.require(excess <= 1e-12, 'trace at 2k stays within 2 f(k)/f(g(k))', excess)

    schedule = anchor_schedule(anchors)
    weighted = membership_verdict(ratio_trace(f, g, C, schedule), p['epsilon'], p['delta'])
    plain = membership_verdict(ratio_trace(f, IDENTITY_WEIGHT, C, schedule), p['epsilon'], p['delta'])
    ev.require(weighted.verdict is Verdict.LIKELY_IN, 'witness is in Z_g(f)', weighted.tail_sup)
    ev.require(plain.verdict is Verdict.LIKELY_OUT, 'witness is out of Z(f)', plain.tail_sup)
    return None


@register_claim(
    'enumeration-criterion',
    'membership read off the elements c_m agrees with the prefix-count definition',
    defaults={'f': 'log1p', 'g': 'identity', 'sets': list(ENUMERATION_SETS), 'horizon': 10**6, 'm_max': 40},
)
def check_enumeration_criterion(ev, p):
    f, g = _pair(p)
    schedule = geometric_schedule(p['horizon'])
    decided = 0
    for spec in p['sets']:
        C = set_from_spec(spec)
        direct = membership_verdict(ratio_trace(f, g, C, schedule))
        listed = membership_on_enumeration(f, g, C, p['m_max'], horizon=p['horizon'])
        decided += direct.decided and listed.decided
        ev.require(not _split(direct, listed), f"{C.name}: prefix and enumeration verdicts agree",
                   direct.verdict.value, listed.verdict.value)
    ev.note('sets decided both ways', decided)


@register_claim(
    'max-weight-identity',
    'Z_g(f) = Z_h(f) implies both equal Z_max(g,h)(f)',
    defaults={'f': 'log1p', 'g': 'identity', 'h': 'scaled(3,identity)', 'sets': list(TEST_SET_NAMES),
              'horizon': 10**6},
)
def check_max_weight_identity(ev, p):
    f, g = _pair(p)
    h = weight_from_spec(p['h'])
    top = pointwise_max(g, h)
    schedule = geometric_schedule(p['horizon'])
    ev.require(dominates(top, g, schedule) is None and dominates(top, h, schedule) is None,
               f"{top.name} dominates both weights on the grid", len(schedule))

    for spec in p['sets']:
        C = set_from_spec(spec)
        vg, vh, vtop = (membership_verdict(ratio_trace(f, w, C, schedule)) for w in (g, h, top))
        if _split(vg, vh):
            ev.note(f"{C.name}: weights disagree, identity not applicable", vg.verdict.value, vh.verdict.value)
            continue
        ev.require(not _split(vg, vtop) and not _split(vh, vtop), f"{C.name}: max weight keeps the verdict",
                   vg.verdict.value, vh.verdict.value, vtop.verdict.value)


@register_claim(
    'fin-intersection',
    'finite sets lie in every Z_g(f); an infinite set escapes some Z_g(f)',
    defaults={'f': 'log1p', 'weights': ['identity', 'eeu', 'eeu3', 'es1', 'scaled(3,identity)'],
              'finite_sets': ['empty', 'finite(1,2,3,50)'], 'horizon_bits': 1024,
              'adversarial_set': 'sqrt', 'adversarial_horizon': 10**6},
    horizon_limited=True,
)
def check_fin_intersection(ev, p):
    f = modulus_from_spec(p['f'])
    schedule = named_schedule('pow2', power_of_two(p['horizon_bits']))
    for w_spec in p['weights']:
        g = weight_from_spec(w_spec)
        for spec in p['finite_sets']:
            C = set_from_spec(spec)
            v = membership_verdict(ratio_trace(f, g, C, schedule))
            ev.require(v.verdict is Verdict.LIKELY_IN, f"{C.name} in Z_{g.name}(f)", v.tail_sup)

    C = set_from_spec(p['adversarial_set'])
    g_adv = WeightFunction(f'count+1[{C.name}]', lambda k: C.count(k) + 1)
    support = g_membership_evidence(g_adv, p['adversarial_horizon'], 1.0)
    ev.require(support.certified, f"{g_adv.name} diverges with k/g(k) >= 1",
               len(support.divergence_witnesses), len(support.nonvanishing_ratio_witnesses))
    v = membership_verdict(ratio_trace(f, g_adv, C, geometric_schedule(p['adversarial_horizon'])))
    ev.require(v.verdict is Verdict.LIKELY_OUT, f"{C.name} out of Z_{g_adv.name}(f)", v.tail_inf)

    ev.note('intersection over every weight is not decidable on finitely many weights',
            f"2^{p['horizon_bits']}")
    return CheckStatus.INCONCLUSIVE


@register_claim(
    'lower-union',
    'a set is in some Z_g(f) exactly when it is in the lower ideal Z_lower(f)',
    defaults={'f': 'identity', 'sets': ['sqrt', 'pow2', {'intervals': DOUBLE_EXP_BLOCKS, 'label': 'double-exp'}],
              'control': 'omega', 'horizon': 10**12},
)
def check_lower_union(ev, p):
    f = modulus_from_spec(p['f'])
    horizon = p['horizon']
    schedule = geometric_schedule(horizon)
    for spec in p['sets']:
        C = set_from_spec(spec)
        lower = lower_verdict(ratio_trace(f, IDENTITY_WEIGHT, C, schedule))
        ev.require(lower.verdict is Verdict.LIKELY_IN, f"{C.name} in Z_lower(f)", lower.tail_inf)
        witness = p1_union_witness(f, C, horizon)
        ev.require(witness.verdict.verdict is Verdict.LIKELY_IN, f"{C.name} in Z_g(f) for its step weight",
                   witness.verdict.tail_sup, len(witness.anchors))
        support = g_membership_evidence(witness.weight, horizon, 1.0)
        ev.require(support.certified, f"step weight for {C.name} diverges with k/g(k) = 1 at anchors",
                   len(support.nonvanishing_ratio_witnesses))

    control = set_from_spec(p['control'])
    lower = lower_verdict(ratio_trace(f, IDENTITY_WEIGHT, control, schedule))
    ev.require(lower.verdict is Verdict.LIKELY_OUT, f"{control.name} out of Z_lower(f)", lower.tail_inf)
    try:
        p1_union_witness(f, control, horizon)
    except NoVanishingSubsequence:
        ev.note(f"no step weight for {control.name}")
    else:
        ev.require(False, f"step weight built for {control.name}", lower.tail_inf)


@register_claim(
    'sqrt-profile-separation',
    'the square-root profile set is in Z_lower but not in Z_lower(log1p)',
    defaults={'f': 'log1p', 'horizon': 10**6, 'floor': 100, 'bound': 0.49},
)
def check_sqrt_profile_separation(ev, p):
    f = modulus_from_spec(p['f'])
    C = example_e_set()
    grid = geometric_schedule(p['horizon'])

    over = [k for k in grid if C.count(k)**2 > k]
    ev.require(not over, 'count(k)/k <= 1/sqrt(k) on the grid', *over[:3])

    low, at = min((real_ratio(f.eval_big(C.count(k)), f.eval_big(k)), k) for k in grid if k >= p['floor'])
    ev.require(low >= p['bound'], f"f(count(k))/f(k) >= {p['bound']} from k = {p['floor']}", low, at)

    verdicts = classical_verdicts(C, p['horizon'], f)
    ev.note('Z, Z(f) verdicts', verdicts['Z'].verdict.value, verdicts['Z(f)'].verdict.value)
    ev.require(verdicts['Z_lower'].verdict is Verdict.LIKELY_IN, 'in Z_lower', verdicts['Z_lower'].tail_inf)
    ev.require(verdicts['Z_lower(f)'].verdict is Verdict.LIKELY_OUT, 'out of Z_lower(f)',
               verdicts['Z_lower(f)'].tail_inf)


@register_claim(
    'weight-family-divergence',
    'a family of pairwise divergent weights g_alpha all define the same ideal as g',
    defaults={'f': 'log1p', 'g': 'es1', 'horizon_bits': 8192, 'blocks': 5, 'members': 8,
              'sets': list(TEST_SET_NAMES), 'set_horizon': 10**6},
)
def check_weight_family_divergence(ev, p):
    f, g = _pair(p)
    anchors = ts1_anchors(f, g, power_of_two(p['horizon_bits']), max_anchors=p['blocks'])
    if not ev.require(len(anchors) == p['blocks'], 'growth anchors for every block', len(anchors)):
        return None
    h = ts1_weight(f, g, anchors=anchors)
    ks = [a.k for a in anchors]
    family = ps1_family(f, g, h, ks, antichain_bit_vectors(p['blocks'], p['members']))

    apart = sum(1 for i, a in enumerate(family) for j, b in enumerate(family)
                if i != j and raw_divergence(a, b, ks))
    pairs = len(family) * (len(family) - 1)
    ev.require(apart == pairs, 'ordered pairs with g_alpha / g_beta > 10^3 at some anchor', apart, pairs)

    schedule = geometric_schedule(p['set_horizon'])
    for spec in p['sets']:
        C = set_from_spec(spec)
        base = membership_verdict(ratio_trace(f, g, C, schedule)).verdict
        differ = [w.name for w in family if membership_verdict(ratio_trace(f, w, C, schedule)).verdict is not base]
        ev.require(not differ, f"{C.name}: every member repeats the {g.name} verdict", base.value, *differ)


# ---------------------------------------------------------------------------
# Growth of the weights
# ---------------------------------------------------------------------------

@register_claim(
    'boundedness-failure',
    'the one-step growth of f(g) is unbounded for the factorial-exponent weight',
    defaults={'f': 'log1p', 'g': 'es1', 'bounds': [[3, 1], [5, 0.5]], 'horizon_bits': 1024,
              'control_f': 'identity', 'control_g': 'identity', 'control_bound': [3, 1], 'control_horizon': 10**6},
)
def check_boundedness_failure(ev, p):
    f, g = _pair(p)
    horizon = power_of_two(p['horizon_bits'])
    for M, eps in p['bounds']:
        violations = ts1_boundedness_test(f, g, M, eps, horizon)
        ev.require(bool(violations), f"M={M} eps={eps}: step ratio exceeds M somewhere",
                   len(violations), *[floor_log2(k + 1) for k in violations[:3]])

    f_c, g_c = modulus_from_spec(p['control_f']), weight_from_spec(p['control_g'])
    M, eps = p['control_bound']
    violations = ts1_boundedness_test(f_c, g_c, M, eps, p['control_horizon'])
    ev.require(not violations, f"{f_c.name}/{g_c.name} stays within M={M}", len(violations), *violations[:3])


@register_claim(
    'anchor-growth',
    'f(g(k_m + 1))/f(g(k_m)) > (m+1)/2 at k_m = 2^(m!) - 1',
    defaults={'f': 'log1p', 'g': 'es1', 'm_min': 2, 'm_max': 20, 'rtol': 1e-9},
)
def check_anchor_growth(ev, p):
    f, g = _pair(p)
    worst = 0.0
    for m in range(p['m_min'], p['m_max'] + 1):
        k = power_of_two(math.factorial(m), -1)
        low, high = f.eval_big(g(k)), f.eval_big(g(k + 1))
        ratio = real_ratio(high, low)
        ev.require(ratio > (m + 1) / 2, f"m={m}: ratio above (m+1)/2", ratio)
        if f.name == 'log1p':
            with mpmath.workdps(40):
                e = floor_log2(g(k + 1))
                exact = e * mpmath.log(2) + mpmath.log1p(mpmath.ldexp(1, -e))
                worst = max(worst, float(abs(mpmath.mpf(high) - exact) / exact))
    if f.name == 'log1p':
        ev.require(worst <= p['rtol'], 'big-number log against a 40-digit oracle', worst)


@register_claim(
    'factorial-weight-growth',
    'the growth-jump weight h exceeds g with f(h(k_m))/f(g(k_m)) > m at each anchor',
    defaults={'f': 'log1p', 'g': 'es1', 'horizon_bits': 8192, 'min_anchors': 5},
)
def check_factorial_weight_growth(ev, p):
    f, g = _pair(p)
    anchors = ts1_anchors(f, g, power_of_two(p['horizon_bits']))
    ev.require(len(anchors) >= p['min_anchors'], 'growth anchors found', len(anchors))
    h = ts1_weight(f, g, anchors=anchors)

    for a, (_, r) in zip(anchors, ratio_evidence(f, g, h, [a.k for a in anchors])):
        ev.require(r > a.m, f"m={a.m}: f(h(k))/f(g(k)) > m", r, a.k.bit_length())
    for a, b in zip(anchors, anchors[1:]):
        gap = f.eval_big(g(a.k)) / 2**a.m
        ev.require(b.k - a.k > gap, f"m={b.m}: anchor clears the previous interval", b.k.bit_length())

    samples = set(scan_grid(g, 2**64))
    samples.update(a.k + d for a in anchors for d in (-1, 0, 1))
    samples.update(a.end for a in anchors)
    first = dominates(h, g, sorted(samples))
    ev.require(first is None, 'h >= g on the samples', first)


@register_claim(
    'growth-criterion',
    'f(g(k + L f(g(k))))/f(g(k)) > 2 eventually bounds the preimage counts by f(2L)',
    defaults={'f': 'identity', 'g': 'identity', 'M': 2, 'L': 3, 'horizon': 10**6, 'm_max': 16},
)
def check_growth_criterion(ev, p):
    f, g = _pair(p)
    violations = growth_criterion_pd3(f, g, p['M'], p['L'], p['horizon'])
    ev.require(not violations, 'growth criterion holds on the grid', len(violations), *violations[:3])

    decomp = build_decomposition(f, g, p['m_max'])
    bound = f.eval_big(2 * p['L'])
    start = f.eval_big(g(1))
    worst = max(preimage_count_criterion(decomp, m) for m in range(max(decomp.start_m, 1), decomp.m_max)
                if 2**m >= start)
    ev.require(worst <= bound + 1e-12, 'preimage counts within f(2L)', worst, bound)
    ev.note('sup phi_m(omega)', sup_phi_omega(decomp)[0])


@register_claim(
    'growth-criterion-converse',
    'the factorial weight keeps f(k)/f(g(k)) < 1 yet fails the growth criterion at every m!',
    defaults={'f': 'log1p', 'g': 'eeu', 'M': 2, 'Ls': [1, 2, 3], 'horizon': 10**6, 'm_top': 30},
)
def check_growth_criterion_converse(ev, p):
    f, g = _pair(p)
    best, at = ratio_bounded_criterion(f, g, p['horizon'])
    ev.require(best < 1, 'f(k)/f(g(k)) < 1 on the grid', best, at)

    for L in p['Ls']:
        violations = set(growth_criterion_pd3(f, g, p['M'], L, p['horizon']))
        missing = [m for m in range(L + 1, p['m_top']) if math.factorial(m) <= p['horizon']
                   and math.factorial(m) not in violations]
        ev.require(not missing, f"L={L}: ratio <= {p['M']} at every m! with m > L", len(violations), *missing)

    steps = [real_ratio(f.eval_big(math.factorial(m + 2)), f.eval_big(math.factorial(m + 1)))
             for m in range(1, p['m_top'])]
    ev.require(max(steps) <= 2, 'f((m+2)!)/f((m+1)!) <= 2', max(steps))


# ---------------------------------------------------------------------------
# Decomposition and submeasures
# ---------------------------------------------------------------------------

@register_claim(
    'interval-decomposition',
    'the block submeasures phi_m decide membership the same way as the definition',
    defaults={'moduli': ['identity', 'log1p', 'power(0.5)'], 'weights': ['identity', 'eeu', 'eeu3'],
              'sets': list(TEST_SET_NAMES), 'm_max': 512},
)
def check_interval_decomposition(ev, p):
    combos, decided = 0, 0
    for f_spec in p['moduli']:
        for g_spec in p['weights']:
            f, g = modulus_from_spec(f_spec), weight_from_spec(g_spec)
            decomp = build_decomposition(f, g, p['m_max'])
            F = composed(f, g)
            bad = [m for m in range(1, decomp.m_max + 1)
                   if not (F(decomp.k_seq[m]) >= 2**m and (decomp.k_seq[m] == 0 or F(decomp.k_seq[m] - 1) < 2**m))]
            ev.require(not bad, f"{f.name}/{g.name}: k_m is the first index reaching 2^m", *bad[:3])

            schedule = scan_grid(g, decomp.k_seq[-1])
            for spec in p['sets']:
                C = set_from_spec(spec)
                direct = membership_verdict(ratio_trace(f, g, C, schedule))
                blocks = decomposition_verdict(decomp, C)
                combos += 1
                decided += direct.decided and blocks.decided
                if _split(direct, blocks):
                    ev.require(False, f"{f.name}/{g.name}/{C.name}: block and direct verdicts agree",
                               direct.verdict.value, blocks.verdict.value)
    ev.note('combinations, decided both ways', combos, decided)


@register_claim(
    'submeasure-axioms',
    'each phi_m is monotone and subadditive on random finite sets',
    defaults={'moduli': ['identity', 'log1p', 'power(0.5)'], 'weights': ['identity', 'eeu', 'eeu3'],
              'm_max': 12, 'pairs': 100, 'limit': 10**6, 'seed': LabConfig.DEFAULT_SEED},
)
def check_submeasure_axioms(ev, p):
    rng = np.random.default_rng(p['seed'])
    tol = LabConfig.SUBADDITIVITY_TOL
    for f_spec in p['moduli']:
        for g_spec in p['weights']:
            f, g = modulus_from_spec(f_spec), weight_from_spec(g_spec)
            decomp = build_decomposition(f, g, p['m_max'])
            top = min(decomp.k_seq[-1], p['limit'])
            blocks = [m for m in range(decomp.start_m, decomp.m_max) if decomp.k_seq[m] < top]
            label = f"{f.name}/{g.name}"
            ev.require(all(phi(decomp, m, EMPTY).value == 0 for m in blocks), f"{label}: phi_m(empty) = 0")

            violations = []
            for _ in range(p['pairs']):
                a = rng.integers(0, top, size=rng.integers(0, 40))
                b = rng.integers(0, top, size=rng.integers(0, 40))
                A, B, U = finite_set(a), finite_set(b), finite_set(np.concatenate([a, b]))
                for m in blocks:
                    va, vb, vu = (phi(decomp, m, S).value for S in (A, B, U))
                    if va > vu or vb > vu or vu > va + vb + tol:
                        violations.append((m, va, vb, vu))
            ev.require(not violations, f"{label}: monotone and subadditive over {p['pairs']} pairs",
                       len(violations), *(violations[0] if violations else ()))


@register_claim(
    'preimage-count',
    'phi_m(omega) <= f(|(f∘g)^-1[2^m, 2^(m+1))|)/2^m <= 2 phi_m(omega) when f(g(k_m)) < 2^(m+1)',
    defaults={'moduli': ['identity', 'log1p', 'power(0.5)'], 'weights': ['identity', 'eeu', 'eeu3'], 'm_max': 12},
)
def check_preimage_count(ev, p):
    tol = 1e-9
    for f_spec in p['moduli']:
        for g_spec in p['weights']:
            f, g = modulus_from_spec(f_spec), weight_from_spec(g_spec)
            decomp = build_decomposition(f, g, p['m_max'])
            below, above = [], []
            for m in range(max(decomp.start_m, 1), decomp.m_max):
                count_term = preimage_count_criterion(decomp, m)
                omega_term = _phi_omega(decomp, m)
                if omega_term > count_term * (1 + tol) + tol:
                    below.append(m)
                if decomp.weight_at(m) < 2**(m + 1) and count_term > 2 * omega_term + tol:
                    above.append(m)
            ev.require(not below and not above, f"{f.name}/{g.name}: preimage counts sandwich phi_m(omega)",
                       *(below + above)[:3])


def _decomposition_form(f, g, form, m_max):
    if form == 'pow2':
        return build_decomposition(f, g, m_max)
    if form == 'doubling':
        return doubling_decomposition(f, g, m_max)
    raise ParameterError(f"unknown decomposition form {form!r}")


def _ratio_bound_terms(f, g, form, m_max):
    """(decomposition, compared blocks, sup f(k)/f(g(k)) below the last stored k_m, k_0', f(g(k_0')))

    Every stored block is compared; the ratio grid runs to k_{m_max} - 1."""
    decomp = _decomposition_form(f, g, form, m_max)
    blocks = list(range(decomp.start_m, decomp.m_max))
    if not blocks:
        raise EmptyRange(f"{form}: the {f.name}/{g.name} decomposition stores no complete block")
    horizon = max(decomp.k_seq[decomp.m_max] - 1, 1)
    points = set(scan_grid(g, horizon))
    points.update(k + d for k in decomp.k_seq for d in (-1, 0) if 1 <= k + d <= horizon)
    sup_ratio, _ = _sup_ratio(f, g, sorted(points))
    k0 = first_positive_index(f, g)
    if decomp.truncated:
        logger.info(f"{form} {f.name}/{g.name}: {decomp.truncated}")
    return decomp, blocks, sup_ratio, k0, f.eval_big(g(k0))


@register_claim(
    'ratio-bound-forward',
    'sup phi_m(omega) <= 2 sup f(k)/f(g(k)) + 2 f(1)/f(g(k_0))',
    defaults={'f': 'log1p', 'g': 'eeu', 'm_max': 12, 'forms': ['pow2', 'doubling']},
)
def check_ratio_bound_forward(ev, p):
    f, g = _pair(p)
    for form in p['forms']:
        decomp, blocks, sup_ratio, k0, base = _ratio_bound_terms(f, g, form, p['m_max'])
        ev.note(f"{form}: blocks compared", len(blocks), decomp.k_seq[decomp.m_max])
        sup_phi = max(_phi_omega(decomp, m) for m in blocks)
        bound = 2 * sup_ratio + 2 * real_ratio(f.eval_big(1), base)
        ev.require(sup_phi <= bound + 1e-9, f"{form}: sup phi_m(omega) within the ratio bound",
                   sup_phi, bound, bound - sup_phi)


@register_claim(
    'ratio-bound-reverse',
    'sup f(k)/f(g(k)) <= f(k_0)/f(g(k_0)) + 2 sup phi_m(omega)',
    defaults={'f': 'log1p', 'g': 'eeu', 'm_max': 12, 'forms': ['pow2', 'doubling']},
)
def check_ratio_bound_reverse(ev, p):
    f, g = _pair(p)
    for form in p['forms']:
        decomp, blocks, sup_ratio, k0, base = _ratio_bound_terms(f, g, form, p['m_max'])
        ev.note(f"{form}: blocks compared", len(blocks), decomp.k_seq[decomp.m_max])
        sup_phi = max(_phi_omega(decomp, m) for m in blocks)
        bound = real_ratio(f.eval_big(k0), base) + 2 * sup_phi
        ev.require(sup_ratio <= bound + 1e-9, f"{form}: sup f(k)/f(g(k)) within the block bound",
                   sup_ratio, bound, bound - sup_ratio)


# ---------------------------------------------------------------------------
# Ratio bounds and inclusions
# ---------------------------------------------------------------------------

@register_claim(
    'modular-inclusion',
    'f(k)/f(g(k)) <= M gives r_k under g <= M times r_k under the identity, so Z(f) ⊆ Z_g(f)',
    defaults={'f': 'log1p', 'g': 'eeu3', 'sets': list(TEST_SET_NAMES) + ['pow2'], 'horizon': 10**6},
)
def check_modular_inclusion(ev, p):
    f, g = _pair(p)
    schedule = scan_grid(g, p['horizon'])
    M, at = _sup_ratio(f, g, schedule)
    ev.note('M = sup f(k)/f(g(k)) on the grid', M, at)
    for spec in p['sets']:
        C = set_from_spec(spec)
        weighted = ratio_trace(f, g, C, schedule)
        plain = ratio_trace(f, IDENTITY_WEIGHT, C, schedule)
        by_k = dict(zip(plain.sample_indices, plain.ratios))
        worst = max((r - M * by_k[k] for k, r in zip(weighted.sample_indices, weighted.ratios) if k in by_k),
                    default=0.0)
        ev.require(worst <= 1e-9, f"{C.name}: weighted ratio within M times the plain ratio", worst)
        vp, vw = membership_verdict(plain), membership_verdict(weighted)
        if vp.verdict is Verdict.LIKELY_IN:
            ev.require(vw.verdict is not Verdict.LIKELY_OUT, f"{C.name} in Z(f) is not out of Z_g(f)",
                       vw.verdict.value)


@register_claim(
    'linear-ratio-bound',
    'k <= M g(k) for an integer M gives f(k)/f(g(k)) <= M',
    defaults={'f': 'log1p', 'g': 'eeu', 'horizon': 10**6},
)
def check_linear_ratio_bound(ev, p):
    f, g = _pair(p)
    schedule = [k for k in scan_grid(g, p['horizon']) if k >= 1]
    linear = max(Fraction(k) / Fraction(v) for k, v in ((k, g(k)) for k in schedule) if v > 0)
    M = math.ceil(linear)
    sup_ratio, at = _sup_ratio(f, g, schedule)
    ev.note('max k/g(k) on the grid', float(linear))
    ev.require(sup_ratio <= M + 1e-12, f"f(k)/f(g(k)) <= {M}", sup_ratio, at)


@register_claim(
    'linear-ratio-converse',
    'f(k)/f(g(k)) stays bounded by 4 while k/g(k) grows without bound',
    defaults={'f': 'log1p', 'g': 'eeu3', 'horizon': 10**6, 'bound': 4, 'm_top': 9},
)
def check_linear_ratio_converse(ev, p):
    f, g = _pair(p)
    best, at = ratio_bounded_criterion(f, g, p['horizon'])
    ev.require(best <= p['bound'], f"sup f(k)/f(g(k)) <= {p['bound']}", best, at)
    wrong = [m for m in range(p['m_top'] + 1) if Fraction(4**(m + 1), g(4**(m + 1))) != 2**(m + 2)]
    ev.require(not wrong, 'k/g(k) = 2^(m+2) at k = 4^(m+1)', *wrong)
    ev.note('k/g(k) at the last power of four', 2**(p['m_top'] + 2))


@register_claim(
    'density-inclusion',
    'Z(f) ⊆ Z, strictly: the square-root profile is in Z and out of Z(f)',
    defaults={'f': 'log1p', 'sets': list(CLASSICAL_SETS), 'separating_set': 'sqrt', 'horizon': 10**6},
)
def check_density_inclusion(ev, p):
    f = modulus_from_spec(p['f'])
    for spec in p['sets']:
        C = set_from_spec(spec)
        v = classical_verdicts(C, p['horizon'], f)
        if v['Z(f)'].verdict is Verdict.LIKELY_IN:
            ev.require(v['Z'].verdict is Verdict.LIKELY_IN, f"{C.name} in Z(f) is in Z", v['Z'].tail_sup)

    C = set_from_spec(p['separating_set'])
    v = classical_verdicts(C, p['horizon'], f)
    ev.require(v['Z'].verdict is Verdict.LIKELY_IN, f"{C.name} in Z", v['Z'].tail_sup)
    ev.require(v['Z(f)'].verdict is Verdict.LIKELY_OUT, f"{C.name} out of Z(f)", v['Z(f)'].tail_inf)


@register_claim(
    'scaling-invariance',
    'Z_g(f) = Z_(a g)(f) for a >= 1',
    defaults={'f': 'log1p', 'g': 'identity', 'factors': [2, 3], 'sets': list(TEST_SET_NAMES), 'horizon': 10**6},
)
def check_scaling_invariance(ev, p):
    f, g = _pair(p)
    schedule = geometric_schedule(p['horizon'])
    for spec in p['sets']:
        C = set_from_spec(spec)
        for a in p['factors']:
            cmp = scaling_comparison(f, g, C, a, schedule)
            ev.require(cmp.consistent, f"{C.name}: a={a} keeps the verdict",
                       cmp.base.verdict.value, cmp.scaled.verdict.value)


@register_claim(
    'power-modulus-identity',
    'under f(x) = x^beta the ratio trace is the identity trace raised to beta',
    defaults={'betas': [0.25, 0.5, 0.75], 'g': 'identity', 'sets': list(TEST_SET_NAMES), 'horizon': 10**6,
              'tolerance': 1e-9},
)
def check_power_modulus_identity(ev, p):
    g = weight_from_spec(p['g'])
    schedule = geometric_schedule(p['horizon'])
    for beta in p['betas']:
        worst = max(power_modulus_deviation(beta, g, set_from_spec(spec), schedule) for spec in p['sets'])
        ev.require(worst <= p['tolerance'], f"beta={beta}: traces match", worst)


@register_claim(
    'non-simple-density',
    'Z_g(log1p) for the power-of-four weight differs from every simple density ideal Z_h',
    defaults={'f': 'log1p', 'g': 'eeu3', 'alpha': 0.5, 'case1_horizon': 10**12, 'case2_m_max': 60,
              'epsilon': 0.1, 'delta': 0.3},
)
def check_non_simple_density(ev, p):
    f, g = _pair(p)
    alpha = p['alpha']

    # h eventually above k^alpha: the k^(alpha/2) profile is in Z_h but out of Z_g(f)
    C1 = eec_case1_set(alpha)
    grid = [k for k in geometric_schedule(p['case1_horizon']) if k > 4]
    slack = min(real_ratio(f.eval_big(C1.count(k)), f.eval_big(g(k)))
                - alpha * (floor_log2(k - 1) // 2) / (floor_log2(k - 1) // 2 + 1) for k in grid)
    ev.require(slack > -1e-12, 'ratio above alpha m/(m+1) on (4^m, 4^(m+1)]', slack)
    out = membership_verdict(ratio_trace(f, g, C1, grid))
    simple = membership_verdict(ratio_trace(IDENTITY_MODULUS, IDENTITY_WEIGHT, C1, grid))
    ev.require(out.verdict is Verdict.LIKELY_OUT, f"{C1.name} out of Z_g(f)", out.tail_inf)
    ev.require(simple.verdict is Verdict.LIKELY_IN, f"{C1.name} in Z_identity", simple.tail_sup)

    # h below k^alpha infinitely often: the anchored profile is out of Z_h but in Z_g(f)
    C2, anchors = eec_case2_set(LOG2_WEIGHT, p['case2_m_max'])
    below = ratio_trace(IDENTITY_MODULUS, LOG2_WEIGHT, C2, anchors)
    ev.require(min(below.ratios) >= 1, f"count >= {LOG2_WEIGHT.name} at every anchor", min(below.ratios))
    ev.require(membership_verdict(below).verdict is Verdict.LIKELY_OUT, f"{C2.name} out of Z_h")
    schedule = sorted(set(anchors) | {a - 1 for a in anchors[1:]})
    inside = membership_verdict(ratio_trace(f, g, C2, schedule), p['epsilon'], p['delta'])
    ev.require(inside.verdict is Verdict.LIKELY_IN, f"{C2.name} in Z_g(f)", inside.tail_sup)


# ---------------------------------------------------------------------------
# Erdős–Ulam measure ideals
# ---------------------------------------------------------------------------

def _check_eu_pair(ev, p):
    spec = eu_measure_ideal(p['kind'])
    C, D = eu_block_sets(spec)
    holds, first = increasing_dominance_check(C, D, p['horizon'])
    ev.require(holds, f"count_C <= count_D for every k <= {p['horizon']}", first)

    mu_c = measure_values(spec, C, p['j_max'])
    short = [j for j, v in mu_c.items() if v < 1]
    extra = [j for j, v in mu_c.items() if v != 1 and j not in p['overlaps']]
    ev.require(not short and not extra, 'mu_m(C) = 1 off the overlapping blocks', *(short + extra))
    ev.note('mu_m(C) on overlapping blocks', *[str(mu_c[j]) for j in p['overlaps'] if j in mu_c])

    mu_d = measure_values(spec, D, p['j_max'])
    nonzero = [j for j, v in mu_d.items() if j >= p['d_from'] and v != 0]
    ev.require(not nonzero, f"mu_m(D) = 0 from m = {p['d_from']}", *nonzero)

    out, inside = exh_verdict(spec, C, p['j_max']), exh_verdict(spec, D, p['j_max'])
    ev.require(out.verdict is Verdict.LIKELY_OUT, 'C out of the ideal', out.tail_sup)
    ev.require(inside.verdict is Verdict.LIKELY_IN, 'D in the ideal', inside.tail_sup)


@register_claim(
    'eu-interval-invariance',
    'the ideal of width-m blocks at 2^m is not increasing invariant',
    defaults={'kind': 'eeu4', 'horizon': 10**5, 'j_max': 16, 'd_from': 3, 'overlaps': []},
)
def check_eu_interval_invariance(ev, p):
    _check_eu_pair(ev, p)


@register_claim(
    'eu-square-invariance',
    'the ideal of width-m^2 supports at 2^m is not increasing invariant',
    defaults={'kind': 'eeu5', 'horizon': 10**5, 'j_max': 16, 'd_from': 5, 'overlaps': [3]},
)
def check_eu_square_invariance(ev, p):
    _check_eu_pair(ev, p)


@register_claim(
    'eu-block-antichain',
    'disjoint selectors give incomparable factorial-block ideals',
    defaults={'kind': 'pd6', 'selectors': ['even', 'odd'], 'j_max': 12, 'horizon': 10**6},
)
def check_eu_block_antichain(ev, p):
    holds, first = increasing_dominance_check(*eu_block_sets(eu_measure_ideal(p['kind'])), p['horizon'])
    ev.require(holds, f"count_C <= count_D for every k <= {p['horizon']}", first)

    specs = [eu_measure_ideal(p['kind'], selector=s) for s in p['selectors']]
    for own in specs:
        C, _ = eu_block_sets(own)
        v = exh_verdict(own, C, p['j_max'])
        ev.require(v.verdict is Verdict.LIKELY_OUT, f"{C.name} out of {own.name}", v.tail_sup)
        for other in specs:
            if other is not own:
                v = exh_verdict(other, C, p['j_max'])
                ev.require(v.verdict is Verdict.LIKELY_IN, f"{C.name} in {other.name}", v.tail_sup)


@register_claim(
    'modulus-axioms',
    'catalog moduli satisfy the modulus axioms on samples and a non-subadditive function is caught',
    defaults={'moduli': ['identity', 'log1p', 'power(0.25)', 'power(0.5)', 'power(0.75)', 'bounded_ratio']},
)
def check_modulus_axioms(ev, p):
    for spec in p['moduli']:
        report = validate_modulus(modulus_from_spec(spec))
        ev.require(report.all_passed, f"{report.function} passes", *[r.axiom for r in report.failures()])
    square = validate_modulus(custom_modulus('square', lambda x: x * x))
    caught = square.result('subadditive')
    ev.require(not caught.passed, 'x^2 fails subadditivity', *(caught.witness or ()))


# ---------------------------------------------------------------------------
# Running checks
# ---------------------------------------------------------------------------

def run_check(claim_id, params=None):
    """Run one registered claim; parameters not in the claim's schema are refused"""
    claim = CLAIMS.get(claim_id)
    if claim is None:
        raise UnknownClaim(f"Unknown claim: {claim_id}")
    params = dict(params or {})
    unknown = sorted(set(params) - set(claim.defaults))
    if unknown:
        raise ParameterError(f"{claim_id} does not take {unknown}; parameters are {sorted(claim.defaults)}")
    resolved = {**claim.defaults, **params}

    evidence = Evidence()
    status = None
    start = time.perf_counter()
    try:
        status = claim.recipe(evidence, resolved)
    except USAGE_ERRORS:
        raise
    except DensityLabError as e:
        logger.info(f"{claim_id}: {type(e).__name__}: {e}")
        evidence.require(False, f"{type(e).__name__} during the check", str(e))
    runtime = time.perf_counter() - start

    if evidence.failed:
        status = CheckStatus.FAIL
    elif status is None:
        status = CheckStatus.PASS
    logger.info(f"{claim_id}: {status.value} in {runtime:.2f}s")
    return ClaimCheck(claim_id, resolved, status, evidence.rows, runtime)


SMOKE_SUITE = [
    ('liminf-inclusion', {'f': 'identity', 'g': 'identity', 'horizon_bits': 4096}),
    ('liminf-inclusion', {'m_max': 6, 'horizon_bits': 8192}),
    ('enumeration-criterion', {}),
    ('max-weight-identity', {}),
    ('lower-union', {}),
    ('sqrt-profile-separation', {}),
    ('weight-family-divergence', {}),
    ('boundedness-failure', {}),
    ('anchor-growth', {'m_max': 8}),
    ('factorial-weight-growth', {}),
    ('growth-criterion', {}),
    ('growth-criterion-converse', {}),
    ('interval-decomposition', {'moduli': ['identity', 'log1p'], 'weights': ['identity', 'eeu3']}),
    ('submeasure-axioms', {'moduli': ['identity', 'log1p'], 'weights': ['identity', 'eeu'], 'pairs': 25}),
    ('preimage-count', {}),
    ('ratio-bound-forward', {}),
    ('ratio-bound-reverse', {}),
    ('modular-inclusion', {}),
    ('linear-ratio-bound', {}),
    ('linear-ratio-converse', {}),
    ('density-inclusion', {}),
    ('scaling-invariance', {}),
    ('power-modulus-identity', {}),
    ('non-simple-density', {}),
    ('eu-interval-invariance', {}),
    ('eu-square-invariance', {}),
    ('eu-block-antichain', {}),
    ('modulus-axioms', {}),
]

FULL_EXTRAS = [
    ('liminf-inclusion', {'f': 'identity', 'g': 'identity'}),
    ('enumeration-criterion', {'g': 'eeu3'}),
    ('max-weight-identity', {'g': 'eeu', 'h': 'scaled(2,eeu)'}),
    ('sqrt-profile-separation', {'horizon': 10**12}),
    ('growth-criterion', {'g': 'scaled(2,identity)', 'L': 1}),
    ('ratio-bound-forward', {'f': 'identity', 'g': 'identity'}),
    ('ratio-bound-reverse', {'f': 'identity', 'g': 'identity'}),
    ('ratio-bound-forward', {'f': 'power(0.5)'}),
    ('ratio-bound-reverse', {'f': 'power(0.5)'}),
    ('modular-inclusion', {'g': 'eeu'}),
    ('linear-ratio-bound', {'g': 'identity'}),
    ('linear-ratio-bound', {'g': 'scaled(0.5,identity)'}),
    ('linear-ratio-bound', {'f': 'power(0.5)', 'g': 'scaled(0.25,identity)'}),
    ('scaling-invariance', {'g': 'eeu3'}),
    ('scaling-invariance', {'f': 'power(0.5)', 'g': 'eeu'}),
    ('power-modulus-identity', {'g': 'eeu'}),
]


def suite_entries(suite):
    """(claim_id, params) pairs a suite runs"""
    if suite == 'smoke':
        return list(SMOKE_SUITE)
    if suite == 'full':
        return [(claim_id, {}) for claim_id in sorted(CLAIMS)] + list(FULL_EXTRAS)
    raise ParameterError(f"Unknown suite {suite!r}; choose smoke or full")


def run_suite(suite, n_jobs=None):
    """Run a suite; checks are independent and come back sorted by claim id"""
    entries = suite_entries(suite)
    n_jobs = LabConfig.SUITE_JOBS if n_jobs is None else n_jobs
    logger.info(f"running suite {suite}: {len(entries)} checks on {n_jobs} job(s)")
    if n_jobs == 1:
        checks = [run_check(claim_id, params) for claim_id, params in entries]
    else:
        checks = Parallel(n_jobs=n_jobs, backend='threading')(
            delayed(run_check)(claim_id, params) for claim_id, params in entries)
    return sorted(checks, key=lambda c: c.claim_id)


def list_claims():
    return [(claim_id, CLAIMS[claim_id].description) for claim_id in sorted(CLAIMS)]


def _counts(checks):
    return {status: sum(1 for c in checks if c.status is status) for status in CheckStatus}


def format_report(checks, suite=None):
    """Text report: status header, horizon-limited claims, one marked line per check"""
    counts = _counts(checks)
    failed = counts[CheckStatus.FAIL]
    status_emoji = MARKERS[CheckStatus.FAIL] if failed else MARKERS[CheckStatus.PASS]
    limited = sorted({c.claim_id for c in checks if CLAIMS[c.claim_id].horizon_limited})

    lines = [
        "=" * 60,
        f"{status_emoji} CLAIM SUITE{f' {suite.upper()}' if suite else ''}: "
        f"{'FAILED' if failed else 'PASSED'}",
        "=" * 60,
        f"Checks: {len(checks)} | Passed: {counts[CheckStatus.PASS]} | Failed: {failed} | "
        f"Inconclusive: {counts[CheckStatus.INCONCLUSIVE]}",
        f"Horizon-limited: {', '.join(limited) if limited else 'none'}",
        "",
    ]
    for check in checks:
        lines.append(f"{MARKERS[check.status]} {check.claim_id} ({check.runtime:.2f}s)")
        rows = check.violations if check.status is CheckStatus.FAIL else []
        if check.status is CheckStatus.INCONCLUSIVE:
            rows = check.evidence[-1:]
        for description, values in rows:
            lines.append(f"   {description}: {', '.join(str(v) for v in values)}")
    lines.append("=" * 60)
    return "\n".join(lines)


def report_dict(checks, suite=None):
    """JSON-ready report; exports.write_json handles big ints and Fractions"""
    counts = _counts(checks)
    return {
        'suite': suite,
        'passed': counts[CheckStatus.PASS],
        'failed': counts[CheckStatus.FAIL],
        'inconclusive': counts[CheckStatus.INCONCLUSIVE],
        'horizon_limited': sorted({c.claim_id for c in checks if CLAIMS[c.claim_id].horizon_limited}),
        'checks': [
            {
                'claim_id': c.claim_id,
                'parameters': c.parameters,
                'status': c.status.value,
                'evidence': [{'description': d, 'values': list(v)} for d, v in c.evidence],
                'runtime': c.runtime,
            }
            for c in checks
        ],
    }
