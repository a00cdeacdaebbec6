"""Tests for the k_m decomposition, the phi_m submeasures and the boundedness criteria."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decomposition import (
    Decomposition,
    build_decomposition,
    composed,
    decomposition_verdict,
    doubling_decomposition,
    first_positive_index,
    growth_criterion_pd3,
    phi,
    phi_table,
    preimage_count_criterion,
    ratio_bounded_criterion,
    sup_phi_omega,
    ts1_boundedness_test,
)
from density import Verdict, geometric_schedule, membership_verdict, ratio_trace
from errors import BoundedModulus, EmptyRange, IndexOutOfRange, NotMonotone, ParameterError
from functions import catalog_modulus, catalog_weight, power_of_two, scaled, tabulated
from omega_sets import EMPTY, OMEGA, boolean_combo, finite_set, interval_union, profile_set

IDENTITY_F = catalog_modulus('identity')
LOG1P = catalog_modulus('log1p')
IDENTITY_G = catalog_weight('identity')

CATALOG_PAIRS = [
    ('identity', 'identity', 20),
    ('log1p', 'identity', 6),
    ('log1p', 'eeu', 6),
    ('log1p', 'eeu3', 5),
    ('log1p', 'es1', 8),
    ('power(0.5)', 'identity', 20),
    ('identity', 'scaled(2,identity)', 20),
]


def decomposition_for(f_name, g_name, m_max):
    return build_decomposition(catalog_modulus(f_name), catalog_weight(g_name), m_max)


class TestBuildDecomposition:

    def test_identity_powers_of_two(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 10)
        assert d.k_seq == [0] + [2**m for m in range(1, 11)]
        assert d.start_m == 1

    def test_doubled_identity(self):
        d = build_decomposition(IDENTITY_F, scaled(2, IDENTITY_G), 10)
        assert d.k_seq[1:] == [2**(m - 1) for m in range(1, 11)]

    def test_log1p_first_block(self):
        d = build_decomposition(LOG1P, IDENTITY_G, 3)
        assert d.k_seq[1] == 7

    def test_log1p_hits_index_ceiling(self):
        d = build_decomposition(LOG1P, IDENTITY_G, 10)
        assert d.m_max == 7
        assert d.truncated is not None

    def test_es1_repeats_k(self):
        d = decomposition_for('log1p', 'es1', 8)
        assert d.k_seq == [0, 4, 4, 64, 64, 2**24, 2**24, 2**120, 2**120]
        assert d.nonempty_blocks() == [2, 4, 6]
        assert d.start_m == 1

    def test_large_start_repeats_k(self):
        d = build_decomposition(IDENTITY_F, tabulated([5, 6, 7]), 4)
        assert d.k_seq == [0, 0, 0, 3, 11]
        assert d.start_m == 0
        assert d.nonempty_blocks() == [2, 3]

    @pytest.mark.parametrize('f_name,g_name,m_max', CATALOG_PAIRS)
    def test_nondecreasing_and_strict_on_nonempty_blocks(self, f_name, g_name, m_max):
        d = decomposition_for(f_name, g_name, m_max)
        assert all(a <= b for a, b in zip(d.k_seq, d.k_seq[1:]))
        starts = [d.k_seq[m] for m in d.nonempty_blocks()] + [d.k_seq[d.m_max]]
        assert all(a < b for a, b in zip(starts, starts[1:]))

    def test_eeu3_starts_at_zero(self):
        d = decomposition_for('log1p', 'eeu3', 3)
        assert d.start_m == 0

    def test_bounded_modulus_refused(self):
        with pytest.raises(BoundedModulus):
            build_decomposition(catalog_modulus('bounded_ratio'), IDENTITY_G, 3)

    def test_non_monotone_weight_refused(self):
        with pytest.raises(NotMonotone):
            build_decomposition(IDENTITY_F, tabulated([0, 9, 1]), 3)

    def test_m_max_precondition(self):
        with pytest.raises(ParameterError):
            build_decomposition(IDENTITY_F, IDENTITY_G, 0)

    @pytest.mark.parametrize('f_name,g_name,m_max', CATALOG_PAIRS)
    def test_threshold_invariant(self, f_name, g_name, m_max):
        d = decomposition_for(f_name, g_name, m_max)
        F = composed(d.f, d.g)
        for m in range(1, d.m_max + 1):
            k = d.k_seq[m]
            assert F(k) >= 2**m
            if k > 0:
                assert F(k - 1) < 2**m
        assert all(a <= b for a, b in zip(d.k_seq, d.k_seq[1:]))

    @pytest.mark.parametrize('f_name,g_name,m_max', CATALOG_PAIRS)
    def test_sandwich_bound(self, f_name, g_name, m_max):
        d = decomposition_for(f_name, g_name, m_max)
        F = composed(d.f, d.g)
        for m in range(1, d.m_max):
            assert F(d.k_seq[m + 1] - 1) / F(d.k_seq[m]) < 2

    def test_doubling_variant(self):
        d = doubling_decomposition(IDENTITY_F, IDENTITY_G, 8)
        assert d.k_seq == [2**m for m in range(9)]
        F = composed(LOG1P, catalog_weight('eeu'))
        e = doubling_decomposition(LOG1P, catalog_weight('eeu'), 5)
        for a, b in zip(e.k_seq, e.k_seq[1:]):
            assert F(b) >= 2 * F(a)

    def test_first_positive_index(self):
        assert first_positive_index(LOG1P, IDENTITY_G) == 1
        assert first_positive_index(LOG1P, catalog_weight('eeu3')) == 0


class TestPhi:

    def test_empty_set(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 12)
        assert all(phi(d, m, EMPTY).value == 0 for m in range(1, 12))

    def test_identity_omega_is_one(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 12)
        assert all(phi(d, m, OMEGA).value == 1 for m in range(1, 12))

    def test_full_block_matches_omega(self):
        d = decomposition_for('log1p', 'eeu', 6)
        for m in d.nonempty_blocks():
            block = interval_union([d.interval(m)])
            assert phi(d, m, block).value == phi(d, m, OMEGA).value

    def test_out_of_range(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 5)
        with pytest.raises(IndexOutOfRange):
            phi(d, 5, OMEGA)
        with pytest.raises(IndexOutOfRange):
            phi(d, 0, OMEGA)

    @pytest.mark.parametrize('f_name,g_name,m_max', [('identity', 'identity', 12), ('log1p', 'identity', 4)])
    def test_submeasure_axioms(self, f_name, g_name, m_max):
        d = decomposition_for(f_name, g_name, m_max)
        rng = np.random.default_rng(11)
        limit = d.k_seq[d.m_max]
        for _ in range(100):
            a = finite_set(rng.integers(0, limit, size=int(rng.integers(1, 40))))
            b = finite_set(rng.integers(0, limit, size=int(rng.integers(1, 40))))
            union = boolean_combo('union', a, b)
            for m in range(d.start_m, d.m_max):
                pa, pb, pu = phi(d, m, a).value, phi(d, m, b).value, phi(d, m, union).value
                assert phi(d, m, EMPTY).value == 0
                assert pa <= pu and pb <= pu
                assert pu <= pa + pb + 1e-9

    @given(
        a=st.sets(st.integers(min_value=0, max_value=4095), max_size=80),
        b=st.sets(st.integers(min_value=0, max_value=4095), max_size=80),
    )
    @settings(max_examples=100, deadline=None)
    def test_submeasure_axioms_on_random_sets(self, a, b):
        d = decomposition_for('log1p', 'identity', 6)
        A, B = finite_set(a), finite_set(b)
        union = boolean_combo('union', A, B)
        for m in range(d.start_m, d.m_max):
            pa, pb, pu = phi(d, m, A).value, phi(d, m, B).value, phi(d, m, union).value
            assert max(pa, pb) <= pu <= pa + pb + 1e-9


class TestVerdicts:

    def test_empty_is_in(self):
        d = decomposition_for('log1p', 'eeu', 6)
        assert decomposition_verdict(d, EMPTY).verdict is Verdict.LIKELY_IN

    def test_omega_under_log_eeu_is_out(self):
        d = decomposition_for('log1p', 'eeu', 8)
        assert decomposition_verdict(d, OMEGA).verdict is Verdict.LIKELY_OUT

    @pytest.mark.parametrize('f_name,m_max', [('identity', 40), ('log1p', 7)])
    @pytest.mark.parametrize('label', ['empty', 'omega', 'sqrt'])
    def test_agrees_with_direct_verdict(self, f_name, m_max, label):
        C = {'empty': EMPTY, 'omega': OMEGA, 'sqrt': profile_set(math.isqrt, 'sqrt')}[label]
        f = catalog_modulus(f_name)
        d = build_decomposition(f, IDENTITY_G, m_max)
        direct = membership_verdict(ratio_trace(f, IDENTITY_G, C, geometric_schedule(10**9)))
        via_blocks = decomposition_verdict(d, C)
        if direct.decided and via_blocks.decided:
            assert direct.verdict is via_blocks.verdict


class TestSupPhiOmega:

    def test_identity_sup_is_one(self):
        value, m = sup_phi_omega(build_decomposition(IDENTITY_F, IDENTITY_G, 16))
        assert value == 1
        assert 1 <= m < 16

    def test_log_eeu_finite(self):
        value, _ = sup_phi_omega(decomposition_for('log1p', 'eeu', 8))
        assert 0 < value < 10

    def test_empty_range(self):
        d = Decomposition(IDENTITY_F, IDENTITY_G, [0, 2], 1, 1)
        with pytest.raises(EmptyRange):
            sup_phi_omega(d)


class TestPreimageCount:

    def test_identity_block_three(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 6)
        assert preimage_count_criterion(d, 3) == 1

    @pytest.mark.parametrize('f_name,g_name,m_max', CATALOG_PAIRS)
    def test_bounds_phi_of_omega(self, f_name, g_name, m_max):
        d = decomposition_for(f_name, g_name, m_max)
        for m in range(1, d.m_max):
            assert phi(d, m, OMEGA).value <= preimage_count_criterion(d, m) + 1e-12

    def test_empty_preimage(self):
        d = decomposition_for('log1p', 'es1', 8)
        assert preimage_count_criterion(d, 1) == 0

    def test_out_of_range(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 4)
        with pytest.raises(IndexOutOfRange):
            preimage_count_criterion(d, 4)

    def test_block_below_start_refused(self):
        d = build_decomposition(IDENTITY_F, IDENTITY_G, 4)
        assert d.start_m == 1
        with pytest.raises(IndexOutOfRange):
            preimage_count_criterion(d, 0)


class TestRatioBounded:

    def test_log_eeu3_below_four(self):
        value, _ = ratio_bounded_criterion(LOG1P, catalog_weight('eeu3'), 10**6)
        assert value <= 4

    def test_identity_is_one(self):
        value, _ = ratio_bounded_criterion(LOG1P, IDENTITY_G, 10**6)
        assert value == pytest.approx(1.0)

    def test_es1_near_one_at_block_ends(self):
        value, k = ratio_bounded_criterion(LOG1P, catalog_weight('es1'), 2**30)
        assert 0.99 < value < 1
        assert k == 2**24 - 1


class TestGrowthCriteria:

    def test_identity_never_violates(self):
        assert growth_criterion_pd3(IDENTITY_F, IDENTITY_G, 2, 3, 10**6) == []

    def test_log_eeu_violates_at_factorials(self):
        violations = set(growth_criterion_pd3(LOG1P, catalog_weight('eeu'), 2, 1, 10**8))
        assert {math.factorial(m) for m in range(3, 12)} <= violations

    @pytest.mark.parametrize('M,L', [(0, 1), (2, 0), (-1, 1)])
    def test_preconditions(self, M, L):
        with pytest.raises(ParameterError):
            growth_criterion_pd3(IDENTITY_F, IDENTITY_G, M, L, 100)

    @pytest.mark.slow
    def test_es1_unbounded_jumps(self):
        horizon = power_of_two(math.factorial(12))
        violations = set(ts1_boundedness_test(LOG1P, catalog_weight('es1'), 10, 1, horizon))
        for m in (10, 11, 12):
            assert power_of_two(math.factorial(m), -1) in violations

    def test_identity_bounded(self):
        assert ts1_boundedness_test(IDENTITY_F, IDENTITY_G, 3, 1, 10**6) == []

    def test_tiny_epsilon_gives_ratio_one(self):
        assert ts1_boundedness_test(LOG1P, catalog_weight('eeu3'), 1, 1e-9, 10**6) == []

    def test_boundedness_preconditions(self):
        with pytest.raises(ParameterError):
            ts1_boundedness_test(IDENTITY_F, IDENTITY_G, 1, 0, 100)


def test_phi_table_rows():
    d = build_decomposition(IDENTITY_F, IDENTITY_G, 6)
    rows = phi_table(d, profile_set(math.isqrt))
    assert [r['m'] for r in rows] == [1, 2, 3, 4, 5]
    assert all(r['phi_omega'] == 1 for r in rows)
    assert all(0 <= r['phi_set'] <= 1 for r in rows)
