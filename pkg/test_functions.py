"""Tests for the modulus and weight catalogs, validation and G evidence."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import NotInCatalog, ParameterError
from functions import (
    PowerOfTwoOffset,
    catalog_modulus,
    catalog_weight,
    custom_modulus,
    floor_composed,
    floor_log2,
    g_membership_evidence,
    geometric_grid,
    modulus_from_spec,
    pointwise_max,
    power_of_two,
    scaled,
    scan_grid,
    tabulated,
    validate_modulus,
    weight_from_spec,
)

CATALOG_MODULI = ['identity', 'log1p', 'power(0.5)', 'power(0.25)', 'bounded_ratio']


def _mp_log1p(n):
    with mpmath.workdps(60):
        if isinstance(n, PowerOfTwoOffset):
            return float(mpmath.log1p(n.to_mpf()))
        return float(mpmath.log1p(mpmath.mpf(n)))


class TestPowerOfTwoOffset:

    def test_small_exponents_materialize(self):
        assert power_of_two(100) == 2**100
        assert isinstance(power_of_two(100, -1), int)

    def test_large_exponents_stay_symbolic(self):
        big = power_of_two(70000, -1)
        assert isinstance(big, PowerOfTwoOffset)
        assert str(big) == '2^70000-1'
        assert floor_log2(big) == 69999
        assert floor_log2(power_of_two(70000)) == 70000

    def test_compares_exactly_with_ints(self):
        big = PowerOfTwoOffset(70000)
        assert big == 1 << 70000
        assert big > (1 << 70000) - 1
        assert big < (1 << 70000) + 1
        assert big - 1 < big
        assert PowerOfTwoOffset(70001, -5) > PowerOfTwoOffset(70000, 7)

    def test_offset_arithmetic(self):
        big = PowerOfTwoOffset(70000, 3)
        assert (big + 4).offset == 7
        assert (big - 10).offset == -7
        assert big - PowerOfTwoOffset(70000, -2) == 5

    def test_rejects_oversized_offset(self):
        with pytest.raises(ParameterError):
            PowerOfTwoOffset(10, 1 << 9)


class TestModulusCatalog:

    def test_identity(self):
        assert catalog_modulus('identity').eval_real(7) == 7

    def test_power_half(self):
        assert catalog_modulus('power(0.5)').eval_real(4) == pytest.approx(2.0)

    def test_log1p_big_power_of_two(self):
        f = catalog_modulus('log1p')
        assert math.isclose(f.eval_big(2**120), 120 * math.log(2), rel_tol=1e-9)
        assert math.isclose(f.eval_big(2**120), _mp_log1p(2**120), rel_tol=1e-12)

    def test_log1p_symbolic_argument(self):
        f = catalog_modulus('log1p')
        for n in (PowerOfTwoOffset(70000), PowerOfTwoOffset(40320, -1), PowerOfTwoOffset(362880, 12)):
            assert math.isclose(f.eval_big(n), _mp_log1p(n), rel_tol=1e-12)

    @given(st.integers(min_value=0, max_value=2**400))
    @settings(max_examples=200)
    def test_log1p_big_matches_high_precision(self, n):
        f = catalog_modulus('log1p')
        assert math.isclose(f.eval_big(n), _mp_log1p(n), rel_tol=1e-12, abs_tol=1e-15)

    @pytest.mark.parametrize('name', CATALOG_MODULI)
    def test_big_real_consistency(self, name):
        f = catalog_modulus(name)
        for n in (0, 1, 7, 1000, 2**40, 2**52):
            assert math.isclose(f.eval_big(n), f.eval_real(float(n)), rel_tol=1e-9, abs_tol=1e-300)

    def test_bounded_ratio_flagged(self):
        assert catalog_modulus('bounded_ratio').is_unbounded is False
        assert catalog_modulus('log1p').is_unbounded is True

    def test_unknown_name(self):
        with pytest.raises(NotInCatalog):
            catalog_modulus('sqrt_of_log')

    def test_power_outside_unit_interval(self):
        with pytest.raises(ParameterError):
            catalog_modulus('power(1.5)')

    @pytest.mark.parametrize('name', CATALOG_MODULI)
    @given(x=st.integers(min_value=0, max_value=10**6), y=st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=100)
    def test_monotone_and_subadditive_on_integers(self, name, x, y):
        f = catalog_modulus(name)
        lo, hi = sorted((x, y))
        assert f.eval_real(lo) <= f.eval_real(hi) + 1e-12
        assert f.eval_real(x + y) <= f.eval_real(x) + f.eval_real(y) + 1e-9

    @pytest.mark.parametrize('name', CATALOG_MODULI)
    def test_iterated_subadditivity(self, name):
        f = catalog_modulus(name)
        rng = np.random.default_rng(7)
        for n in rng.integers(1, 10**6, size=50):
            for M in range(2, 17):
                assert f.eval_real(float(M * n)) <= M * f.eval_real(float(n)) + 1e-9 * M


class TestWeightCatalog:

    def test_eeu3_piecewise(self):
        g = catalog_weight('eeu3')
        assert g.eval(20) == 4
        assert [g(k) for k in range(0, 6)] == [1, 1, 1, 1, 1, 2]
        assert g(16) == 2
        assert g(17) == 4
        assert g(64) == 4
        assert g(65) == 8

    def test_es1_blocks(self):
        g = catalog_weight('es1')
        assert g(0) == 0
        assert g(1) == 1
        assert g(2) == g(3) == 4
        assert g(4) == g(63) == 2**6
        assert g.eval(2**6) == 2**24
        assert g(2**24 - 1) == 2**24
        assert g(2**24) == 2**120

    def test_es1_symbolic_blocks(self):
        g = catalog_weight('es1')
        value = g(PowerOfTwoOffset(math.factorial(8)))
        assert isinstance(value, PowerOfTwoOffset)
        assert value.exponent == math.factorial(9)
        assert g(PowerOfTwoOffset(math.factorial(8), -1)) == 2**40320

    def test_eeu_factorial_blocks(self):
        g = catalog_weight('eeu')
        assert g(0) == 0
        assert g(1) == 2
        assert [g(k) for k in (2, 5, 6, 23, 24)] == [6, 6, 24, 24, 120]

    def test_identity_at_zero(self):
        assert catalog_weight('identity').eval(0) == 0

    def test_scaled_and_floor_composed(self):
        assert catalog_weight('scaled(3,eeu)')(6) == 72
        assert catalog_weight('floor_composed(log1p,2,identity)')(10) == math.floor(math.log(21))
        g = floor_composed(catalog_modulus('log1p'), 1, catalog_weight('es1'))
        assert g(2**6) == math.floor(24 * math.log(2))

    def test_scaled_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            scaled(0, catalog_weight('identity'))

    def test_tabulated_extension(self):
        g = tabulated([0, 1, 1, 3])
        assert [g(k) for k in range(7)] == [0, 1, 1, 3, 4, 5, 6]
        assert g.is_nondecreasing

    def test_unknown_name(self):
        with pytest.raises(NotInCatalog):
            catalog_weight('ackermann')

    @pytest.mark.parametrize('name', ['identity', 'es1', 'eeu', 'eeu3', 'max(eeu3,identity)'])
    def test_nondecreasing_on_samples(self, name):
        g = catalog_weight(name)
        assert g.is_nondecreasing
        values = [g(k) for k in range(0, 5000)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('name', ['es1', 'eeu', 'eeu3'])
    def test_breakpoints_are_jumps(self, name):
        g = catalog_weight(name)
        for b in g.jump_points(10**7):
            assert g(b) > g(b - 1)


class TestPointwiseMax:

    def test_idempotent(self):
        g = catalog_weight('identity')
        assert pointwise_max(g, g).eval(5) == 5

    def test_eeu3_identity(self):
        g = pointwise_max(catalog_weight('eeu3'), catalog_weight('identity'))
        assert g.eval(20) == 20
        assert g(0) == 1

    def test_dominates_both_arguments(self):
        g, h = catalog_weight('eeu'), catalog_weight('eeu3')
        both = pointwise_max(g, h)
        rng = np.random.default_rng(0)
        for k in rng.integers(0, 10**9, size=1000):
            k = int(k)
            assert both(k) >= g(k)
            assert both(k) >= h(k)

    @pytest.mark.parametrize('f_name', CATALOG_MODULI)
    def test_commutes_with_modulus(self, f_name):
        f = catalog_modulus(f_name)
        g, h = catalog_weight('eeu'), catalog_weight('scaled(3,eeu3)')
        both = pointwise_max(g, h)
        for k in range(0, 3000, 7):
            assert f.eval_big(both(k)) == pytest.approx(max(f.eval_big(g(k)), f.eval_big(h(k))))


class TestValidateModulus:

    @pytest.mark.parametrize('name', CATALOG_MODULI)
    def test_catalog_passes(self, name):
        report = validate_modulus(catalog_modulus(name))
        assert report.all_passed, report.failures()

    def test_square_fails_subadditivity_at_one(self):
        square = custom_modulus('square', lambda x: x * x)
        report = validate_modulus(square)
        result = report.result('subadditive')
        assert not result.passed
        assert result.witness == (1, 1)
        x, y = result.witness
        assert square.eval_real(x + y) > square.eval_real(x) + square.eval_real(y)
        assert report.result('monotone').passed

    def test_custom_schedule_witness(self):
        square = custom_modulus('square', lambda x: x * x)
        assert validate_modulus(square, [1, 2]).result('subadditive').witness == (1, 1)

    def test_constant_is_not_right_continuous(self):
        bump = custom_modulus('bump', lambda x: 0.0 if x == 0 else 1.0 + min(x, 1.0))
        assert not validate_modulus(bump).result('right_continuous').passed

    def test_schedule_preconditions(self):
        f = catalog_modulus('identity')
        with pytest.raises(ParameterError):
            validate_modulus(f, [])
        with pytest.raises(ParameterError):
            validate_modulus(f, [-1, 2])


class TestGMembershipEvidence:

    def test_es1_block_ends(self):
        evidence = g_membership_evidence(catalog_weight('es1'), 2**30, 0.5)
        ratios = dict(evidence.nonvanishing_ratio_witnesses)
        for m in (2, 3, 4):
            k = 2 ** math.factorial(m) - 1
            assert ratios[k] == float(Fraction(k, k + 1))
        assert evidence.certified

    def test_identity_ratio_is_one(self):
        evidence = g_membership_evidence(catalog_weight('identity'), 100, 0.5)
        assert evidence.nonvanishing_ratio_witnesses
        assert all(r == 1.0 for _, r in evidence.nonvanishing_ratio_witnesses)

    def test_eeu3_witnesses(self):
        g = catalog_weight('eeu3')
        evidence = g_membership_evidence(g, 10**6, 0.9)
        ratios = dict(evidence.nonvanishing_ratio_witnesses)
        for m in range(1, 10):
            k = 4**m + 1
            assert ratios[k] == pytest.approx((4**m + 1) / 2**m)

    def test_witnesses_satisfy_inequalities(self):
        g = catalog_weight('eeu')
        evidence = g_membership_evidence(g, 10**8, 0.25)
        for bound, k in evidence.divergence_witnesses:
            assert g(k) > bound
        for k, r in evidence.nonvanishing_ratio_witnesses:
            assert Fraction(k, g(k)) >= Fraction(1, 4)

    def test_preconditions(self):
        with pytest.raises(ParameterError):
            g_membership_evidence(catalog_weight('identity'), 0, 0.5)
        with pytest.raises(ParameterError):
            g_membership_evidence(catalog_weight('identity'), 10, 0)


class TestGrids:

    def test_geometric_grid_shape(self):
        grid = geometric_grid(10**6)
        assert grid[0] == 1
        assert grid[-1] == 10**6
        assert all(a < b for a, b in zip(grid, grid[1:]))

    def test_grid_reaches_symbolic_horizon(self):
        horizon = power_of_two(70000)
        grid = geometric_grid(horizon)
        assert grid[-1] == horizon
        assert all(a < b for a, b in zip(grid, grid[1:]))

    def test_scan_grid_has_block_ends(self):
        grid = scan_grid(catalog_weight('es1'), 2**30)
        assert 63 in grid and 64 in grid
        assert 2**24 - 1 in grid


class TestSpecParsing:

    def test_modulus_json(self):
        assert modulus_from_spec({'kind': 'modulus', 'name': 'log1p'}).name == 'log1p'
        assert modulus_from_spec({'kind': 'modulus', 'name': 'power', 'beta': 0.5}).eval_real(9) == pytest.approx(3)

    def test_weight_json_composite(self):
        g = weight_from_spec({'kind': 'weight', 'op': 'max', 'args': ['eeu3', {'kind': 'weight', 'name': 'identity'}]})
        assert g(20) == 20
        assert weight_from_spec({'kind': 'weight', 'name': 'eeu3'})(20) == 4

    def test_wrong_kind(self):
        with pytest.raises(ParameterError):
            weight_from_spec({'kind': 'modulus', 'name': 'log1p'})
