"""Tests for the prefix-count set representations."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from joblib import Parallel, delayed

from errors import InvalidProfile, OverlapDetected, ParameterError, RepresentationTooWeak
from functions import PowerOfTwoOffset
from omega_sets import (
    EMPTY,
    OMEGA,
    boolean_combo,
    finite_set,
    interval_union,
    profile_set,
)


def eeu4_supports():
    return interval_union(((2**m, 2**m + m) for m in range(1, 200)), 'eeu4-supports')


def sqrt_set():
    return profile_set(math.isqrt, 'sqrt')


def brute_count(C, k):
    return sum(1 for n in range(k) if C.membership(n))


class TestCount:

    def test_eeu4_supports(self):
        C = eeu4_supports()
        assert C.count(20) == 10
        assert C.count(2**5) == 10
        assert C.count(0) == 0

    def test_sqrt_profile(self):
        assert sqrt_set().count(100) == 10

    def test_empty_at_huge_index(self):
        assert EMPTY.count(10**9) == 0
        assert OMEGA.count(10**9) == 10**9

    def test_powers_of_four_intervals(self):
        C = interval_union(((4**m, 2 * 4**m) for m in range(1, 40)), 'lo1-style')
        assert C.count(32) == 4 + 16

    def test_single_interval(self):
        n = 12345
        assert interval_union([(0, n)]).count(n) == n

    def test_symbolic_index_rejected(self):
        with pytest.raises(RepresentationTooWeak):
            sqrt_set().count(PowerOfTwoOffset(70000))

    def test_negative_index_rejected(self):
        with pytest.raises(ParameterError):
            EMPTY.count(-1)


class TestMembership:

    def test_sqrt_canonical_realization(self):
        C = sqrt_set()
        assert C.membership(0)
        assert list(C.elements(16)) == [0, 3, 8, 15]
        assert [C.nth_element(j) for j in range(4)] == [0, 3, 8, 15]

    def test_interval_bounds(self):
        C = interval_union([(5, 9)])
        assert C.membership(7)
        assert not C.membership(9)
        assert not C.membership(4)

    def test_profiles_for_omega_and_empty(self):
        full = profile_set(lambda k: k, 'all')
        none = profile_set(lambda k: 0, 'none')
        assert full.count(10**4) == 10**4
        assert all(full.membership(n) for n in range(100))
        assert none.count(10**4) == 0
        assert list(none.elements(10**4)) == []


class TestIntervalStream:

    def test_overlap_detected(self):
        C = interval_union([(0, 5), (3, 8)], 'bad')
        with pytest.raises(OverlapDetected):
            C.count(10)

    def test_adjacent_intervals_allowed(self):
        C = interval_union([(0, 5), (5, 8)])
        assert C.count(8) == 8

    def test_empty_intervals_skipped(self):
        C = interval_union([(0, 0), (3, 3), (4, 6)])
        assert C.count(10) == 2
        assert C.intervals(10) == [(4, 6)]

    def test_interval_lengths_recovered(self):
        C = eeu4_supports()
        for a, b in C.intervals(2**40):
            assert C.count(b) - C.count(a) == b - a

    def test_factory_is_called_once(self):
        calls = []

        def factory():
            calls.append(1)
            return ((10 * m, 10 * m + 3) for m in range(10**6))

        C = interval_union(factory, 'lazy')
        assert C.count(100) == 30
        assert C.count(50) == 15
        assert len(calls) == 1

    def test_concurrent_counts_are_deterministic(self):
        C = interval_union(((m * m, m * m + m) for m in range(1, 10**5)), 'squares')
        ks = list(range(0, 200000, 997))
        results = Parallel(n_jobs=4, prefer='threads')(delayed(C.count)(k) for k in ks)
        serial = interval_union(((m * m, m * m + m) for m in range(1, 10**5)), 'squares')
        assert results == [serial.count(k) for k in ks]


class TestProfileSet:

    def test_nonzero_start_rejected(self):
        with pytest.raises(InvalidProfile):
            profile_set(lambda k: k + 1)

    def test_large_increment_rejected(self):
        with pytest.raises(InvalidProfile):
            profile_set(lambda k: 2 * k)

    def test_count_equals_profile(self):
        C = sqrt_set()
        for k in (0, 1, 2, 99, 100, 10**6, 10**30):
            assert C.count(k) == math.isqrt(k)


class TestBooleanCombo:

    def test_union_with_empty(self):
        A = eeu4_supports()
        U = boolean_combo('union', A, EMPTY)
        for k in range(0, 10**4, 37):
            assert U.count(k) == A.count(k)

    def test_difference_of_intervals(self):
        D = boolean_combo('difference', interval_union([(0, 10)]), interval_union([(5, 10)]))
        assert D.count(10) == 5

    def test_intersection_against_brute_force(self):
        A, B = eeu4_supports(), sqrt_set()
        both = boolean_combo('intersection', A, B)
        expected = len(set(A.elements(40)) & set(B.elements(40)))
        assert both.count(40) == expected

    def test_short_circuits(self):
        A = sqrt_set()
        assert boolean_combo('intersection', A, EMPTY).is_empty
        assert boolean_combo('union', OMEGA, A).is_full
        assert boolean_combo('difference', OMEGA, A).count(100) == 90
        assert boolean_combo('intersection', OMEGA, A).count(10**40) == 10**20

    def test_unknown_operation(self):
        with pytest.raises(ParameterError):
            boolean_combo('xor', EMPTY, OMEGA)

    def test_budget_exceeded(self, monkeypatch):
        monkeypatch.setenv('DENSITY_LAB_BUDGET', '10')
        A = interval_union(((3 * m, 3 * m + 1) for m in range(1000)), 'sparse-a')
        B = interval_union(((3 * m + 1, 3 * m + 2) for m in range(1000)), 'sparse-b')
        with pytest.raises(RepresentationTooWeak):
            boolean_combo('union', A, B).count(3000)

    def test_known_size_of_finite_union(self):
        U = boolean_combo('union', finite_set([1, 5, 9]), finite_set([5, 7]))
        assert U.known_size() == 4


REPRESENTATIONS = [
    ('finite', lambda: finite_set([0, 2, 3, 7, 100, 5000, 9999])),
    ('intervals', eeu4_supports),
    ('profile', sqrt_set),
    ('union', lambda: boolean_combo('union', eeu4_supports(), sqrt_set())),
    ('difference', lambda: boolean_combo('difference', OMEGA, eeu4_supports())),
]


@pytest.mark.parametrize('label,build', REPRESENTATIONS)
def test_count_has_unit_steps(label, build):
    C = build()
    previous = C.count(0)
    for k in range(1, 10**4 + 1):
        current = C.count(k)
        assert previous <= current <= previous + 1
        previous = current


@pytest.mark.parametrize('label,build', REPRESENTATIONS)
def test_membership_agrees_with_count(label, build):
    C = build()
    for k in (0, 1, 17, 256, 4000):
        assert brute_count(C, k) == C.count(k)


small_sets = st.sets(st.integers(min_value=0, max_value=300), max_size=60)
BOOLEAN_OPS = {
    'union': lambda a, b: a | b,
    'intersection': lambda a, b: a & b,
    'difference': lambda a, b: a - b,
}


class TestRandomFiniteSets:

    @given(elements=small_sets, k=st.integers(min_value=0, max_value=400))
    @settings(max_examples=200)
    def test_count_and_membership(self, elements, k):
        C = finite_set(elements)
        assert C.count(k) == sum(1 for x in elements if x < k)
        assert all(C.membership(x) for x in elements)

    @given(a=small_sets, b=small_sets, op=st.sampled_from(sorted(BOOLEAN_OPS)))
    @settings(max_examples=200)
    def test_boolean_combo_matches_python_sets(self, a, b, op):
        combined = boolean_combo(op, finite_set(a), finite_set(b))
        expected = BOOLEAN_OPS[op](a, b)
        for k in (0, 1, 50, 150, 301):
            assert combined.count(k) == sum(1 for x in expected if x < k)
