"""
Subsets of omega with an exact prefix-count oracle

count(k) = |C ∩ [0, k-1]|. Interval streams answer by clipped sums over
memoized intervals, profile sets by evaluating the profile, boolean
combinations by sweeping the operands' runs (bounded by the enumeration
budget). Symbolic PowerOfTwoOffset indices are rejected: no set here
has a closed form past 2^MATERIALIZE_BITS.
"""

import heapq
import logging
import threading
from abc import ABC, abstractmethod
from bisect import bisect_left, bisect_right

from errors import (
    EmptyRange,
    InvalidProfile,
    OverlapDetected,
    ParameterError,
    RepresentationTooWeak,
)
from functions import PowerOfTwoOffset
from lab_config import LabConfig

logger = logging.getLogger(__name__)

PROFILE_CHECK_LIMIT = 2048


def _check_index(k):
    if isinstance(k, PowerOfTwoOffset):
        raise RepresentationTooWeak(f"count at symbolic index {k} has no closed form")
    k = int(k)
    if k < 0:
        raise ParameterError(f"index must be >= 0, got {k}")
    return k


class OmegaSet(ABC):
    """A subset of omega queried through count(k) = |C ∩ [0, k-1]|"""

    name = 'set'
    is_empty = False
    is_full = False
    is_finite = False

    @abstractmethod
    def count(self, k):
        ...

    @abstractmethod
    def runs(self, limit):
        """Maximal-or-not half-open runs [a, b) of elements below limit, increasing"""

    def membership(self, n):
        n = _check_index(n)
        return self.count(n + 1) == self.count(n) + 1

    def __contains__(self, n):
        return self.membership(n)

    def known_size(self):
        """Total number of elements when known to be finite, else None"""
        return None

    def elements(self, limit):
        for a, b in self.runs(limit):
            yield from range(a, b)

    def nth_element(self, j):
        """The j-th element (0-based): smallest x with count(x+1) > j"""
        if j < 0:
            raise ParameterError(f"element index must be >= 0, got {j}")
        size = self.known_size()
        if size is not None and j >= size:
            raise EmptyRange(f"{self.name} has only {size} elements")

        hi = 1
        while self.count(hi) <= j:
            size = self.known_size()
            if size is not None and j >= size:
                raise EmptyRange(f"{self.name} has only {size} elements")
            if hi > LabConfig.INDEX_CEILING:
                raise RepresentationTooWeak(f"element {j} of {self.name} lies beyond the index ceiling")
            hi *= 2
        lo = 0
        # count(lo) <= j < count(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.count(mid) <= j:
                lo = mid
            else:
                hi = mid
        return lo

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class FiniteList(OmegaSet):
    """Finite set given by its elements"""

    is_finite = True

    def __init__(self, elements, name='finite'):
        values = sorted(set(int(x) for x in elements))
        if values and values[0] < 0:
            raise ParameterError(f"elements must be >= 0, got {values[0]}")
        self._elements = values
        self.name = name
        self.is_empty = not values

    def count(self, k):
        return bisect_left(self._elements, _check_index(k))

    def membership(self, n):
        n = _check_index(n)
        i = bisect_left(self._elements, n)
        return i < len(self._elements) and self._elements[i] == n

    def runs(self, limit):
        limit = _check_index(limit)
        for x in self._elements:
            if x >= limit:
                break
            yield x, x + 1

    def known_size(self):
        return len(self._elements)

    def nth_element(self, j):
        if j < 0:
            raise ParameterError(f"element index must be >= 0, got {j}")
        if j >= len(self._elements):
            raise EmptyRange(f"{self.name} has only {len(self._elements)} elements")
        return self._elements[j]


class _FullSet(OmegaSet):
    name = 'omega'
    is_full = True

    def count(self, k):
        return _check_index(k)

    def membership(self, n):
        _check_index(n)
        return True

    def runs(self, limit):
        limit = _check_index(limit)
        if limit > 0:
            yield 0, limit


EMPTY = FiniteList([], 'empty')
OMEGA = _FullSet()


class IntervalStream(OmegaSet):
    """Union of disjoint half-open intervals [a_i, b_i) emitted lazily in increasing order"""

    def __init__(self, intervals, name='intervals'):
        self.name = name
        self._source = intervals() if callable(intervals) else intervals
        self._iter = None
        self._starts = []
        self._ends = []
        self._prefix = [0]
        self._exhausted = False
        self._lock = threading.Lock()

    def _pull(self):
        """Emit the next nonempty interval into the memo; False when the source is done"""
        if self._iter is None:
            self._iter = iter(self._source)
        for a, b in self._iter:
            if isinstance(a, PowerOfTwoOffset) or isinstance(b, PowerOfTwoOffset):
                raise RepresentationTooWeak(f"{self.name}: interval [{a}, {b}) is too large to count")
            a, b = int(a), int(b)
            if b <= a:
                continue
            if a < 0:
                raise ParameterError(f"{self.name}: interval [{a}, {b}) starts below 0")
            if self._ends and a < self._ends[-1]:
                raise OverlapDetected(f"{self.name}: [{a}, {b}) starts before previous end {self._ends[-1]}")
            if len(self._starts) >= LabConfig.enumeration_budget():
                raise RepresentationTooWeak(f"{self.name}: more than {LabConfig.enumeration_budget():,} intervals")
            self._starts.append(a)
            self._ends.append(b)
            self._prefix.append(self._prefix[-1] + (b - a))
            return True
        self._exhausted = True
        return False

    def _extend_to(self, k):
        # memo is complete below k once an interval starting at or after k is known
        while not self._exhausted and (not self._starts or self._starts[-1] < k):
            self._pull()

    def count(self, k):
        k = _check_index(k)
        with self._lock:
            self._extend_to(k)
            i = bisect_right(self._starts, k - 1)
            if i == 0:
                return 0
            return self._prefix[i - 1] + min(self._ends[i - 1], k) - self._starts[i - 1]

    def membership(self, n):
        n = _check_index(n)
        with self._lock:
            self._extend_to(n + 1)
            i = bisect_right(self._starts, n)
            return i > 0 and n < self._ends[i - 1]

    def runs(self, limit):
        limit = _check_index(limit)
        with self._lock:
            self._extend_to(limit)
            end = bisect_left(self._starts, limit)
            snapshot = list(zip(self._starts[:end], self._ends[:end]))
        for a, b in snapshot:
            yield a, min(b, limit)

    def intervals(self, limit):
        """Emitted intervals with start below limit, unclipped"""
        limit = _check_index(limit)
        with self._lock:
            self._extend_to(limit)
            end = bisect_left(self._starts, limit)
            return list(zip(self._starts[:end], self._ends[:end]))

    def known_size(self):
        return self._prefix[-1] if self._exhausted else None

    def nth_element(self, j):
        """The j-th element, located through the prefix sums of interval lengths"""
        if j < 0:
            raise ParameterError(f"element index must be >= 0, got {j}")
        with self._lock:
            while self._prefix[-1] <= j and not self._exhausted:
                self._pull()
            if self._prefix[-1] <= j:
                raise EmptyRange(f"{self.name} has only {self._prefix[-1]} elements")
            i = bisect_right(self._prefix, j) - 1
            return self._starts[i] + (j - self._prefix[i])


class ProfileSet(OmegaSet):
    """Canonical set {k : p(k+1) = p(k) + 1} for a profile p with p(0) = 0 and 0/1 increments"""

    def __init__(self, profile, name='profile', check_points=None):
        self.name = name
        self._profile = profile
        self._validate(check_points)

    def _validate(self, check_points):
        if self._profile(0) != 0:
            raise InvalidProfile(f"{self.name}: p(0) = {self._profile(0)}, expected 0")
        points = set(range(PROFILE_CHECK_LIMIT))
        x = PROFILE_CHECK_LIMIT
        while x < 10**12:
            points.update((x, x + 1, x - 1))
            x = int(x * 1.7)
        if check_points:
            points.update(int(p) for p in check_points)
        for k in sorted(points):
            step = self._profile(k + 1) - self._profile(k)
            if step not in (0, 1):
                raise InvalidProfile(f"{self.name}: p({k + 1}) - p({k}) = {step}")

    def count(self, k):
        return int(self._profile(_check_index(k)))

    def membership(self, n):
        n = _check_index(n)
        return self._profile(n + 1) - self._profile(n) == 1

    def runs(self, limit):
        limit = _check_index(limit)
        total = self.count(limit)
        if total > LabConfig.enumeration_budget():
            raise RepresentationTooWeak(f"{self.name}: {total:,} elements below {limit}")
        run_start = run_end = None
        x = 0
        for j in range(total):
            x = self._next_element(j, x)
            if run_end == x:
                run_end = x + 1
                continue
            if run_start is not None:
                yield run_start, run_end
            run_start, run_end = x, x + 1
        if run_start is not None:
            yield run_start, run_end

    def _next_element(self, j, lo):
        """Smallest x >= lo with p(x+1) > j, given p(lo) <= j"""
        if self._profile(lo + 1) > j:
            return lo
        step = 1
        hi = lo + 1
        while self._profile(hi + 1) <= j:
            lo = hi
            hi = lo + step
            step *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._profile(mid + 1) > j:
                hi = mid
            else:
                lo = mid
        return hi


def _combine_runs(op, runs_a, runs_b):
    """Sweep two increasing run lists; emit runs of op(inA, inB)"""
    events = heapq.merge(
        ((p, 0, kind) for a, b in runs_a for p, kind in ((a, 1), (b, -1))),
        ((p, 1, kind) for a, b in runs_b for p, kind in ((a, 1), (b, -1))),
    )
    budget = LabConfig.enumeration_budget()
    pending = []
    for event in events:
        if len(pending) >= 4 * budget:
            raise RepresentationTooWeak(f"sweep exceeds {budget:,} runs")
        pending.append(event)

    # apply all events at one position before testing membership
    depth = [0, 0]
    inside, start = False, None
    i = 0
    out = []
    while i < len(pending):
        pos = pending[i][0]
        while i < len(pending) and pending[i][0] == pos:
            _, side, kind = pending[i]
            depth[side] += kind
            i += 1
        now = op(depth[0] > 0, depth[1] > 0)
        if now and not inside:
            start, inside = pos, True
        elif inside and not now:
            out.append((start, pos))
            inside = False
    return out


_OPS = {
    'union': lambda a, b: a or b,
    'intersection': lambda a, b: a and b,
    'difference': lambda a, b: a and not b,
}


class BooleanCombo(OmegaSet):
    """union / intersection / difference of two sets, counted by a cached run sweep"""

    def __init__(self, op, left, right, name=None):
        if op not in _OPS:
            raise ParameterError(f"Unknown set operation: {op}")
        self.op = op
        self.left = left
        self.right = right
        self.name = name or f"{op}({left.name},{right.name})"
        self._lock = threading.Lock()
        self._cache_limit = 0
        self._cache_starts = []
        self._cache_ends = []
        self._cache_prefix = [0]
        self.is_empty = self._shortcut_empty()
        self.is_full = self._shortcut_full()
        if op == 'union':
            self.is_finite = left.is_finite and right.is_finite
        elif op == 'intersection':
            self.is_finite = left.is_finite or right.is_finite
        else:
            self.is_finite = left.is_finite

    def _shortcut_empty(self):
        l, r = self.left, self.right
        if self.op == 'union':
            return l.is_empty and r.is_empty
        if self.op == 'intersection':
            return l.is_empty or r.is_empty
        return l.is_empty or r.is_full

    def _shortcut_full(self):
        l, r = self.left, self.right
        if self.op == 'union':
            return l.is_full or r.is_full
        if self.op == 'intersection':
            return l.is_full and r.is_full
        return l.is_full and r.is_empty

    def _shortcut_count(self, k):
        """Count through an empty or full operand; None when a sweep is needed"""
        l, r = self.left, self.right
        if self.is_empty:
            return 0
        if self.is_full:
            return k
        if self.op == 'union':
            if l.is_empty:
                return r.count(k)
            if r.is_empty:
                return l.count(k)
        elif self.op == 'intersection':
            if l.is_full:
                return r.count(k)
            if r.is_full:
                return l.count(k)
        else:
            if r.is_empty:
                return l.count(k)
            if l.is_full:
                return k - r.count(k)
        return None

    def _sweep_to(self, k):
        limit = max(k, 2 * self._cache_limit, 1)
        runs = _combine_runs(_OPS[self.op], self.left.runs(limit), self.right.runs(limit))
        self._cache_starts = [a for a, _ in runs]
        self._cache_ends = [b for _, b in runs]
        prefix = [0]
        for a, b in runs:
            prefix.append(prefix[-1] + (b - a))
        self._cache_prefix = prefix
        self._cache_limit = limit
        logger.debug(f"{self.name}: swept {len(runs)} runs up to {limit}")

    def count(self, k):
        k = _check_index(k)
        quick = self._shortcut_count(k)
        if quick is not None:
            return quick
        with self._lock:
            if k > self._cache_limit:
                self._sweep_to(k)
            i = bisect_right(self._cache_starts, k - 1)
            if i == 0:
                return 0
            return self._cache_prefix[i - 1] + min(self._cache_ends[i - 1], k) - self._cache_starts[i - 1]

    def membership(self, n):
        n = _check_index(n)
        return _OPS[self.op](self.left.membership(n), self.right.membership(n))

    def runs(self, limit):
        limit = _check_index(limit)
        if self.is_empty:
            return iter(())
        if self.is_full:
            return OMEGA.runs(limit)
        return iter(_combine_runs(_OPS[self.op], self.left.runs(limit), self.right.runs(limit)))

    def known_size(self):
        if self.is_empty:
            return 0
        sizes = (self.left.known_size(), self.right.known_size())
        if self.op in ('intersection', 'difference') and sizes[0] is not None:
            return self.count(self.left.nth_element(sizes[0] - 1) + 1) if sizes[0] else 0
        if self.op == 'union' and None not in sizes:
            lasts = [s.nth_element(n - 1) for s, n in zip((self.left, self.right), sizes) if n]
            return self.count(max(lasts) + 1) if lasts else 0
        return None


def interval_union(intervals, name='intervals'):
    """OmegaSet over a lazy stream (or factory) of disjoint increasing intervals"""
    return IntervalStream(intervals, name)


def profile_set(profile, name='profile', check_points=None):
    return ProfileSet(profile, name, check_points)


def finite_set(elements, name='finite'):
    return FiniteList(elements, name)


def boolean_combo(op, left, right, name=None):
    return BooleanCombo(op, left, right, name)


def count(C, k):
    return C.count(k)


def membership(C, n):
    return C.membership(n)
