"""
CSV and JSON export

Column orders are fixed and floats are written with 17 significant digits, so
identical runs produce identical files. Integers that do not fit a double
(indices past 2^53, symbolic powers of two) are written as exact decimal text.
"""

import dataclasses
import json
import logging
import math
from enum import Enum
from fractions import Fraction

import mpmath
import numpy as np
import pandas as pd

from decomposition import phi_table
from functions import ModulusFunction, PowerOfTwoOffset, WeightFunction

logger = logging.getLogger(__name__)

JSON_SAFE_INT = 2**53
INT64_MAX = np.iinfo(np.int64).max
FLOAT_FORMAT = '%.17g'

TRACE_COLUMNS = ['k', 'count', 'f_count', 'f_g', 'ratio']
DECOMPOSITION_COLUMNS = ['m', 'k_m', 'phi_omega', 'phi_set']
COUNT_COLUMNS = ['k', 'count']


def _real_text(x):
    return mpmath.nstr(x, 17) if isinstance(x, mpmath.mpf) else FLOAT_FORMAT % x


def clean_for_json(obj):
    """Recursively convert to JSON-safe values; big ints and Fractions become strings"""
    if isinstance(obj, Enum):
        return obj.value
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        obj = int(obj)
    if isinstance(obj, int):
        return obj if abs(obj) <= JSON_SAFE_INT else str(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, mpmath.mpf):
        return float(obj) if abs(obj) < 1e300 else mpmath.nstr(obj, 17)
    if isinstance(obj, (Fraction, PowerOfTwoOffset)):
        return str(obj)
    if isinstance(obj, (WeightFunction, ModulusFunction)):
        return obj.name
    if isinstance(obj, np.ndarray):
        return [clean_for_json(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: clean_for_json(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {str(k): clean_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_for_json(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return [clean_for_json(x) for x in sorted(obj)]
    return str(obj)


def _exact_column(values):
    """int64 when every value fits, decimal text otherwise"""
    if all(isinstance(v, (int, np.integer)) and 0 <= v <= INT64_MAX for v in values):
        return np.asarray(values, dtype=np.int64)
    return np.asarray([str(v) for v in values], dtype=object)


def _real_column(values):
    """float64 when every value is a float, 17-digit text otherwise"""
    if all(not isinstance(v, mpmath.mpf) for v in values):
        return np.asarray(values, dtype=float)
    return np.asarray([_real_text(v) for v in values], dtype=object)


def trace_frame(trace):
    n = len(trace.ratios)
    counts = trace.counts if len(trace.counts) == n else [None] * n
    return pd.DataFrame({
        'k': _exact_column(trace.sample_indices),
        'count': _exact_column(counts) if trace.counts else counts,
        'f_count': _real_column(trace.f_counts) if trace.f_counts else [None] * n,
        'f_g': _real_column(trace.f_gs) if trace.f_gs else [None] * n,
        'ratio': np.asarray(trace.ratios, dtype=float),
    }, columns=TRACE_COLUMNS)


def decomposition_frame(decomp, C=None):
    rows = phi_table(decomp, C)
    columns = DECOMPOSITION_COLUMNS if C is not None else DECOMPOSITION_COLUMNS[:3]
    frame = pd.DataFrame(rows, columns=columns)
    frame['k_m'] = _exact_column([r['k_m'] for r in rows])
    return frame


def count_frame(C, schedule):
    """(k, count) samples of a set's prefix counts"""
    return pd.DataFrame({
        'k': _exact_column(list(schedule)),
        'count': _exact_column([C.count(k) for k in schedule]),
    }, columns=COUNT_COLUMNS)


def write_csv(frame, path_or_buffer):
    frame.to_csv(path_or_buffer, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    if isinstance(path_or_buffer, str):
        logger.info(f"wrote {len(frame)} rows to {path_or_buffer}")


def write_json(obj, path_or_buffer):
    data = clean_for_json(obj)
    if isinstance(path_or_buffer, str):
        with open(path_or_buffer, 'w') as f:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write('\n')
        logger.info(f"wrote JSON to {path_or_buffer}")
    else:
        json.dump(data, path_or_buffer, indent=2, sort_keys=True, ensure_ascii=False)
        path_or_buffer.write('\n')
