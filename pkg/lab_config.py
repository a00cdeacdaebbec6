# Density Lab configuration
# Class constants read once at import; env vars override where noted

import json
import logging
import os

from errors import ParameterError


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logging.warning(f"Ignoring {name}={raw!r}: not an integer")
        return default


class LabConfig:
    # Enumeration guard for boolean-combination sweeps (runs, not elements of closed forms)
    ENUMERATION_BUDGET = 10**7

    # Verdict thresholds
    DEFAULT_EPSILON = 0.05
    DEFAULT_DELTA = 0.25
    TAIL_FRACTION = 0.5   # last half of the schedule
    OUT_FRACTION = 0.25   # share of tail samples >= delta for LIKELY_OUT

    # Index grids
    SCHEDULE_RATIO = 1.1
    DENSE_GRID_LIMIT = 2**64     # beyond this the grid steps through exponents
    INDEX_CEILING = 2**256       # k_m search stops here
    MATERIALIZE_BITS = 2**16     # larger powers of two stay symbolic

    # Witness searches
    VANISHING_THRESHOLD = 0.25

    # Tolerances
    SUBADDITIVITY_TOL = 1e-9
    MONOTONE_TOL = 1e-12
    BIG_LOG_RTOL = 1e-12
    CONSISTENCY_RTOL = 1e-9

    # Reproducibility and suite execution
    DEFAULT_SEED = _env_int('DENSITY_LAB_SEED', 0)
    SUITE_JOBS = _env_int('DENSITY_LAB_JOBS', 1)

    # Logging
    LOG_FILE = os.getenv('DENSITY_LAB_LOG') or None
    LOG_LEVEL = os.getenv('DENSITY_LAB_LOG_LEVEL', 'WARNING')
    LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

    @classmethod
    def enumeration_budget(cls):
        """Budget in force right now (DENSITY_LAB_BUDGET wins over the class default)"""
        budget = _env_int('DENSITY_LAB_BUDGET', cls.ENUMERATION_BUDGET)
        if budget < 1:
            logging.warning(f"DENSITY_LAB_BUDGET={budget} is not positive, using {cls.ENUMERATION_BUDGET}")
            return cls.ENUMERATION_BUDGET
        return budget

    @classmethod
    def get_config_summary(cls):
        """Get a summary of current configuration"""
        return f"""
Density Lab Configuration:
- Enumeration budget: {cls.enumeration_budget():,} runs
- Verdict thresholds: epsilon={cls.DEFAULT_EPSILON}, delta={cls.DEFAULT_DELTA}
- Tail: last {cls.TAIL_FRACTION:.0%} of schedule, LIKELY_OUT at {cls.OUT_FRACTION:.0%} of tail >= delta
- Geometric schedule ratio: {cls.SCHEDULE_RATIO}
- Index ceiling for k_m search: 2^{cls.INDEX_CEILING.bit_length() - 1}
- Symbolic powers of two above: 2^{cls.MATERIALIZE_BITS}
- Seed: {cls.DEFAULT_SEED}
- Suite jobs: {cls.SUITE_JOBS}
- Log level: {cls.LOG_LEVEL}{f' (file {cls.LOG_FILE})' if cls.LOG_FILE else ''}
        """


# Keys accepted in a --config JSON file; they mirror the CLI flags
RUN_CONFIG_KEYS = {
    'command', 'f', 'g', 'set', 'horizon', 'schedule', 'out', 'format',
    'claim', 'suite', 'seed', 'epsilon', 'delta', 'm_max', 'alpha',
    'params', 'recipe', 'jobs', 'log_level',
}


def load_run_config(path):
    """Load a JSON run configuration; unknown keys are rejected"""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParameterError(f"Cannot read config {path}: {e}") from e

    if not isinstance(data, dict):
        raise ParameterError(f"Config {path} must hold a JSON object")

    unknown = sorted(set(data) - RUN_CONFIG_KEYS)
    if unknown:
        raise ParameterError(f"Unknown config keys in {path}: {unknown}")
    return data
