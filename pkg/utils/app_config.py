import logging
import os

# Default worker count for Monte Carlo partitions and sweep points
DEFAULT_N_JOBS = 1
DEFAULT_LOG_LEVEL = "WARNING"


def get_n_jobs() -> int:
    """
    Worker count from SDF_SER_JOBS.
    Falls back to a single worker when unset or not a positive integer
    (-1 is passed through to joblib as "all cores").
    """
    raw = os.getenv("SDF_SER_JOBS", "").strip()
    if not raw:
        return DEFAULT_N_JOBS
    try:
        value = int(raw)
    except ValueError:
        return DEFAULT_N_JOBS
    if value == -1 or value >= 1:
        return value
    return DEFAULT_N_JOBS


def get_log_level(verbose: int = 0) -> int:
    """
    Logging level: each --verbose step lowers it (INFO, then DEBUG);
    otherwise SDF_SER_LOG_LEVEL, otherwise WARNING.
    """
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO

    name = os.getenv("SDF_SER_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.WARNING


def get_config_path() -> str | None:
    path = os.getenv("SDF_SER_CONFIG", "").strip()
    return path or None
