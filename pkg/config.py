import os
from functools import lru_cache
from pathlib import Path

import yaml
from dotenv import load_dotenv

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).with_name("config.yml")

DEFAULT_REPLICATIONS = 2000
DEFAULT_CHUNK_SIZE = 50
DEFAULT_TURNBULL_TOL = 1e-8
DEFAULT_TURNBULL_LOGLIK_TOL = 1e-10
DEFAULT_TURNBULL_MAX_ITER = 10_000
DEFAULT_BOOTSTRAP_REPLICATES = 2000
DEFAULT_BOOTSTRAP_SEED = 20240917
DEFAULT_FLOAT_FORMAT = "%.6f"


@lru_cache(maxsize=1)
def load_config(path=DEFAULT_CONFIG_PATH):
    """Load configuration data from ``path`` and cache the result."""
    with open(path, "r") as f:
        return yaml.safe_load(f) or {}


def _section(name: str) -> dict:
    return load_config().get(name) or {}


def _read_positive_int_env(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        parsed = int(raw)
    except ValueError:
        return default
    return parsed if parsed > 0 else default


def get_turnbull_settings() -> tuple[float, float, int]:
    """Return the EM stopping rule as ``(tol, loglik_tol, max_iter)``."""
    section = _section("turnbull")
    tol = float(section.get("tol") or DEFAULT_TURNBULL_TOL)
    loglik_tol = float(section.get("loglik_tol") or DEFAULT_TURNBULL_LOGLIK_TOL)
    max_iter = int(section.get("max_iter") or DEFAULT_TURNBULL_MAX_ITER)
    return tol, loglik_tol, max_iter


def get_default_replications() -> int:
    """Return the replication count used when a study config omits one."""
    configured = int(_section("simulation").get("replications") or DEFAULT_REPLICATIONS)
    return _read_positive_int_env("WMST_REPLICATIONS", configured)


def get_chunk_size() -> int:
    return int(_section("simulation").get("chunk_size") or DEFAULT_CHUNK_SIZE)


def get_max_workers() -> int:
    """Return the worker cap for Monte Carlo studies.

    ``WMST_MAX_WORKERS`` wins over ``config.yml``; a configured value of 0 means one
    worker per CPU.
    """
    configured = int(_section("simulation").get("max_workers") or 0)
    if configured <= 0:
        configured = os.cpu_count() or 1
    return _read_positive_int_env("WMST_MAX_WORKERS", configured)


def get_bootstrap_settings() -> tuple[int, int]:
    """Return ``(replicates, seed)`` for bootstrap standard errors."""
    section = _section("bootstrap")
    replicates = int(section.get("replicates") or DEFAULT_BOOTSTRAP_REPLICATES)
    seed = int(section.get("seed") or DEFAULT_BOOTSTRAP_SEED)
    return replicates, seed


def get_float_format() -> str:
    return str(_section("reporting").get("float_format") or DEFAULT_FLOAT_FORMAT)
