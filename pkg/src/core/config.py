import os
import sys
from contextlib import contextmanager
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables from .env file
load_dotenv()


class Settings(BaseModel):
    """
    Process-wide numeric and runtime settings.

    Everything here can be overridden per run through RunConfig; the
    environment only supplies defaults.
    """
    pole_tol: float = Field(default=1e-9, description="Integer test tolerance for Gamma poles")
    rel_tol: float = Field(default=1e-9, description="Relative tolerance on the float path")
    rank_tol: float = Field(default=1e-10, description="Smallest/largest singular value cutoff")
    soundness_slack: float = Field(default=1e-12, description="Additive slack (times scale) for threshold checks")
    sampler_min_abs: float = Field(default=0.05, description="Reject planted solutions smaller than this on N_a^{b-1}")
    sampler_budget: int = Field(default=1000, description="Maximum resampling attempts per instance")
    seed: int = Field(default=7, description="Default seed for every randomized run")
    threads: int = Field(default=1, ge=1, description="Cap on sweep parallelism")
    log_level: str = Field(default="WARNING")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"Warning: {name}={raw!r} is not an integer, using {default}.", file=sys.stderr)
        return default


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Factory for the shared Settings instance.

    Reads NABLA_FRAC_THREADS, NABLA_FRAC_SEED and NABLA_FRAC_LOG_LEVEL.
    """
    return Settings(
        threads=max(1, _env_int("NABLA_FRAC_THREADS", os.cpu_count() or 1)),
        seed=_env_int("NABLA_FRAC_SEED", 7),
        log_level=os.getenv("NABLA_FRAC_LOG_LEVEL", "WARNING").upper(),
    )


@contextmanager
def overridden_settings(**updates):
    """
    Apply the non-None updates to the shared Settings for the duration of
    the block, then restore the previous values.
    """
    settings = get_settings()
    updates = {k: v for k, v in updates.items() if v is not None}
    saved = {k: getattr(settings, k) for k in updates}
    for key, value in updates.items():
        setattr(settings, key, value)
    try:
        yield settings
    finally:
        for key, value in saved.items():
            setattr(settings, key, value)
