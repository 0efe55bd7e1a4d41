"""Utilities - structured logging and seeded random streams."""

from robustlab.utils.logging import get_logger, structured_log
from robustlab.utils.rng import derive_seed, make_rng

__all__ = ["get_logger", "structured_log", "derive_seed", "make_rng"]
