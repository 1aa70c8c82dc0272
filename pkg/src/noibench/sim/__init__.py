"""Discrete-event NoI simulator (compiled kernel with pure-Python fallback)."""

from .config import SimConfig, SimReport, percentile
from .engine import core_backend, simulate

__all__ = ["SimConfig", "SimReport", "percentile", "simulate", "core_backend"]
