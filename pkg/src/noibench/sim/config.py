"""Simulation configuration and report containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import errors


@dataclass
class SimConfig:
    packet_bytes: int = 4096
    router_delay_ns: float = 2.0
    warmup_ns: float | None = None   # default: 10% of the trace span
    measure_ns: float | None = None  # default: rest of the trace span
    window_ns: float = 1000.0
    routing: str = "deterministic_sp"  # or "ecmp_split"
    seed: int = 0
    service_jitter_cv2: float = 0.5  # memory-egress service variability
    clock_ghz: float = 2.0
    horizon_ns: float = math.inf  # stop processing events after this time

    def __post_init__(self):
        if self.packet_bytes <= 0:
            raise ValueError("packet_bytes must be positive")
        if self.measure_ns is not None and self.measure_ns <= 0:
            raise ValueError("measure_ns must be positive")
        if self.routing not in ("deterministic_sp", "ecmp_split"):
            raise ValueError(f"unknown routing policy {self.routing!r}")


def percentile(samples, q: float) -> float:
    """Nearest-rank percentile: the ceil(q*n)-th order statistic."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise errors.EmptySamples("no samples")
    if not 0.0 < q <= 1.0:
        raise ValueError("need 0 < q <= 1")
    rank = max(1, math.ceil(q * arr.size))
    return float(np.sort(arr)[rank - 1])


def _summary(samples: np.ndarray, clock_ghz: float) -> dict:
    if samples.size == 0:
        return {"count": 0}
    return {
        "count": int(samples.size),
        "mean_ns": float(samples.mean()),
        "p50_ns": percentile(samples, 0.50),
        "p95_ns": percentile(samples, 0.95),
        "p99_ns": percentile(samples, 0.99),
        "max_ns": float(samples.max()),
        "p99_cycles": percentile(samples, 0.99) * clock_ghz,
    }


@dataclass
class SimReport:
    """Measurement-window metrics plus whole-run byte accounting."""

    per_expert_tokens_per_s: dict
    latency: dict                 # class -> summary dict (plus "all")
    link_utilization: dict        # "a->b" -> per-window busy fraction array
    link_queue_delays: dict       # "a->b" -> wait samples (ns)
    link_queue_ready: dict        # "a->b" -> queue arrival times (ns)
    link_mean_utilization: dict   # "a->b" -> scalar
    totals: dict
    cut_goodput_gbps: float
    warmup_ns: float
    measure_ns: float
    window_ns: float
    span_ns: float
    config: SimConfig
    flow_completions: dict = field(default_factory=dict)  # flow id -> t_ns

    def memory_adjacent_links(self) -> list[str]:
        return self.totals.get("memory_egress_links", [])

    def queue_delay_summary(self, link: str) -> dict:
        return _summary(
            np.asarray(self.link_queue_delays.get(link, ()), dtype=float),
            self.config.clock_ghz,
        )

    def bottleneck_memory_link(self) -> str | None:
        """Memory-egress link with the highest mean utilization."""
        best, best_u = None, -1.0
        for link in self.memory_adjacent_links():
            u = self.link_mean_utilization.get(link, 0.0)
            if u > best_u:
                best, best_u = link, u
        return best

    def to_dict(self) -> dict:
        return {
            "per_expert_tokens_per_s": self.per_expert_tokens_per_s,
            "latency": self.latency,
            "link_mean_utilization": self.link_mean_utilization,
            "totals": self.totals,
            "cut_goodput_gbps": self.cut_goodput_gbps,
            "warmup_ns": self.warmup_ns,
            "measure_ns": self.measure_ns,
            "window_ns": self.window_ns,
            "span_ns": self.span_ns,
        }
