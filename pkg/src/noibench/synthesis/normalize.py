"""Metric normalization for the multi-objective reward.

Training rewards use a running min-max window so the learner sees a
well-scaled signal; cross-run comparisons (best-topology selection, search
baselines) use fixed reference bounds, because running statistics from
different runs are not comparable. The interference term always uses the
fixed map (IS - 1) / (IS_cap - 1), capped to [0, 1].
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

IS_CAP = 5.0
NORMALIZER_WINDOW = 512


def normalize_interference(score: float, is_cap: float = IS_CAP) -> float:
    if score != score or score == float("inf"):  # NaN or starved sentinel
        return 1.0
    return min(1.0, max(0.0, (score - 1.0) / (is_cap - 1.0)))


@dataclass
class RewardWeights:
    """Objective weights (throughput, interference, latency, power); any
    nonnegative inputs are renormalized to sum to 1."""

    throughput: float = 0.4
    interference: float = 0.3
    latency: float = 0.2
    power: float = 0.1

    def __post_init__(self):
        vals = (self.throughput, self.interference, self.latency, self.power)
        if any(v < 0 for v in vals):
            raise ValueError("weights must be nonnegative")
        total = sum(vals)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        self.throughput /= total
        self.interference /= total
        self.latency /= total
        self.power /= total


def reward_fn(norm: dict, w: RewardWeights) -> float:
    """alpha1*T - (alpha2*IS + alpha3*L + alpha4*P), all inputs in [0, 1]."""
    return w.throughput * norm["throughput"] - (
        w.interference * norm["interference"]
        + w.latency * norm["latency"]
        + w.power * norm["power"]
    )


class RunningNormalizer:
    """Per-metric min-max over the last `window` observations, clamped to
    [0, 1]; interference bypasses the window (fixed map)."""

    def __init__(self, window: int = NORMALIZER_WINDOW, is_cap: float = IS_CAP):
        self.window = window
        self.is_cap = is_cap
        self._hist: dict[str, deque] = {}

    def update(self, metrics: dict) -> dict:
        out = {}
        for key in ("throughput", "latency", "power"):
            v = float(metrics[key])
            hist = self._hist.setdefault(key, deque(maxlen=self.window))
            hist.append(v)
            lo, hi = min(hist), max(hist)
            out[key] = 0.5 if hi <= lo else min(1.0, max(0.0, (v - lo) / (hi - lo)))
        out["interference"] = normalize_interference(
            float(metrics["interference"]), self.is_cap
        )
        return out


class FixedNormalizer:
    """Reference bounds derived once from the initial canvas; comparable
    across runs and methods."""

    def __init__(self, throughput_hi: float, latency_hi: float,
                 power_hi: float, is_cap: float = IS_CAP):
        self.throughput_hi = throughput_hi
        self.latency_hi = latency_hi
        self.power_hi = power_hi
        self.is_cap = is_cap

    def __call__(self, metrics: dict) -> dict:
        clamp = lambda x: min(1.0, max(0.0, x))
        return {
            "throughput": clamp(float(metrics["throughput"]) / self.throughput_hi),
            "latency": clamp(float(metrics["latency"]) / self.latency_hi),
            "power": clamp(float(metrics["power"]) / self.power_hi),
            "interference": normalize_interference(
                float(metrics["interference"]), self.is_cap
            ),
        }
