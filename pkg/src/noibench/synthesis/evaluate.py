"""Full-protocol evaluation of candidate topologies and the run log shared by
the PPO learner and the search baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..interference import evaluate_interference
from ..queueing import power_proxy
from ..sim import SimConfig
from ..topology import NoiTopology, to_text
from ..traffic import TrafficTrace, WorkloadSpec
from .normalize import RewardWeights, reward_fn


def full_evaluation(
    t: NoiTopology,
    w: WorkloadSpec,
    seed: int,
    weights: RewardWeights,
    fixed_normalizer,
    trace: TrafficTrace | None = None,
    sim_cfg: SimConfig | None = None,
) -> dict:
    """Interference protocol plus Eq.-style score under fixed normalization."""
    rep = evaluate_interference(t, w, seed=seed, trace=trace, sim_cfg=sim_cfg,
                                keep_reports=True)
    con = rep.concurrent_report
    throughput = sum(rep.t_con.values())
    lat = con.latency["all"]
    latency = lat.get("mean_ns", math.inf) if lat["count"] else math.inf
    link_rho = {}
    for label, u in con.link_mean_utilization.items():
        a, b = label.split("->")
        link_rho[(int(a), int(b))] = u
    power = power_proxy(t, link_rho)
    metrics = {
        "throughput": throughput,
        "interference": rep.score,
        "latency": latency,
        "power": power,
    }
    score = reward_fn(fixed_normalizer(metrics), weights)
    return {
        "score": score,
        "interference": rep.score if math.isfinite(rep.score) else float("inf"),
        "throughput": throughput,
        "latency": latency,
        "power": power,
        "slowdown": dict(rep.slowdown),
    }


@dataclass
class SynthesisRun:
    method: str
    seed: int
    config: dict
    episodes: list = field(default_factory=list)   # per-episode action/reward logs
    value_losses: list = field(default_factory=list)
    evals: list = field(default_factory=list)      # full-protocol checkpoints
    best_topology: NoiTopology | None = None
    best_score: float | None = None
    best_eval: dict | None = None
    policy_state: dict | None = None

    def record_eval(self, episode: int, topology: NoiTopology, result: dict):
        entry = {"episode": episode, **result}
        self.evals.append(entry)
        if self.best_score is None or result["score"] > self.best_score:
            self.best_score = result["score"]
            self.best_topology = topology
            self.best_eval = entry

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "episodes": self.episodes,
            "value_losses": self.value_losses,
            "evals": self.evals,
            "best_score": self.best_score,
            "best_eval": self.best_eval,
            "best_topology": (
                to_text(self.best_topology) if self.best_topology else None
            ),
        }
