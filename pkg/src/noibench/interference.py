"""Solo-vs-concurrent evaluation: per-expert slowdowns, the worst-case
interference score, pairwise decomposition, and SLA checks.

The concurrent trace is generated once; each expert's solo trace is its
per-expert filtration, so solo and concurrent runs see identical flows and the
score isolates queueing contention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .sim import SimConfig, SimReport, simulate
from .topology import NoiTopology
from .traffic import TrafficTrace, WorkloadSpec, generate_trace

#: default SLA bound on acceptable per-expert slowdown
DEFAULT_SLA_SLOWDOWN = 1.2


@dataclass
class InterferenceReport:
    t_solo: dict[int, float]
    t_con: dict[int, float]
    slowdown: dict[int, float]
    score: float  # max over experts; inf when an expert starves
    sla_threshold: float = DEFAULT_SLA_SLOWDOWN
    starved: list[int] = field(default_factory=list)
    solo_reports: dict[int, SimReport] = field(default_factory=dict)
    concurrent_report: SimReport | None = None

    @property
    def sla_violations(self) -> list[int]:
        return sla_violations(self, self.sla_threshold)

    def to_dict(self) -> dict:
        return {
            "t_solo": self.t_solo,
            "t_con": self.t_con,
            "slowdown": {
                e: (s if math.isfinite(s) else "inf")
                for e, s in self.slowdown.items()
            },
            "interference_score": self.score if math.isfinite(self.score) else "inf",
            "sla_threshold": self.sla_threshold,
            "sla_violations": self.sla_violations,
            "starved": self.starved,
        }


def sla_violations(report: InterferenceReport, threshold: float) -> list[int]:
    """Experts whose slowdown strictly exceeds the threshold."""
    if threshold <= 1.0:
        raise ValueError("SLA threshold must exceed 1")
    return sorted(e for e, s in report.slowdown.items() if s > threshold)


def _sim_config(seed: int, base: SimConfig | None) -> SimConfig:
    if base is not None:
        return base
    return SimConfig(seed=seed)


def _tokens(report: SimReport, expert: int) -> float:
    return report.per_expert_tokens_per_s.get(expert, 0.0)


def evaluate_interference(
    t: NoiTopology,
    w: WorkloadSpec,
    seed: int = 0,
    trace: TrafficTrace | None = None,
    sim_cfg: SimConfig | None = None,
    sla_threshold: float = DEFAULT_SLA_SLOWDOWN,
    keep_reports: bool = False,
) -> InterferenceReport:
    """K solo runs (one expert's traffic each) plus one concurrent run.

    A pre-generated trace may be supplied to hold the workload fixed while
    topologies vary; otherwise the trace is generated on t.
    """
    if trace is None:
        trace = generate_trace(w, t, seed=seed)
    cfg = _sim_config(seed, sim_cfg)
    # every run measures over the same absolute window, set by the full trace
    span = float(trace.events[-1].t_ns)
    warmup = cfg.warmup_ns if cfg.warmup_ns is not None else 0.1 * span
    measure = cfg.measure_ns if cfg.measure_ns is not None else span - warmup
    experts = sorted(w.placement)

    t_solo: dict[int, float] = {}
    solo_reports: dict[int, SimReport] = {}
    for e in experts:
        solo_cfg = SimConfig(**{**cfg.__dict__, "warmup_ns": warmup,
                                "measure_ns": measure})
        rep = simulate(t, trace.filter_experts({e}), solo_cfg)
        t_solo[e] = _tokens(rep, e)
        if keep_reports:
            solo_reports[e] = rep

    con_cfg = SimConfig(**{**cfg.__dict__, "warmup_ns": warmup,
                           "measure_ns": measure})
    con_rep = simulate(t, trace, con_cfg)
    t_con = {e: _tokens(con_rep, e) for e in experts}

    slowdown: dict[int, float] = {}
    starved: list[int] = []
    for e in experts:
        if t_con[e] <= 0.0:
            slowdown[e] = math.inf
            starved.append(e)
        else:
            slowdown[e] = t_solo[e] / t_con[e]
    score = max(slowdown.values()) if slowdown else math.inf
    return InterferenceReport(
        t_solo=t_solo,
        t_con=t_con,
        slowdown=slowdown,
        score=score,
        sla_threshold=sla_threshold,
        starved=starved,
        solo_reports=solo_reports,
        concurrent_report=con_rep if keep_reports else None,
    )


def slowdown_matrix(
    t: NoiTopology,
    w: WorkloadSpec,
    seed: int = 0,
    trace: TrafficTrace | None = None,
    sim_cfg: SimConfig | None = None,
):
    """K x K pairwise decomposition: entry (j, k) is T_solo(k) / T_pair(k | j),
    expert k's slowdown when running against expert j alone. Diagonal is 1."""
    experts = sorted(w.placement)
    if len(experts) < 2:
        raise ValueError("slowdown matrix needs at least two experts")
    if trace is None:
        trace = generate_trace(w, t, seed=seed)
    cfg = _sim_config(seed, sim_cfg)
    span = float(trace.events[-1].t_ns)
    warmup = cfg.warmup_ns if cfg.warmup_ns is not None else 0.1 * span
    measure = cfg.measure_ns if cfg.measure_ns is not None else span - warmup
    fixed = {**cfg.__dict__, "warmup_ns": warmup, "measure_ns": measure}

    t_solo = {}
    for e in experts:
        rep = simulate(t, trace.filter_experts({e}), SimConfig(**fixed))
        t_solo[e] = _tokens(rep, e)

    matrix = {j: {k: 1.0 for k in experts} for j in experts}
    for i, j in enumerate(experts):
        for k in experts[i + 1:]:
            rep = simulate(t, trace.filter_experts({j, k}), SimConfig(**fixed))
            for a, other in ((k, j), (j, k)):
                pair_tokens = _tokens(rep, a)
                matrix[other][a] = (
                    t_solo[a] / pair_tokens if pair_tokens > 0 else math.inf
                )
    return matrix
