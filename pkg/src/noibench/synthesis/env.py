"""Topology-edit MDP: states are topologies, actions add or remove one link
(plus a no-op), illegal actions are masked, and the reward is the normalized
multi-objective score of the edited topology under analytic proxies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import errors
from ..flows import memory_cut_capacity
from ..queueing import ProxyMetrics, analytic_proxy_eval, cut_roofline, _diameter_latency
from ..topology import NoiTopology, sparse_canvas
from ..traffic import WorkloadSpec, default_workload
from .normalize import (
    FixedNormalizer,
    RewardWeights,
    RunningNormalizer,
    reward_fn,
)

EPISODE_LENGTH = 32


@dataclass
class MdpState:
    topology: NoiTopology
    step_index: int
    budget: int


class ActionSpace:
    """Unordered node pairs in lexicographic order, add then remove, plus a
    trailing no-op action."""

    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes
        self.pairs = [
            (a, b) for a in range(n_nodes) for b in range(a + 1, n_nodes)
        ]
        self.n_pairs = len(self.pairs)
        self.n_actions = 2 * self.n_pairs + 1
        self.noop = self.n_actions - 1

    def describe(self, action: int) -> tuple[str, tuple[int, int] | None]:
        if action == self.noop:
            return ("noop", None)
        if action < self.n_pairs:
            return ("add", self.pairs[action])
        return ("remove", self.pairs[action - self.n_pairs])


def legal_actions(state: MdpState, space: ActionSpace) -> np.ndarray:
    """Boolean mask over the action space; a pure function of the topology."""
    t = state.topology
    mask = np.zeros(space.n_actions, dtype=bool)
    free_port = [t.degree(i) < t.nodes[i].port_cap for i in range(t.n_nodes)]
    for idx, (a, b) in enumerate(space.pairs):
        if t.has_link(a, b):
            if not t.is_bridge(a, b):
                mask[space.n_pairs + idx] = True
        elif free_port[a] and free_port[b]:
            mask[idx] = True
    mask[space.noop] = True
    return mask


def featurize(state: MdpState, space: ActionSpace) -> np.ndarray:
    """Fixed-length observation: adjacency upper triangle, degree/cap ratios,
    normalized cut capacity, per-memory-node cross-cut link counts, and the
    episode step fraction."""
    t = state.topology
    adj = np.fromiter(
        (1.0 if t.has_link(a, b) else 0.0 for a, b in space.pairs),
        dtype=np.float32,
        count=space.n_pairs,
    )
    ratios = np.array(
        [t.degree(i) / t.nodes[i].port_cap for i in range(t.n_nodes)],
        dtype=np.float32,
    )
    memory = t.memory_nodes
    cut = memory_cut_capacity(t, mode="structural").capacity_gbps
    cut_max = sum(t.nodes[m].port_cap for m in memory) * max(t.links.values())
    cross = np.array(
        [
            sum(1 for v in t.neighbors(m) if v not in memory)
            for m in memory
        ],
        dtype=np.float32,
    )
    frac = np.array([state.step_index / max(1, state.budget)], dtype=np.float32)
    return np.concatenate(
        [adj, ratios, np.array([cut / cut_max], dtype=np.float32), cross, frac]
    )


def proxy_bundle(t: NoiTopology, w: WorkloadSpec) -> dict:
    """Raw reward metrics from the analytic proxies."""
    pm: ProxyMetrics = analytic_proxy_eval(t, w)
    return {
        "throughput": pm.throughput_proxy,
        "interference": pm.interference_proxy,
        "latency": pm.latency_proxy,
        "power": pm.power_proxy,
        "saturated": pm.saturated,
    }


@dataclass
class SynthesisEnv:
    """Bundles the MDP pieces: initial canvas, workload, weights, normalizer."""

    initial: NoiTopology = field(default_factory=sparse_canvas)
    workload: WorkloadSpec | None = None
    weights: RewardWeights = field(default_factory=RewardWeights)
    episode_length: int = EPISODE_LENGTH

    def __post_init__(self):
        if self.workload is None:
            self.workload = default_workload(self.initial)
        self.space = ActionSpace(self.initial.n_nodes)
        self.normalizer = RunningNormalizer()
        self.fixed = reference_normalizer(self.initial, self.workload)

    def reset(self) -> MdpState:
        return MdpState(
            topology=self.initial, step_index=0, budget=self.episode_length
        )

    def step(self, state: MdpState, action: int):
        """Apply an unmasked action; returns (state', reward, done, metrics)."""
        mask = legal_actions(state, self.space)
        if not mask[action]:
            raise errors.MaskedActionTaken(f"action {action} is masked")
        op, pair = self.space.describe(action)
        if op == "noop":
            topo = state.topology
        else:
            topo = state.topology.apply_edit(op, *pair)
        nxt = MdpState(
            topology=topo, step_index=state.step_index + 1, budget=state.budget
        )
        metrics = proxy_bundle(topo, self.workload)
        reward = reward_fn(self.normalizer.update(metrics), self.weights)
        done = nxt.step_index >= state.budget
        return nxt, reward, done, metrics

    def fixed_score(self, metrics: dict) -> float:
        return reward_fn(self.fixed(metrics), self.weights)


def reference_normalizer(initial: NoiTopology, w: WorkloadSpec) -> FixedNormalizer:
    cap = memory_cut_capacity(initial, mode="structural").capacity_gbps
    q = w.per_token_bytes_estimate()
    thr_hi = 2.0 * cut_roofline(cap, q)
    lat_hi = 100.0 * _diameter_latency(initial, w.mean_activation_bytes())
    caps = sum(n.port_cap for n in initial.nodes)
    max_links = min(caps // 2, initial.n_nodes * (initial.n_nodes - 1) // 2)
    pow_hi = 1.0 * max_links + 0.1 * caps
    return FixedNormalizer(thr_hi, lat_hi, pow_hi)
