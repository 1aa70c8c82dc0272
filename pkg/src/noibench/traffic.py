"""MoE-style traffic synthesis: bursty, correlated, multicast flow traces.

Three message classes (expert weights, activations, control metadata) are
emitted per decode step. Expert selection follows top-k routing with phase
probabilities redrawn every 64 steps and negatively correlated logits for
competing expert pairs. Flow inter-arrival gaps come from a two-state MMPP.
Timestamps are scaled so that the offered load on the generating topology's
memory cut equals rho_target times its capacity.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import errors
from .flows import memory_cut_capacity
from .routing import RoutingCache, multicast_trie
from .rng import generator
from .topology import NoiTopology

CHUNK_BYTES = 262144  # 256 KB weight chunking
PHASE_LEN = 64
MULTICAST_DEGREES = (1, 2, 4, 8)
MULTICAST_PMF = (0.55, 0.25, 0.15, 0.05)

# Two-state MMPP defaults. The transition probabilities are applied per gap;
# the nominal burst rate ratio of 6 yields inter-arrival C_a^2 ~ 2.67 under
# this mechanism, so the default ratio is calibrated to hit the published
# empirical C_a^2 ~ 1.37.
MMPP_P_HL = 0.15
MMPP_P_LH = 0.35
RATE_RATIO_NOMINAL = 6.0
RATE_RATIO_DEFAULT = 2.31

ACT_MU = 10.6
ACT_SIGMA = 0.45
ACT_BOUNDS = (8192, 1048576)
CONTROL_BYTES = 256

FLOW_CLASSES = ("weight", "activation", "control")


@dataclass(frozen=True)
class FlowEvent:
    t_ns: int
    src: int
    dsts: tuple[int, ...]
    bytes: int
    cls: str
    expert: int


@dataclass(frozen=True)
class ExpertPhase:
    probs: tuple[float, ...]
    phase_len: int = PHASE_LEN


@dataclass
class WorkloadSpec:
    """Mixtral-8x7B-shaped workload mapped onto a chiplet canvas."""

    layers: int = 32
    d_model: int = 4096
    num_experts: int = 8
    top_k: int = 2
    context: int = 32768
    bytes_per_weight: int = 2
    active_experts: int = 4
    placement: dict[int, tuple[int, ...]] = field(default_factory=dict)
    q_hbm_bytes: float = 1048576.0  # roofline accounting default: 1 MB/token

    batch_tokens: int = 16
    steps: int = 256
    phase_len: int = PHASE_LEN
    dirichlet_alpha: float = 1.0
    pair_correlation: float = -0.18
    rho_target: float = 0.7
    refresh_chunks: int = 16  # chunks streamed at first activation per phase
    act_mu: float = ACT_MU
    act_sigma: float = ACT_SIGMA
    act_bounds: tuple[int, int] = ACT_BOUNDS
    control_bytes: int = CONTROL_BYTES
    mmpp_p_hl: float = MMPP_P_HL
    mmpp_p_lh: float = MMPP_P_LH
    mmpp_rate_ratio: float = RATE_RATIO_DEFAULT

    def __post_init__(self):
        if not 1 <= self.top_k <= self.num_experts:
            raise ValueError("need 1 <= top_k <= num_experts")
        if self.active_experts > self.num_experts:
            raise ValueError("active_experts cannot exceed num_experts")
        if self.bytes_per_weight not in (2, 4):
            raise ValueError("bytes_per_weight must be 2 or 4")

    @property
    def w_ffn_bytes(self) -> int:
        """Per-expert FFN parameter bytes: 8 * d^2 * s."""
        return 8 * self.d_model * self.d_model * self.bytes_per_weight

    @property
    def full_refresh_chunks(self) -> int:
        return math.ceil(self.w_ffn_bytes / CHUNK_BYTES)

    def mean_activation_bytes(self) -> float:
        return math.exp(self.act_mu + self.act_sigma**2 / 2.0)

    def selections_per_step(self) -> float:
        """Expected (token, mapped expert) pairs per decode step."""
        return (
            self.batch_tokens * self.top_k * self.active_experts / self.num_experts
        )

    def per_token_bytes_estimate(self) -> float:
        """Expected HBM-sourced bytes per routed (token, expert) selection:
        activation + control + amortized weight chunks."""
        sel_per_phase_per_expert = (
            self.phase_len * self.batch_tokens * self.top_k / self.num_experts
        )
        weight_amortized = (
            self.refresh_chunks * CHUNK_BYTES / max(1.0, sel_per_phase_per_expert)
        )
        return self.mean_activation_bytes() + self.control_bytes + weight_amortized

    def weight_source(self, t: NoiTopology, expert: int) -> int:
        """Memory node closest to the expert's placement (sum of hop counts,
        lowest id on ties)."""
        nodes = self.placement[expert]
        best, best_cost = None, None
        for m in t.memory_nodes:
            dist = t.bfs_dist(m)
            cost = sum(dist[c] for c in nodes)
            if best_cost is None or cost < best_cost:
                best, best_cost = m, cost
        if best is None:
            raise errors.UnplacedExpert("topology has no memory nodes")
        return best


def default_expert_placement(t: NoiTopology, n_experts: int = 4,
                             nodes_per_expert: int | None = None) -> dict:
    """Interleave experts across the compute nodes (expert i takes compute
    nodes i, i+K, i+2K, ...). Spreading is deliberate: it reproduces the
    cross-expert sharing of central links that makes baselines interfere."""
    compute = sorted(t.compute_nodes)
    if len(compute) < n_experts:
        raise errors.UnplacedExpert("fewer compute nodes than experts")
    per = nodes_per_expert or max(1, len(compute) // n_experts)
    placement = {}
    for e in range(n_experts):
        picks = [compute[i] for i in range(e, len(compute), n_experts)][:per]
        placement[e] = tuple(sorted(picks))
    return placement


def default_workload(t: NoiTopology, **overrides) -> WorkloadSpec:
    w = WorkloadSpec(**overrides)
    if not w.placement:
        w = replace(w, placement=default_expert_placement(t, w.active_experts))
    return w


# -- expert phases and routing ---------------------------------------------------


def sample_expert_phase(n_experts: int, alpha: float = 1.0, seed: int = 0) -> ExpertPhase:
    """One Dirichlet(alpha) probability vector; deterministic per seed."""
    if n_experts < 1 or alpha <= 0:
        raise ValueError("need n_experts >= 1 and alpha > 0")
    if n_experts == 1:
        return ExpertPhase(probs=(1.0,))
    rng = generator(seed, "phase")
    p = rng.dirichlet([alpha] * n_experts)
    return ExpertPhase(probs=tuple(float(x) for x in p))


def phase_schedule(n_experts: int, n_phases: int, alpha: float, seed: int):
    """The per-phase probability vectors for a whole trace."""
    rng = generator(seed, "phase")
    return [
        ExpertPhase(probs=tuple(float(x) for x in rng.dirichlet([alpha] * n_experts)))
        for _ in range(n_phases)
    ]


def route_tokens(
    phase: ExpertPhase,
    batch_tokens: int,
    top_k: int,
    pair_correlation: float = -0.18,
    seed: int = 0,
    rng: np.random.Generator | None = None,
):
    """Top-k expert selection per token with correlated gating noise.

    Each token draws one Gaussian logit per expert; competing pairs
    (0,1), (2,3), ... share the target pairwise correlation. Phase
    log-probabilities bias the logits. Returns (list of per-token expert
    tuples, per-expert load vector).
    """
    n_experts = len(phase.probs)
    if not (top_k <= n_experts and -1.0 < pair_correlation <= 0.0):
        raise ValueError("need top_k <= E and -1 < pair_correlation <= 0")
    if rng is None:
        rng = generator(seed, "routing")
    z = rng.standard_normal((batch_tokens, n_experts))
    if pair_correlation != 0.0:
        rho = pair_correlation
        mix = math.sqrt(1.0 - rho * rho)
        for a in range(0, n_experts - 1, 2):
            z[:, a + 1] = rho * z[:, a] + mix * z[:, a + 1]
    logits = z + np.log(np.maximum(phase.probs, 1e-15))
    if top_k == n_experts:
        chosen = np.tile(np.arange(n_experts), (batch_tokens, 1))
    else:
        chosen = np.argpartition(-logits, top_k - 1, axis=1)[:, :top_k]
    loads = np.bincount(chosen.ravel(), minlength=n_experts)
    sets = [tuple(sorted(int(e) for e in row)) for row in chosen]
    return sets, loads


# -- arrivals --------------------------------------------------------------------


def arrival_process(
    lam_h: float,
    n_gaps: int,
    seed: int = 0,
    p_hl: float = MMPP_P_HL,
    p_lh: float = MMPP_P_LH,
    rate_ratio: float = RATE_RATIO_DEFAULT,
    start_state: str = "H",
):
    """Two-state MMPP arrival times.

    Gaps are exponential at the current state's rate (lam_h in H, lam_h /
    rate_ratio in L); after each gap the state switches with probability p_hl
    (from H) or p_lh (from L). Returns cumulative timestamps, length n_gaps.
    """
    if lam_h <= 0 or n_gaps < 1:
        raise ValueError("need lam_h > 0 and n_gaps >= 1")
    rng = generator(seed, "arrivals")
    u_gap = rng.random(n_gaps)
    u_sw = rng.random(n_gaps)
    lam_l = lam_h / rate_ratio
    gaps = np.empty(n_gaps)
    in_h = start_state == "H"
    for i in range(n_gaps):
        gaps[i] = -math.log1p(-u_gap[i]) / (lam_h if in_h else lam_l)
        if in_h:
            if u_sw[i] < p_hl:
                in_h = False
        elif u_sw[i] < p_lh:
            in_h = True
    return np.cumsum(gaps)


# -- traces ----------------------------------------------------------------------


@dataclass
class TrafficTrace:
    events: list[FlowEvent]
    meta: dict = field(default_factory=dict)

    @property
    def span_ns(self) -> int:
        return self.events[-1].t_ns if self.events else 0

    def filter_experts(self, experts) -> "TrafficTrace":
        keep = set(experts)
        return TrafficTrace(
            events=[ev for ev in self.events if ev.expert in keep],
            meta={**self.meta, "filtered_to": tuple(sorted(keep))},
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["timestamp_ns", "src", "dsts", "bytes", "class", "expert"])
        for ev in self.events:
            writer.writerow(
                [ev.t_ns, ev.src, "|".join(str(d) for d in ev.dsts), ev.bytes,
                 ev.cls, ev.expert]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "TrafficTrace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["timestamp_ns", "src", "dsts", "bytes",
                                   "class", "expert"]:
            raise ValueError("bad trace CSV header")
        events = [
            FlowEvent(
                t_ns=int(r[0]),
                src=int(r[1]),
                dsts=tuple(int(x) for x in r[2].split("|")),
                bytes=int(r[3]),
                cls=r[4],
                expert=int(r[5]),
            )
            for r in rows[1:]
        ]
        return cls(events=events, meta=meta or {})


def _multicast_pool(t: NoiTopology, placement_nodes, pool_size: int = 8):
    """Placement plus nearest other compute nodes, ordered (hop dist, id)."""
    fields = [t.bfs_dist(p) for p in placement_nodes]
    dist = [min(f[v] for f in fields) for v in range(t.n_nodes)]
    ranked = sorted(
        (v for v in t.compute_nodes),
        key=lambda v: (v not in placement_nodes, dist[v], v),
    )
    return ranked[:pool_size]


def generate_trace(
    workload: WorkloadSpec,
    t: NoiTopology,
    duration_ns: float | None = None,
    seed: int = 0,
) -> TrafficTrace:
    """Synthesize the flow trace for a placed workload on a topology.

    Emits, per decode step: activation flows (one multicast per routed token
    and mapped expert), a 256-byte control flow per selection, and weight-chunk
    streams at each mapped expert's first activation in a phase. Timestamps are
    MMPP arrivals scaled so that offered memory-cut load equals
    rho_target * Cap(cut) on the generating topology. Deterministic per seed.
    """
    w = workload
    if not w.placement:
        raise errors.UnplacedExpert("no experts placed")
    for e, nodes in w.placement.items():
        if not nodes:
            raise errors.UnplacedExpert(f"expert {e} has an empty placement")
    if duration_ns is not None and duration_ns <= 0:
        raise errors.EmptyDuration(f"duration_ns={duration_ns}")

    cap = memory_cut_capacity(t, mode="structural").capacity_gbps  # bytes/ns
    offered = w.rho_target * cap
    if duration_ns is None:
        n_steps = w.steps
    else:
        per_step = w.selections_per_step() * w.per_token_bytes_estimate()
        n_steps = max(1, int(round(duration_ns * offered / per_step)))

    n_phases = math.ceil(n_steps / w.phase_len)
    phases = phase_schedule(w.num_experts, n_phases, w.dirichlet_alpha, seed)
    route_rng = generator(seed, "routing")
    expert_rngs = {e: generator(seed, "expert", e) for e in sorted(w.placement)}
    sources = {e: w.weight_source(t, e) for e in sorted(w.placement)}
    pools = {
        e: _multicast_pool(t, w.placement[e]) for e in sorted(w.placement)
    }

    lo, hi = w.act_bounds
    mapped = sorted(w.placement)
    flows: list[tuple[int, tuple[int, ...], int, str, int]] = []
    refreshed: set[tuple[int, int]] = set()
    for step in range(n_steps):
        phase_idx = step // w.phase_len
        sets, _loads = route_tokens(
            phases[phase_idx], w.batch_tokens, w.top_k, w.pair_correlation,
            rng=route_rng,
        )
        active_now = sorted({e for s in sets for e in s if e in w.placement})
        for e in active_now:
            if (phase_idx, e) not in refreshed:
                refreshed.add((phase_idx, e))
                for _ in range(w.refresh_chunks):
                    flows.append(
                        (sources[e], w.placement[e], CHUNK_BYTES, "weight", e)
                    )
        for token_experts in sets:
            for e in token_experts:
                if e not in w.placement:
                    continue
                rng_e = expert_rngs[e]
                pool = pools[e]
                degrees = [d for d in MULTICAST_DEGREES if d <= len(pool)]
                pmf = np.array(MULTICAST_PMF[: len(degrees)])
                pmf = pmf / pmf.sum()
                deg = int(rng_e.choice(degrees, p=pmf))
                dst_idx = rng_e.choice(len(pool), size=deg, replace=False)
                dsts = tuple(sorted(pool[i] for i in dst_idx))
                while True:
                    size = rng_e.lognormal(w.act_mu, w.act_sigma)
                    if lo <= size <= hi:
                        break
                flows.append((sources[e], dsts, int(size), "activation", e))
                flows.append(
                    ((w.placement[e][0], (sources[e],), w.control_bytes,
                      "control", e))
                )

    if not flows:
        raise errors.EmptyDuration("workload produced no flows")

    # MMPP timing at unit high-state rate, then exact offered-load calibration
    unit_times = arrival_process(
        1.0, len(flows), seed=seed, p_hl=w.mmpp_p_hl, p_lh=w.mmpp_p_lh,
        rate_ratio=w.mmpp_rate_ratio,
    )
    cache = RoutingCache(t)
    memory = set(t.memory_nodes)
    cut_bytes = 0
    for src, dsts, size, _cls, _e in flows:
        if src in memory:
            trie = multicast_trie(cache, src, dsts, "deterministic_sp")
            crossings = sum(
                1
                for tail, head in zip(trie.tails, trie.heads)
                if tail in memory and head not in memory
            )
            cut_bytes += size * max(1, crossings)
    scale = cut_bytes / (offered * unit_times[-1])
    events = [
        FlowEvent(
            t_ns=int(round(unit_times[i] * scale)),
            src=src,
            dsts=tuple(dsts),
            bytes=size,
            cls=cls,
            expert=e,
        )
        for i, (src, dsts, size, cls, e) in enumerate(flows)
    ]
    meta = {
        "seed": seed,
        "n_steps": n_steps,
        "rho_target": w.rho_target,
        "cut_capacity_gbps": cap,
        "offered_cut_bytes": cut_bytes,
        "span_ns": events[-1].t_ns,
        "memory_nodes": tuple(t.memory_nodes),
        "weight_sources": sources,
        "placement": dict(w.placement),
        "per_token_bytes": w.per_token_bytes_estimate(),
    }
    return TrafficTrace(events=events, meta=meta)


# -- synthetic single-queue traces (calibration) ----------------------------------


def poisson_trace(n_flows: int, rate_per_ns: float, mean_bytes: float,
                  src: int, dst: int, seed: int = 0) -> TrafficTrace:
    """Poisson arrivals with exponential sizes over one hop (M/M/1 input)."""
    rng = generator(seed, "poisson")
    gaps = rng.exponential(1.0 / rate_per_ns, n_flows)
    sizes = rng.exponential(mean_bytes, n_flows)
    times = np.cumsum(gaps)
    events = [
        FlowEvent(
            t_ns=int(round(times[i])),
            src=src,
            dsts=(dst,),
            bytes=max(1, int(sizes[i])),
            cls="weight",
            expert=0,
        )
        for i in range(n_flows)
    ]
    return TrafficTrace(events=events, meta={"memory_nodes": (src,)})


def constant_trace(n_flows: int, gap_ns: float, size_bytes: int, src: int,
                   dst: int) -> TrafficTrace:
    """Constant-rate unicast flows (degenerate burstiness check)."""
    events = [
        FlowEvent(
            t_ns=int(round((i + 1) * gap_ns)),
            src=src,
            dsts=(dst,),
            bytes=size_bytes,
            cls="weight",
            expert=0,
        )
        for i in range(n_flows)
    ]
    return TrafficTrace(events=events, meta={"memory_nodes": (src,)})


# -- trace statistics --------------------------------------------------------------


def trace_stats(trace: TrafficTrace, window_ns: float = 1000.0,
                memory_nodes=None) -> dict:
    """Windowed ingress statistics at memory nodes plus global arrival stats."""
    if not trace.events:
        raise errors.EmptyTrace("empty trace")
    memory = set(
        trace.meta.get("memory_nodes", ()) if memory_nodes is None else memory_nodes
    )
    times = np.array([ev.t_ns for ev in trace.events], dtype=float)
    gaps = np.diff(times)
    ca2 = float(gaps.var() / gaps.mean() ** 2) if len(gaps) > 1 and gaps.mean() > 0 else 0.0

    span = max(trace.events[-1].t_ns, 1)
    n_windows = max(1, int(math.ceil(span / window_ns)))
    ingress = np.zeros(n_windows)
    class_bytes = {c: 0 for c in FLOW_CLASSES}
    total_bytes = 0
    for ev in trace.events:
        class_bytes[ev.cls] = class_bytes.get(ev.cls, 0) + ev.bytes
        total_bytes += ev.bytes
        if ev.src in memory:
            idx = min(n_windows - 1, int(ev.t_ns // window_ns))
            ingress[idx] += ev.bytes
    mean_ingress = float(ingress.mean())
    cv = float(ingress.std() / mean_ingress) if mean_ingress > 0 else 0.0
    return {
        "ca2": ca2,
        "mean_injection_gbps": total_bytes / span,  # bytes/ns == GB/s
        "class_byte_share": {
            c: (class_bytes.get(c, 0) / total_bytes if total_bytes else 0.0)
            for c in FLOW_CLASSES
        },
        "ingress_cv": cv,
        "ingress_window_ns": window_ns,
        "ingress_windows": ingress,
    }
