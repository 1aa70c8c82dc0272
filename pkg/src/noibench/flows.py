"""Cut and path analysis: memory-cut capacity (structural and max-flow),
minimal-path counting, link augmentation, and the design-space lower bound."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from . import errors
from .chiplets import DEFAULT_LINK_GBPS
from .rng import generator
from .topology import NoiTopology, _norm


@dataclass
class CutReport:
    cut_edges: list[tuple[int, int]]
    capacity_gbps: float
    is_min_cut: bool


class Dinic:
    """Max-flow on an undirected capacitated graph with a super source/sink."""

    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, cap_uv: float, cap_vu: float = 0.0):
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap_uv)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(cap_vu)

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            level = [-1] * self.n
            level[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for eid in self.head[u]:
                    v = self.to[eid]
                    if self.cap[eid] > 1e-12 and level[v] < 0:
                        level[v] = level[u] + 1
                        q.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def dfs(u: int, pushed: float) -> float:
                if u == t:
                    return pushed
                while it[u] < len(self.head[u]):
                    eid = self.head[u][it[u]]
                    v = self.to[eid]
                    if self.cap[eid] > 1e-12 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[eid]))
                        if got > 0:
                            self.cap[eid] -= got
                            self.cap[eid ^ 1] += got
                            return got
                    it[u] += 1
                return 0.0

            while True:
                pushed = dfs(s, math.inf)
                if pushed <= 0:
                    break
                flow += pushed

    def min_cut_side(self, s: int) -> set[int]:
        """Source side of the min cut in the residual graph (call after max_flow)."""
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for eid in self.head[u]:
                v = self.to[eid]
                if self.cap[eid] > 1e-12 and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


def memory_cut_capacity(
    t: NoiTopology, memory_set=None, mode: str = "structural"
) -> CutReport:
    """Capacity of the cut separating memory from the rest.

    structural: sum of bandwidth over edges with exactly one endpoint in the
    memory set. maxflow: min-cut capacity between a super-source attached to
    all memory nodes and a super-sink attached to all compute nodes.
    """
    memory = set(t.memory_nodes if memory_set is None else memory_set)
    if not memory:
        raise errors.EmptyMemorySet("memory set is empty")
    if len(memory) >= t.n_nodes:
        raise errors.EmptyMemorySet("memory set must be a proper subset of nodes")

    if mode == "structural":
        cut = [
            (a, b)
            for (a, b) in t.sorted_links()
            if (a in memory) != (b in memory)
        ]
        # fsum: correctly-rounded capacity (8 x 37.2 must equal 297.6 exactly)
        cap = math.fsum(t.links[e] for e in cut)
        return CutReport(cut_edges=cut, capacity_gbps=cap, is_min_cut=False)

    if mode != "maxflow":
        raise ValueError(f"unknown cut mode {mode!r}")
    compute = [c for c in t.compute_nodes if c not in memory]
    if not compute:
        raise errors.NoComputeNodes("no compute nodes outside the memory set")

    n = t.n_nodes
    s, snk = n, n + 1
    dinic = Dinic(n + 2)
    for (a, b), bw in sorted(t.links.items()):
        dinic.add_edge(a, b, bw, bw)
    for m in sorted(memory):
        dinic.add_edge(s, m, math.inf)
    for c in compute:
        dinic.add_edge(c, snk, math.inf)
    cap = dinic.max_flow(s, snk)
    side = dinic.min_cut_side(s)
    cut = [
        (a, b)
        for (a, b) in t.sorted_links()
        if (a in side) != (b in side)
    ]
    return CutReport(cut_edges=cut, capacity_gbps=cap, is_min_cut=True)


def path_multiplicity(t: NoiTopology, src: int, dst: int) -> int:
    """Exact count of distinct minimal-length paths between src and dst via
    dynamic programming over the BFS layering."""
    if src == dst:
        raise ValueError("src and dst must differ")
    dist = t.bfs_dist(src)
    if dist[dst] < 0:
        raise errors.Unreachable(f"{dst} not reachable from {src}")
    counts = [0] * t.n_nodes
    counts[src] = 1
    order = sorted(
        (v for v in range(t.n_nodes) if 0 <= dist[v] <= dist[dst]),
        key=lambda v: dist[v],
    )
    for v in order:
        if v == src:
            continue
        counts[v] = sum(counts[u] for u in t.neighbors(v) if dist[u] == dist[v] - 1)
    return counts[dst]


def design_space_lower_bound(n_vertices: int, n_links: int) -> int:
    """Number of ways to choose the link set: C(C(N,2), L), exact."""
    pairs = n_vertices * (n_vertices - 1) // 2
    if not 0 <= n_links <= pairs:
        raise errors.LOutOfRange(
            f"L={n_links} outside [0, {pairs}] for N={n_vertices}"
        )
    return math.comb(pairs, n_links)


# -- augmentation ---------------------------------------------------------------


@dataclass
class AugmentEntry:
    link: tuple[int, int]
    structural_capacity_gbps: float
    maxflow_capacity_gbps: float
    path_multiplicity: dict = field(default_factory=dict)


@dataclass
class AugmentLog:
    strategy: str
    entries: list[AugmentEntry] = field(default_factory=list)


def _legal_absent_pairs(t: NoiTopology):
    pairs = []
    for a in range(t.n_nodes):
        for b in range(a + 1, t.n_nodes):
            if t.has_link(a, b):
                continue
            if t.degree(a) >= t.nodes[a].port_cap:
                continue
            if t.degree(b) >= t.nodes[b].port_cap:
                continue
            pairs.append((a, b))
    return pairs


def _mc_path_counts(t: NoiTopology) -> dict:
    out = {}
    for m in t.memory_nodes:
        for c in t.compute_nodes:
            out[(m, c)] = path_multiplicity(t, m, c)
    return out


def augment(
    t: NoiTopology, n_links: int, strategy: str = "targeted", seed: int = 0
) -> tuple[NoiTopology, AugmentLog]:
    """Add n_links new links, greedily targeted across the memory cut or
    uniformly at random over all legal absent pairs.

    targeted: each added link crosses the memory cut and maximizes the marginal
    max-flow gain, ties broken by lowest (a, b). The log records, per link,
    the new cut capacities and the memory→compute minimal-path counts.
    """
    if n_links < 0:
        raise ValueError("n_links must be >= 0")
    log = AugmentLog(strategy=strategy)
    rng = generator(seed, "augment", strategy)
    memory = set(t.memory_nodes)
    current = t
    for _ in range(n_links):
        candidates = _legal_absent_pairs(current)
        if strategy == "targeted":
            candidates = [
                (a, b) for (a, b) in candidates if (a in memory) != (b in memory)
            ]
            if not candidates:
                raise errors.InfeasibleAugmentation("no legal cross-cut link left")
            base = memory_cut_capacity(current, mode="maxflow").capacity_gbps
            best, best_gain = None, -1.0
            for pair in candidates:  # already in lexicographic order
                trial = current.apply_edit("add", *pair)
                gain = memory_cut_capacity(trial, mode="maxflow").capacity_gbps - base
                if gain > best_gain + 1e-9:
                    best, best_gain = pair, gain
            pair = best
        elif strategy == "random":
            if not candidates:
                raise errors.InfeasibleAugmentation("no legal link left")
            pair = candidates[int(rng.integers(len(candidates)))]
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        current = current.apply_edit("add", *pair)
        log.entries.append(
            AugmentEntry(
                link=pair,
                structural_capacity_gbps=memory_cut_capacity(
                    current, mode="structural"
                ).capacity_gbps,
                maxflow_capacity_gbps=memory_cut_capacity(
                    current, mode="maxflow"
                ).capacity_gbps,
                path_multiplicity=_mc_path_counts(current),
            )
        )
    return current, log
