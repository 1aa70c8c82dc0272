"""Minimal-path routing over a topology.

deterministic_sp picks the lexicographically-least shortest node sequence;
ecmp_split samples uniformly over all minimal paths using a stateless hash of
the flow id, via path-count weights on the shortest-path DAG. Multicast flows
become tries of routes (shared prefixes deduplicated, one packet copy per trie
edge).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import errors
from .rng import hash_u64
from .topology import NoiTopology


class RoutingCache:
    """Per-topology cache of BFS distance fields and path counts."""

    def __init__(self, t: NoiTopology):
        self.t = t
        self._dist_to: dict[int, list[int]] = {}
        self._counts_to: dict[int, list[int]] = {}

    def dist_to(self, dst: int) -> list[int]:
        """Hop distance from every node to dst."""
        if dst not in self._dist_to:
            self._dist_to[dst] = self.t.bfs_dist(dst)
        return self._dist_to[dst]

    def counts_to(self, dst: int) -> list[int]:
        """Number of minimal paths from every node to dst."""
        if dst not in self._counts_to:
            dist = self.dist_to(dst)
            counts = [0] * self.t.n_nodes
            counts[dst] = 1
            for v in sorted(range(self.t.n_nodes), key=lambda v: dist[v]):
                if v == dst or dist[v] < 0:
                    continue
                counts[v] = sum(
                    counts[u] for u in self.t.neighbors(v) if dist[u] == dist[v] - 1
                )
            self._counts_to[dst] = counts
        return self._counts_to[dst]

    def route(self, src: int, dst: int, policy: str, flow_key: int = 0,
              seed: int = 0) -> tuple[int, ...]:
        """Node sequence of one minimal path from src to dst."""
        if src == dst:
            return (src,)
        dist = self.dist_to(dst)
        if dist[src] < 0:
            raise errors.Unreachable(f"{dst} not reachable from {src}")
        if policy == "deterministic_sp":
            path = [src]
            cur = src
            while cur != dst:
                cur = min(
                    u for u in self.t.neighbors(cur) if dist[u] == dist[cur] - 1
                )
                path.append(cur)
            return tuple(path)
        if policy == "ecmp_split":
            counts = self.counts_to(dst)
            path = [src]
            cur = src
            hop = 0
            while cur != dst:
                nexts = [
                    u for u in self.t.neighbors(cur) if dist[u] == dist[cur] - 1
                ]
                total = sum(counts[u] for u in nexts)
                u01 = ((hash_u64(seed, flow_key, src, dst, hop) >> 11) + 0.5) / (
                    1 << 53
                )
                pick = u01 * total
                acc = 0
                for u in nexts:
                    acc += counts[u]
                    if pick < acc:
                        cur = u
                        break
                else:
                    cur = nexts[-1]
                path.append(cur)
                hop += 1
            return tuple(path)
        raise ValueError(f"unknown routing policy {policy!r}")

    def edge_split_fractions(self, src: int, dst: int) -> dict[tuple[int, int], float]:
        """Fraction of src→dst traffic per directed edge under even splitting
        across all minimal paths (the ECMP expectation)."""
        if src == dst:
            return {}
        dist_t = self.dist_to(dst)
        if dist_t[src] < 0:
            raise errors.Unreachable(f"{dst} not reachable from {src}")
        counts_to = self.counts_to(dst)
        # paths from src: forward DP on the same DAG
        dist_s = self.dist_to(src)
        counts_from = [0] * self.t.n_nodes
        counts_from[src] = 1
        d = dist_t[src]
        on_dag = [
            v for v in range(self.t.n_nodes)
            if dist_s[v] >= 0 and dist_t[v] >= 0 and dist_s[v] + dist_t[v] == d
        ]
        for v in sorted(on_dag, key=lambda v: dist_s[v]):
            if v == src:
                continue
            counts_from[v] = sum(
                counts_from[u]
                for u in self.t.neighbors(v)
                if dist_s[u] == dist_s[v] - 1 and dist_s[u] + dist_t[u] == d
            )
        total = counts_to[src]
        fracs: dict[tuple[int, int], float] = {}
        for u in on_dag:
            for v in self.t.neighbors(u):
                if (
                    dist_s[v] == dist_s[u] + 1
                    and dist_t[v] >= 0
                    and dist_s[v] + dist_t[v] == d
                ):
                    share = counts_from[u] * counts_to[v] / total
                    if share > 0:
                        fracs[(u, v)] = share
        return fracs


def compute_route(
    t: NoiTopology, src: int, dst: int, policy: str = "deterministic_sp",
    flow_key: int = 0, seed: int = 0,
) -> tuple[int, ...]:
    """One-shot route (no cache reuse): see RoutingCache.route."""
    return RoutingCache(t).route(src, dst, policy, flow_key, seed)


@dataclass
class Trie:
    """Multicast forwarding trie. Edge i traverses graph edge (tail->head);
    parent[i] is the trie edge whose head feeds it (-1 at the source), and
    delivers[i] marks trie edges that terminate at a flow destination."""

    src: int
    tails: list[int]
    heads: list[int]
    parent: list[int]
    delivers: list[int]

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    @property
    def n_deliveries(self) -> int:
        return sum(self.delivers)


def multicast_trie(
    cache: RoutingCache, src: int, dsts, policy: str, flow_key: int = 0,
    seed: int = 0,
) -> Trie:
    """Union of the per-destination routes with shared prefixes deduplicated."""
    trie = Trie(src=src, tails=[], heads=[], parent=[], delivers=[])
    by_prefix: dict[tuple[int, int], int] = {}  # (parent trie edge, head) -> edge
    for dst in sorted(set(dsts)):
        path = cache.route(src, dst, policy, flow_key, seed)
        parent = -1
        for u, v in zip(path, path[1:]):
            key = (parent, v)
            if key not in by_prefix:
                by_prefix[key] = trie.n_edges
                trie.tails.append(u)
                trie.heads.append(v)
                trie.parent.append(parent)
                trie.delivers.append(0)
            parent = by_prefix[key]
        if parent >= 0:
            trie.delivers[parent] = 1
        # src in dsts would deliver locally with zero hops; disallowed upstream
    return trie
