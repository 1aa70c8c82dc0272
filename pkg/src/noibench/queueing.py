"""Analytic queueing models: heavy-traffic single-queue wait estimate, the
memory-cut throughput roofline, and fast proxy evaluation of a topology under
a workload (the signal the topology search trains against).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import errors
from .flows import memory_cut_capacity
from .routing import RoutingCache
from .topology import NoiTopology

#: per-hop router processing delay: 4 cycles at 2 GHz
ROUTER_DELAY_NS = 2.0
#: arrival burstiness assumed by the proxies (matches the traffic defaults)
PROXY_CA2 = 1.37
#: HBM egress service variability assumed by the proxies
PROXY_CS2 = 0.5
#: latency sentinel for saturated topologies: 100x the unloaded diameter latency
SATURATION_FACTOR = 100.0


def kingman_wait(rho: float, ca2: float, cs2: float, mu: float) -> float:
    """Mean queueing wait of a GI/GI/1 queue in heavy traffic:
    (rho/(1-rho)) * ((ca2+cs2)/2) * (1/mu)."""
    if not 0.0 <= rho:
        raise ValueError("rho must be nonnegative")
    if rho >= 1.0:
        raise errors.UnstableQueue(f"rho={rho} >= 1")
    if ca2 < 0 or cs2 < 0:
        raise ValueError("squared CVs must be nonnegative")
    if mu <= 0:
        raise ValueError("mu must be positive")
    return (rho / (1.0 - rho)) * ((ca2 + cs2) / 2.0) * (1.0 / mu)


def cut_roofline(cap_gbps: float, q_hbm_bytes: float) -> float:
    """Max sustainable tokens/s given cut capacity and HBM bytes per token."""
    if cap_gbps <= 0 or q_hbm_bytes <= 0:
        raise ValueError("capacity and per-token bytes must be positive")
    return cap_gbps * 1e9 / q_hbm_bytes


def utilization_relief(lam: float, mu_before: float, mu_after: float) -> float:
    """Utilization drop lam*(1/mu_before - 1/mu_after) from a service-rate
    increase; positive means relief."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0 < mu_before <= mu_after:
        raise ValueError("need mu_after >= mu_before > 0")
    return lam * (1.0 / mu_before - 1.0 / mu_after)


def split_queue_wait(rho_total: float, k: int, ca2: float, cs2: float,
                     mu: float) -> float:
    """Expected per-queue wait when the load splits evenly over k queues."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return kingman_wait(rho_total / k, ca2, cs2, mu)


# -- analytic proxy evaluation ---------------------------------------------------


@dataclass
class ProxyMetrics:
    throughput_proxy: float  # tokens/s
    latency_proxy: float     # ns
    power_proxy: float       # normalized watts (invented monotone proxy)
    interference_proxy: float
    saturated: bool
    components: dict = field(default_factory=dict)


def _expert_demands(t: NoiTopology, w) -> dict:
    """Per-expert steady demand in bytes/ns and its link shares under even
    minimal-path splitting from the expert's weight source."""
    cache = RoutingCache(t)
    cap = memory_cut_capacity(t, mode="structural").capacity_gbps
    offered = w.rho_target * cap  # bytes/ns across the cut
    per_expert = offered / max(1, w.active_experts)
    demands = {}
    for e in sorted(w.placement):
        nodes = w.placement[e]
        src = w.weight_source(t, e)
        per_dst = per_expert / len(nodes)
        link_load: dict[tuple[int, int], float] = {}
        for dst in nodes:
            for edge, frac in cache.edge_split_fractions(src, dst).items():
                link_load[edge] = link_load.get(edge, 0.0) + per_dst * frac
        demands[e] = {"src": src, "rate": per_expert, "links": link_load}
    return demands, cache


def _path_latency(t: NoiTopology, cache: RoutingCache, src, dsts, link_rho,
                  mean_bytes: float, ca2: float, cs2: float) -> float:
    """Mean ns for one packet over the even-split minimal paths, Kingman wait
    added per traversed link; inf when a traversed link is saturated."""
    total = 0.0
    for dst in dsts:
        lat = 0.0
        for (u, v), frac in cache.edge_split_fractions(src, dst).items():
            bw = t.bandwidth(u, v)  # bytes/ns
            rho = link_rho.get((u, v), 0.0)
            if rho >= 1.0:
                return math.inf
            mu = bw / mean_bytes  # packets/ns
            wait = kingman_wait(rho, ca2, cs2, mu)
            lat += frac * (mean_bytes / bw + ROUTER_DELAY_NS + wait)
        total += lat
    return total / len(dsts)


def _diameter_latency(t: NoiTopology, mean_bytes: float) -> float:
    diam = 0
    for n in range(t.n_nodes):
        diam = max(diam, max(t.bfs_dist(n)))
    bw_min = min(t.links.values())
    return diam * (mean_bytes / bw_min + ROUTER_DELAY_NS)


def analytic_proxy_eval(t: NoiTopology, w) -> ProxyMetrics:
    """Deterministic high-speed estimate of throughput, latency, power and
    interference for a placed workload on a topology.

    throughput: min(memory-cut roofline, balanced per-expert max-flow rooflines).
    latency: demand-weighted Kingman path latency at the workload's offered load.
    interference: worst-case ratio of concurrent to solo path latency.
    power: invented monotone proxy over link count/activity and node degree.
    """
    if not w.placement:
        raise errors.UnplacedExpert("workload has no expert placement")
    q_bytes = w.per_token_bytes_estimate()
    cap = memory_cut_capacity(t, mode="structural").capacity_gbps
    roof = cut_roofline(cap, q_bytes)

    demands, cache = _expert_demands(t, w)
    # balanced per-expert rooflines via max-flow from the memory set
    per_expert_roofs = {}
    for e, d in demands.items():
        sub_cap = _maxflow_to(t, d["src"], w.placement[e])
        per_expert_roofs[e] = cut_roofline(sub_cap, q_bytes)
    k = len(demands)
    balanced = k * min(per_expert_roofs.values())
    offered_tokens = w.rho_target * cap * 1e9 / q_bytes
    throughput = min(roof, balanced, offered_tokens)

    # concurrent link utilisations
    link_rho: dict[tuple[int, int], float] = {}
    for d in demands.values():
        for edge, lam in d["links"].items():
            link_rho[edge] = link_rho.get(edge, 0.0) + lam / t.bandwidth(*edge)

    mean_bytes = w.mean_activation_bytes()
    lat_parts, sat = {}, False
    is_parts = {}
    for e, d in demands.items():
        solo_rho = {
            edge: lam / t.bandwidth(*edge) for edge, lam in d["links"].items()
        }
        lat_con = _path_latency(
            t, cache, d["src"], w.placement[e], link_rho, mean_bytes,
            PROXY_CA2, PROXY_CS2,
        )
        lat_solo = _path_latency(
            t, cache, d["src"], w.placement[e], solo_rho, mean_bytes,
            PROXY_CA2, PROXY_CS2,
        )
        lat_parts[e] = lat_con
        if math.isinf(lat_con) or math.isinf(lat_solo):
            sat = True
            is_parts[e] = SATURATION_FACTOR
        else:
            is_parts[e] = lat_con / lat_solo

    if sat:
        latency = SATURATION_FACTOR * _diameter_latency(t, mean_bytes)
    else:
        latency = sum(lat_parts.values()) / len(lat_parts)
    interference = max(is_parts.values())

    power = power_proxy(t, link_rho)
    return ProxyMetrics(
        throughput_proxy=throughput,
        latency_proxy=latency,
        power_proxy=power,
        interference_proxy=interference,
        saturated=sat,
        components={
            "cut_roofline": roof,
            "balanced_roofline": balanced,
            "offered_tokens": offered_tokens,
            "per_expert_roofline": per_expert_roofs,
            "per_expert_latency_ns": lat_parts,
            "per_expert_interference": is_parts,
            "link_rho": link_rho,
        },
    )


def power_proxy(t: NoiTopology, link_rho: dict) -> float:
    """Idle+active link power scaled by bandwidth, plus port (degree) power."""
    from .chiplets import DEFAULT_LINK_GBPS

    total = 0.0
    for (a, b), bw in t.links.items():
        util = min(1.0, link_rho.get((a, b), 0.0) + link_rho.get((b, a), 0.0))
        total += (0.5 + 0.5 * util) * (bw / DEFAULT_LINK_GBPS)
    total += 0.1 * sum(t.degree(i) for i in range(t.n_nodes))
    return total


def _maxflow_to(t: NoiTopology, src: int, dsts) -> float:
    """Max flow in GB/s from the memory side into the expert's placement."""
    from .flows import Dinic

    n = t.n_nodes
    s, snk = n, n + 1
    dinic = Dinic(n + 2)
    for (a, b), bw in sorted(t.links.items()):
        dinic.add_edge(a, b, bw, bw)
    dinic.add_edge(s, src, math.inf)
    for c in sorted(set(dsts)):
        dinic.add_edge(c, snk, math.inf)
    return dinic.max_flow(s, snk)
