"""Discrete-event simulation driver.

Routes each flow into a multicast trie, fragments it into packets, and hands
flat arrays to the event kernel (compiled extension when built, pure-Python
fallback otherwise). Metrics are collected inside [warmup, warmup+measure].
"""

from __future__ import annotations

import math
import os

import numpy as np

from .. import errors
from ..routing import RoutingCache, multicast_trie
from ..topology import NoiTopology
from ..traffic import TrafficTrace
from .config import SimConfig, SimReport, _summary

# Backend selection: the compiled kernel when importable, unless the
# NOIBENCH_PURE_PY environment variable forces the fallback.
if os.environ.get("NOIBENCH_PURE_PY"):
    from . import _eventcore_py as _core

    BACKEND = "python"
else:
    try:
        from . import _eventcore as _core  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _eventcore_py as _core

        BACKEND = "python"


def core_backend() -> str:
    """Name of the event-kernel backend in use ("cython" or "python")."""
    return BACKEND


def _edge_label(t: NoiTopology, tail: int, head: int) -> str:
    return f"{tail}->{head}"


def simulate(t: NoiTopology, trace: TrafficTrace, cfg: SimConfig) -> SimReport:
    """Run the packet-level simulation of a trace on a topology."""
    events = trace.events
    if not events:
        raise errors.EmptyTrace("cannot simulate an empty trace")
    last = None
    for ev in events:
        if last is not None and ev.t_ns < last:
            raise errors.NonMonotoneTrace("trace timestamps decrease")
        last = ev.t_ns
        endpoints = (ev.src, *ev.dsts)
        for node in endpoints:
            if not 0 <= node < t.n_nodes:
                raise errors.UnknownNode(f"flow endpoint {node} not in topology")

    # directed edges: sorted links, (a->b) then (b->a)
    links = t.sorted_links()
    n_edges = 2 * len(links)
    edge_id = {}
    edge_bw = np.zeros(n_edges)
    edge_mem = np.zeros(n_edges, dtype=np.uint8)
    memory = set(t.memory_nodes)
    for i, (a, b) in enumerate(links):
        edge_id[(a, b)] = 2 * i
        edge_id[(b, a)] = 2 * i + 1
        edge_bw[2 * i] = edge_bw[2 * i + 1] = t.links[(a, b)]
        edge_mem[2 * i] = 1 if a in memory else 0
        edge_mem[2 * i + 1] = 1 if b in memory else 0

    # tries
    cache = RoutingCache(t)
    n_flows = len(events)
    trie_offset = np.zeros(n_flows + 1, dtype=np.int64)
    trie_edges: list[int] = []
    trie_deliver: list[int] = []
    slot_offset_parts: list[np.ndarray] = []
    slot_kids: list[int] = []
    deliveries_per_flow = np.zeros(n_flows, dtype=np.int64)
    for fi, ev in enumerate(events):
        trie = multicast_trie(cache, ev.src, ev.dsts, cfg.routing, fi, cfg.seed)
        ne = trie.n_edges
        trie_offset[fi + 1] = trie_offset[fi] + ne
        trie_edges.extend(edge_id[(trie.tails[k], trie.heads[k])] for k in range(ne))
        trie_deliver.extend(trie.delivers)
        deliveries_per_flow[fi] = trie.n_deliveries
        kid_count = np.zeros(ne + 1, dtype=np.int64)
        for k in range(ne):
            kid_count[trie.parent[k] + 1] += 1
        offs = np.zeros(ne + 2, dtype=np.int64)
        np.cumsum(kid_count, out=offs[1:])
        cursor = offs[:-1].copy()
        kids = np.zeros(ne, dtype=np.int64)
        for k in range(ne):
            s = trie.parent[k] + 1
            kids[cursor[s]] = k
            cursor[s] += 1
        slot_offset_parts.append(offs[:-1])
        slot_kids.extend(kids.tolist())

    # global slot offsets: concatenate per-flow offset tables with base shifts
    slot_offset = np.zeros(trie_offset[-1] + n_flows + 1, dtype=np.int64)
    pos = 0
    base = 0
    for fi in range(n_flows):
        offs = slot_offset_parts[fi]
        slot_offset[pos : pos + len(offs)] = offs + base
        pos += len(offs)
        base += trie_offset[fi + 1] - trie_offset[fi]
    slot_offset[pos] = base

    # packets
    pkt_flow_l: list[int] = []
    pkt_bytes_l: list[float] = []
    pkt_t0_l: list[float] = []
    for fi, ev in enumerate(events):
        full, rem = divmod(ev.bytes, cfg.packet_bytes)
        sizes = [cfg.packet_bytes] * full + ([rem] if rem else [])
        for s in sizes:
            pkt_flow_l.append(fi)
            pkt_bytes_l.append(float(s))
            pkt_t0_l.append(float(ev.t_ns))
    pkt_flow = np.asarray(pkt_flow_l, dtype=np.int64)
    pkt_bytes = np.asarray(pkt_bytes_l)
    pkt_t0 = np.asarray(pkt_t0_l)

    pkts_per_flow = np.bincount(pkt_flow, minlength=n_flows).astype(np.int64)
    flow_rem = pkts_per_flow * deliveries_per_flow
    trie_counts = np.diff(trie_offset)
    n_services = int(trie_counts[pkt_flow].sum())
    n_deliveries = int(deliveries_per_flow[pkt_flow].sum())

    span = float(events[-1].t_ns)
    warmup = cfg.warmup_ns if cfg.warmup_ns is not None else 0.1 * span
    measure = cfg.measure_ns if cfg.measure_ns is not None else span - warmup
    measure = max(measure, cfg.window_ns)
    measure_end = warmup + measure
    n_windows = int(math.ceil(measure / cfg.window_ns))

    (wait_edge, wait_ready, wait_val, deliv_pkt, deliv_time, comp_time,
     util) = _core.run_events(
        edge_bw,
        edge_mem,
        pkt_flow,
        pkt_bytes,
        pkt_t0,
        trie_offset,
        np.asarray(trie_edges, dtype=np.int64),
        np.asarray(trie_deliver, dtype=np.uint8),
        slot_offset,
        np.asarray(slot_kids, dtype=np.int64),
        flow_rem,
        float(cfg.router_delay_ns),
        float(cfg.service_jitter_cv2),
        int(cfg.seed),
        float(warmup),
        float(measure_end),
        float(cfg.window_ns),
        n_windows,
        n_services,
        n_deliveries,
        float(cfg.horizon_ns),
    )
    util = util.reshape(n_edges, n_windows)

    return _assemble_report(
        t, trace, cfg, links, edge_id, edge_bw, edge_mem, pkt_flow, pkt_bytes,
        pkt_t0, deliveries_per_flow, pkts_per_flow, wait_edge, wait_ready,
        wait_val, deliv_pkt, deliv_time, comp_time, util, span, warmup,
        measure, n_windows,
    )


def _assemble_report(
    t, trace, cfg, links, edge_id, edge_bw, edge_mem, pkt_flow, pkt_bytes,
    pkt_t0, deliveries_per_flow, pkts_per_flow, wait_edge, wait_ready,
    wait_val, deliv_pkt, deliv_time, comp_time, util, span, warmup, measure,
    n_windows,
) -> SimReport:
    events = trace.events
    measure_end = warmup + measure
    measure_s = measure * 1e-9

    # latency samples per class, measured at delivery time
    lat = deliv_time - pkt_t0[deliv_pkt]
    in_win = (deliv_time >= warmup) & (deliv_time < measure_end)
    flow_cls = np.array([ev.cls for ev in events])
    flow_expert = np.array([ev.expert for ev in events], dtype=np.int64)
    deliv_cls = flow_cls[pkt_flow[deliv_pkt]]
    latency = {"all": _summary(lat[in_win], cfg.clock_ghz)}
    for c in ("weight", "activation", "control"):
        mask = in_win & (deliv_cls == c)
        latency[c] = _summary(lat[mask], cfg.clock_ghz)

    # tokens/s: activation flows fully delivered inside the window
    per_expert: dict[int, float] = {}
    comp_ok = comp_time >= 0
    comp_in = comp_ok & (comp_time >= warmup) & (comp_time < measure_end)
    for e in sorted(set(flow_expert.tolist())):
        mask = comp_in & (flow_expert == e) & (flow_cls == "activation")
        per_expert[int(e)] = float(mask.sum()) / measure_s

    # per-link stats
    link_util = {}
    link_mean = {}
    link_waits = {}
    mem_links = []
    wait_in = (wait_ready >= warmup) & (wait_ready < measure_end)
    for (a, b) in links:
        for tail, head in ((a, b), (b, a)):
            ge = edge_id[(tail, head)]
            label = _edge_label(t, tail, head)
            series = util[ge] / cfg.window_ns
            link_util[label] = series
            link_mean[label] = float(series.mean())
            link_waits[label] = wait_val[wait_in & (wait_edge == ge)]
            if edge_mem[ge]:
                mem_links.append(label)

    # cut goodput from busy time on memory->non-memory edges
    memory = set(t.memory_nodes)
    cut_busy_bytes = 0.0
    for (a, b) in links:
        for tail, head in ((a, b), (b, a)):
            if tail in memory and head not in memory:
                ge = edge_id[(tail, head)]
                cut_busy_bytes += util[ge].sum() * edge_bw[ge]
    cut_goodput = cut_busy_bytes / measure  # bytes/ns == GB/s

    flow_bytes = np.array([ev.bytes for ev in events], dtype=np.int64)
    flow_ndst = np.array([len(ev.dsts) for ev in events], dtype=np.int64)
    injected_dest_bytes = int((flow_bytes * flow_ndst).sum())
    # delivered bytes: completed flows contribute all destination bytes plus
    # per-delivery packet bytes on still-open flows
    delivered_dest_bytes = float(pkt_bytes[deliv_pkt].sum())

    totals = {
        "flows": len(events),
        "packets": int(len(pkt_flow)),
        "injected_bytes": int(flow_bytes.sum()),
        "injected_dest_bytes": injected_dest_bytes,
        "delivered_dest_bytes": delivered_dest_bytes,
        "deliveries": int(len(deliv_pkt)),
        "completed_flows": int((comp_time >= 0).sum()),
        "memory_egress_links": mem_links,
        "backend": BACKEND,
    }

    completions = {
        int(fi): float(comp_time[fi])
        for fi in range(len(events))
        if comp_time[fi] >= 0
    }

    return SimReport(
        per_expert_tokens_per_s=per_expert,
        latency=latency,
        link_utilization=link_util,
        link_queue_delays=link_waits,
        link_mean_utilization=link_mean,
        totals=totals,
        cut_goodput_gbps=cut_goodput,
        warmup_ns=warmup,
        measure_ns=measure,
        window_ns=cfg.window_ns,
        span_ns=span,
        config=cfg,
        flow_completions=completions,
    )
