"""Pure-Python event kernel: store-and-forward packet copies over multicast
tries with one FIFO queue per directed link.

This is the fallback for the compiled extension (_eventcore.pyx). Both
implement the identical algorithm over identical IEEE-754 doubles, so their
outputs are bit-equal; keep any arithmetic change mirrored in the .pyx file.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

MASK64 = (1 << 64) - 1
TWO_PI = 6.283185307179586
INV_2_53 = 1.0 / 9007199254740992.0


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _hash_unit(seed, a, b, salt):
    acc = 0x243F6A8885A308D3
    for w in (seed, a, b, salt):
        acc = _splitmix64((acc ^ (w & MASK64)) & MASK64)
    return ((acc >> 11) + 0.5) * INV_2_53


def run_events(
    edge_bw,        # f64[n_edges] bytes/ns
    edge_mem,       # u8[n_edges] jitter applies on these (memory egress)
    pkt_flow,       # i64[n_pkts]
    pkt_bytes,      # f64[n_pkts]
    pkt_t0,         # f64[n_pkts]
    trie_offset,    # i64[n_flows+1]
    trie_edge,      # i64[n_trie] graph edge per trie edge
    trie_deliver,   # u8[n_trie]
    slot_offset,    # i64[n_trie + n_flows + 1] children index per trie slot
    slot_kids,      # i64[n_trie] local child indices
    flow_rem,       # i64[n_flows] outstanding deliveries per flow
    router_delay_ns: float,
    jitter_cv2: float,
    seed: int,
    warmup_ns: float,
    measure_end_ns: float,
    window_ns: float,
    n_windows: int,
    n_services: int,
    n_deliveries: int,
    horizon_ns: float = math.inf,
):
    edge_bw = list(edge_bw)
    edge_mem = list(edge_mem)
    pkt_flow = [int(x) for x in pkt_flow]
    pkt_bytes = list(pkt_bytes)
    pkt_t0 = list(pkt_t0)
    trie_offset = [int(x) for x in trie_offset]
    trie_edge = [int(x) for x in trie_edge]
    trie_deliver = [int(x) for x in trie_deliver]
    slot_offset = [int(x) for x in slot_offset]
    slot_kids = [int(x) for x in slot_kids]
    flow_rem = [int(x) for x in flow_rem]

    n_edges = len(edge_bw)
    n_flows = len(trie_offset) - 1
    busy = [0.0] * n_edges
    util = [0.0] * (n_edges * n_windows)

    wait_edge, wait_ready, wait_val = [], [], []
    deliv_pkt, deliv_time = [], []
    comp_time = [-1.0] * n_flows

    sigma = math.sqrt(math.log(1.0 + jitter_cv2)) if jitter_cv2 > 0.0 else 0.0
    sqrt, log, cos, exp = math.sqrt, math.log, math.cos, math.exp
    push, pop = heapq.heappush, heapq.heappop

    heap = [(pkt_t0[p], p, p, -1) for p in range(len(pkt_flow))]
    heapq.heapify(heap)
    seq = len(pkt_flow)

    while heap:
        t, _, p, te = pop(heap)
        if t > horizon_ns:
            break
        f = pkt_flow[p]
        base = trie_offset[f]
        if te >= 0 and trie_deliver[base + te]:
            deliv_pkt.append(p)
            deliv_time.append(t)
            flow_rem[f] -= 1
            if flow_rem[f] == 0:
                comp_time[f] = t
        slot = base + f + te + 1  # global slot index (te = -1 is the root)
        for ki in range(slot_offset[slot], slot_offset[slot + 1]):
            c = slot_kids[ki]
            ge = trie_edge[base + c]
            ready = t + router_delay_ns
            svc = pkt_bytes[p] / edge_bw[ge]
            if sigma > 0.0 and edge_mem[ge]:
                u1 = _hash_unit(seed, p, base + c, 1)
                u2 = _hash_unit(seed, p, base + c, 2)
                z = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
                svc *= exp(sigma * z - 0.5 * sigma * sigma)
            start = busy[ge]
            if ready > start:
                start = ready
            end = start + svc
            busy[ge] = end
            wait_edge.append(ge)
            wait_ready.append(ready)
            wait_val.append(start - ready)
            seg0 = start if start > warmup_ns else warmup_ns
            seg1 = end if end < measure_end_ns else measure_end_ns
            if seg1 > seg0:
                i0 = int((seg0 - warmup_ns) / window_ns)
                i1 = int((seg1 - warmup_ns) / window_ns)
                if i1 >= n_windows:
                    i1 = n_windows - 1
                for i in range(i0, i1 + 1):
                    w0 = warmup_ns + i * window_ns
                    w1 = w0 + window_ns
                    lo = seg0 if seg0 > w0 else w0
                    hi = seg1 if seg1 < w1 else w1
                    if hi > lo:
                        util[ge * n_windows + i] += hi - lo
            push(heap, (end, seq, p, c))
            seq += 1

    return (
        np.asarray(wait_edge, dtype=np.int64),
        np.asarray(wait_ready, dtype=np.float64),
        np.asarray(wait_val, dtype=np.float64),
        np.asarray(deliv_pkt, dtype=np.int64),
        np.asarray(deliv_time, dtype=np.float64),
        np.asarray(comp_time, dtype=np.float64),
        np.asarray(util, dtype=np.float64),
    )
