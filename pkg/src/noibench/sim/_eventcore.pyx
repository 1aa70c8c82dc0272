# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event kernel.

Semantics are defined by the pure-Python twin (_eventcore_py.py); the two are
kept arithmetically identical so reports are bit-equal across backends.
"""

from libc.math cimport cos, exp, log, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

ctypedef unsigned long long u64

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


cdef inline u64 _splitmix64(u64 x) nogil:
    x = x + <u64>0x9E3779B97F4A7C15
    x = (x ^ (x >> 30)) * <u64>0xBF58476D1CE4E5B9
    x = (x ^ (x >> 27)) * <u64>0x94D049BB133111EB
    return x ^ (x >> 31)


cdef inline double _hash_unit(u64 seed, u64 a, u64 b, u64 salt) nogil:
    cdef u64 acc = <u64>0x243F6A8885A308D3
    acc = _splitmix64(acc ^ seed)
    acc = _splitmix64(acc ^ a)
    acc = _splitmix64(acc ^ b)
    acc = _splitmix64(acc ^ salt)
    return ((acc >> 11) + 0.5) * INV_2_53


cdef struct Event:
    double t
    long long seq
    long long pkt
    long long te


cdef inline bint _before(Event a, Event b) nogil:
    return a.t < b.t or (a.t == b.t and a.seq < b.seq)


cdef inline void _heap_push(Event* heap, long long* size, Event ev) nogil:
    cdef long long i = size[0]
    cdef long long parent
    cdef Event tmp
    heap[i] = ev
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _before(heap[i], heap[parent]):
            tmp = heap[parent]
            heap[parent] = heap[i]
            heap[i] = tmp
            i = parent
        else:
            break


cdef inline Event _heap_pop(Event* heap, long long* size) nogil:
    cdef Event top = heap[0]
    cdef Event tmp
    cdef long long n = size[0] - 1
    cdef long long i = 0, child
    size[0] = n
    heap[0] = heap[n]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _before(heap[child + 1], heap[child]):
            child += 1
        if _before(heap[child], heap[i]):
            tmp = heap[child]
            heap[child] = heap[i]
            heap[i] = tmp
            i = child
        else:
            break
    return top


def run_events(
    double[::1] edge_bw,
    unsigned char[::1] edge_mem,
    long long[::1] pkt_flow,
    double[::1] pkt_bytes,
    double[::1] pkt_t0,
    long long[::1] trie_offset,
    long long[::1] trie_edge,
    unsigned char[::1] trie_deliver,
    long long[::1] slot_offset,
    long long[::1] slot_kids,
    long long[::1] flow_rem,
    double router_delay_ns,
    double jitter_cv2,
    unsigned long long seed,
    double warmup_ns,
    double measure_end_ns,
    double window_ns,
    long long n_windows,
    long long n_services,
    long long n_deliveries,
    double horizon_ns=float("inf"),
):
    cdef long long n_pkts = pkt_flow.shape[0]
    cdef long long n_edges = edge_bw.shape[0]
    cdef long long n_flows = trie_offset.shape[0] - 1

    busy_np = np.zeros(n_edges)
    util_np = np.zeros(n_edges * n_windows)
    wait_edge_np = np.zeros(n_services, dtype=np.int64)
    wait_ready_np = np.zeros(n_services)
    wait_val_np = np.zeros(n_services)
    deliv_pkt_np = np.zeros(n_deliveries, dtype=np.int64)
    deliv_time_np = np.zeros(n_deliveries)
    comp_time_np = np.full(n_flows, -1.0)
    rem_np = np.ascontiguousarray(flow_rem).copy()

    cdef double[::1] busy = busy_np
    cdef double[::1] util = util_np
    cdef long long[::1] wait_edge = wait_edge_np
    cdef double[::1] wait_ready = wait_ready_np
    cdef double[::1] wait_val = wait_val_np
    cdef long long[::1] deliv_pkt = deliv_pkt_np
    cdef double[::1] deliv_time = deliv_time_np
    cdef double[::1] comp_time = comp_time_np
    cdef long long[::1] rem = rem_np

    cdef double sigma = 0.0
    if jitter_cv2 > 0.0:
        sigma = sqrt(log(1.0 + jitter_cv2))

    cdef Event* heap = <Event*> malloc(
        sizeof(Event) * <size_t>(n_pkts + n_services + 1)
    )
    if heap == NULL:
        raise MemoryError()

    cdef long long heap_size = 0
    cdef long long seq = 0
    cdef long long p, f, base, te, slot, ki, c, ge, i, i0, i1
    cdef long long iw = 0, idv = 0
    cdef double t, ready, svc, start, end, u1, u2, z
    cdef double seg0, seg1, w0, w1, lo, hi
    cdef Event ev

    with nogil:
        for p in range(n_pkts):
            ev.t = pkt_t0[p]
            ev.seq = p
            ev.pkt = p
            ev.te = -1
            _heap_push(heap, &heap_size, ev)
        seq = n_pkts

        while heap_size > 0:
            ev = _heap_pop(heap, &heap_size)
            t = ev.t
            if t > horizon_ns:
                break
            p = ev.pkt
            te = ev.te
            f = pkt_flow[p]
            base = trie_offset[f]
            if te >= 0 and trie_deliver[base + te]:
                deliv_pkt[idv] = p
                deliv_time[idv] = t
                idv += 1
                rem[f] -= 1
                if rem[f] == 0:
                    comp_time[f] = t
            slot = base + f + te + 1
            for ki in range(slot_offset[slot], slot_offset[slot + 1]):
                c = slot_kids[ki]
                ge = trie_edge[base + c]
                ready = t + router_delay_ns
                svc = pkt_bytes[p] / edge_bw[ge]
                if sigma > 0.0 and edge_mem[ge]:
                    u1 = _hash_unit(seed, <u64>p, <u64>(base + c), 1)
                    u2 = _hash_unit(seed, <u64>p, <u64>(base + c), 2)
                    z = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
                    svc *= exp(sigma * z - 0.5 * sigma * sigma)
                start = busy[ge]
                if ready > start:
                    start = ready
                end = start + svc
                busy[ge] = end
                wait_edge[iw] = ge
                wait_ready[iw] = ready
                wait_val[iw] = start - ready
                iw += 1
                seg0 = start if start > warmup_ns else warmup_ns
                seg1 = end if end < measure_end_ns else measure_end_ns
                if seg1 > seg0:
                    i0 = <long long>((seg0 - warmup_ns) / window_ns)
                    i1 = <long long>((seg1 - warmup_ns) / window_ns)
                    if i1 >= n_windows:
                        i1 = n_windows - 1
                    for i in range(i0, i1 + 1):
                        w0 = warmup_ns + i * window_ns
                        w1 = w0 + window_ns
                        lo = seg0 if seg0 > w0 else w0
                        hi = seg1 if seg1 < w1 else w1
                        if hi > lo:
                            util[ge * n_windows + i] += hi - lo
                ev.t = end
                ev.seq = seq
                ev.pkt = p
                ev.te = c
                _heap_push(heap, &heap_size, ev)
                seq += 1

    free(heap)
    return (
        wait_edge_np[:iw], wait_ready_np[:iw], wait_val_np[:iw],
        deliv_pkt_np[:idv], deliv_time_np[:idv],
        comp_time_np, util_np,
    )
