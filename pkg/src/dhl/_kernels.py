"""Compiled inner loops shared by the hierarchy, labelling and maintenance modules.

All arrays are flat; shortcut ``s`` joins ``src[s]`` (descendant) to
``dst[s]`` (ancestor) and label entry ``(v, i)`` lives at ``off[v] + i``.
"""

import heapq

import numpy as np
from numba import njit, types
from numba.typed import List

INF = np.int64(1 << 61)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# flag bits in the per-shortcut / per-entry scratch arrays
QUEUED = np.uint8(1)
TOUCHED = np.uint8(2)


@njit(inline="always")
def sat(a, b):
    s = a + b
    return INF if s > INF else s


@njit(cache=True)
def _arr(lst):
    out = np.empty(len(lst), dtype=np.int64)
    for k in range(len(lst)):
        out[k] = lst[k]
    return out


@njit(inline="always")
def _slot(key, shift):
    return np.int64((np.uint64(key) * _GOLDEN) >> np.uint64(shift))


# --------------------------------------------------------------------------- #
# open-addressed pair table: key = descendant * n + ancestor


@njit(cache=True)
def ht_build(keys, bits):
    size = 1 << bits
    shift = 64 - bits
    tkeys = np.full(size, -1, dtype=np.int64)
    tvals = np.full(size, -1, dtype=np.int64)
    mask = size - 1
    for s in range(len(keys)):
        h = _slot(keys[s], shift)
        while tkeys[h] != -1:
            h = (h + 1) & mask
        tkeys[h] = keys[s]
        tvals[h] = s
    return tkeys, tvals


@njit(inline="always")
def ht_find(tkeys, tvals, shift, key):
    mask = len(tkeys) - 1
    h = _slot(key, shift)
    while True:
        k = tkeys[h]
        if k == key:
            return tvals[h]
        if k == -1:
            return np.int64(-1)
        h = (h + 1) & mask


@njit(inline="always")
def pair_index(a, b, tau, n, tkeys, tvals, shift):
    if tau[a] < tau[b]:
        a, b = b, a
    return ht_find(tkeys, tvals, shift, np.int64(a) * n + b)


@njit(cache=True)
def ht_find_many(tkeys, tvals, shift, keys):
    out = np.empty(len(keys), dtype=np.int64)
    for k in range(len(keys)):
        out[k] = ht_find(tkeys, tvals, shift, keys[k])
    return out


# --------------------------------------------------------------------------- #
# update hierarchy construction


@njit(cache=True)
def symbolic_contraction(n, indptr, adj, tau, order_desc):
    """Upward neighbour sets produced by contracting in decreasing tau.

    Returns (start, count, buf, bad) where ``bad`` is -1 or a vertex adjacent
    to an equal-rank vertex (which would make the hierarchy invalid).
    """
    marker = np.full(n, -1, dtype=np.int64)
    child_head = np.full(n, -1, dtype=np.int64)
    child_next = np.full(n, -1, dtype=np.int64)
    start = np.zeros(n, dtype=np.int64)
    count = np.zeros(n, dtype=np.int64)
    buf = np.empty(max(16, 2 * len(adj)), dtype=np.int32)
    size = 0
    for v in order_desc:
        s0 = size
        tv = tau[v]
        for k in range(indptr[v], indptr[v + 1]):
            u = adj[k]
            if tau[u] == tv:
                return start, count, buf[:size], v
            if tau[u] < tv and marker[u] != v:
                marker[u] = v
                if size == len(buf):
                    grown = np.empty(2 * len(buf), dtype=np.int32)
                    grown[:size] = buf[:size]
                    buf = grown
                buf[size] = u
                size += 1
        c = child_head[v]
        while c != -1:
            for j in range(start[c], start[c] + count[c]):
                u = buf[j]
                if u != v and marker[u] != v:
                    marker[u] = v
                    if size == len(buf):
                        grown = np.empty(2 * len(buf), dtype=np.int32)
                        grown[:size] = buf[:size]
                        buf = grown
                    buf[size] = u
                    size += 1
            c = child_next[c]
        start[v] = s0
        count[v] = size - s0
        if size > s0:
            p = buf[s0]
            for j in range(s0 + 1, size):
                if tau[buf[j]] > tau[p]:
                    p = buf[j]
            child_next[v] = child_head[p]
            child_head[p] = v
    return start, count, buf[:size], np.int64(-1)


@njit(cache=True)
def pack_upward(n, start, count, buf, tau):
    """CSR of upward lists, each sorted by ascending ancestor tau."""
    up_ptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        up_ptr[v + 1] = up_ptr[v] + count[v]
    up_nbr = np.empty(up_ptr[n], dtype=np.int32)
    for v in range(n):
        seg = buf[start[v]:start[v] + count[v]]
        order = np.argsort(tau[seg])
        for j in range(len(seg)):
            up_nbr[up_ptr[v] + j] = seg[order[j]]
    return up_ptr, up_nbr


@njit(cache=True)
def contract_weights(order_desc, up_ptr, up_nbr, weight, tau, n, tkeys, tvals, shift):
    for v in order_desc:
        a0 = up_ptr[v]
        a1 = up_ptr[v + 1]
        for x in range(a0, a1):
            wx = weight[x]
            if wx >= INF:
                continue
            lo = up_nbr[x]
            for y in range(x + 1, a1):
                c = sat(wx, weight[y])
                t = ht_find(tkeys, tvals, shift, np.int64(up_nbr[y]) * n + lo)
                if c < weight[t]:
                    weight[t] = c


@njit(cache=True)
def transpose_upward(n, up_ptr, up_nbr, tau):
    """Downward lists: for each ancestor, (descendant, shortcut id) by ascending tau."""
    counts = np.zeros(n, dtype=np.int64)
    for s in range(len(up_nbr)):
        counts[up_nbr[s]] += 1
    down_ptr = np.zeros(n + 1, dtype=np.int64)
    for w in range(n):
        down_ptr[w + 1] = down_ptr[w] + counts[w]
    fill = down_ptr[:-1].copy()
    down_nbr = np.empty(len(up_nbr), dtype=np.int32)
    down_sc = np.empty(len(up_nbr), dtype=np.int64)
    for v in range(n):
        for s in range(up_ptr[v], up_ptr[v + 1]):
            w = up_nbr[s]
            down_nbr[fill[w]] = v
            down_sc[fill[w]] = s
            fill[w] += 1
    for w in range(n):
        a = down_ptr[w]
        b = down_ptr[w + 1]
        if b - a > 1:
            key = tau[down_nbr[a:b]].astype(np.int64) * n + down_nbr[a:b]
            order = np.argsort(key)
            down_nbr[a:b] = down_nbr[a:b][order]
            down_sc[a:b] = down_sc[a:b][order]
    return down_ptr, down_nbr, down_sc


@njit(cache=True)
def min_weight_violations(src, dst, weight, sc_edge, edge_w, down_ptr, down_nbr, down_sc, n, tkeys, tvals, shift):
    """Shortcuts whose weight differs from the minimum-weight recurrence."""
    bad = List.empty_list(types.int64)
    for s in range(len(src)):
        v = src[s]
        w = dst[s]
        best = edge_w[sc_edge[s]] if sc_edge[s] >= 0 else INF
        for k in range(down_ptr[v], down_ptr[v + 1]):
            x = down_nbr[k]
            t = ht_find(tkeys, tvals, shift, np.int64(x) * n + w)
            if t >= 0:
                c = sat(weight[down_sc[k]], weight[t])
                if c < best:
                    best = c
        if best != weight[s]:
            bad.append(s)
    return _arr(bad)


# --------------------------------------------------------------------------- #
# labelling


@njit(cache=True)
def build_labels(order_asc, tau, off, up_ptr, up_nbr, weight):
    entries = np.full(off[-1], INF, dtype=np.int64)
    for v in order_asc:
        bv = off[v]
        entries[bv + tau[v]] = 0
        for s in range(up_ptr[v], up_ptr[v + 1]):
            ws = weight[s]
            if ws >= INF:
                continue
            w = up_nbr[s]
            bw = off[w]
            for i in range(tau[w] + 1):
                c = sat(ws, entries[bw + i])
                if c < entries[bv + i]:
                    entries[bv + i] = c
    return entries


@njit(inline="always")
def _bit_length(x):
    r = 0
    if x >> np.uint64(32):
        x >>= np.uint64(32)
        r += 32
    if x >> np.uint64(16):
        x >>= np.uint64(16)
        r += 16
    if x >> np.uint64(8):
        x >>= np.uint64(8)
        r += 8
    while x:
        x >>= np.uint64(1)
        r += 1
    return r


@njit(inline="always")
def common_count(s, t, tau, vnode, node_bits, node_depth, anc_ptr, anc_end):
    ns = vnode[s]
    nt = vnode[t]
    ds = node_depth[ns]
    dt = node_depth[nt]
    d = ds if ds < dt else dt
    x = (node_bits[ns] >> np.uint64(ds - d)) ^ (node_bits[nt] >> np.uint64(dt - d))
    c = d - _bit_length(x)
    k = anc_end[anc_ptr[ns] + c]
    if tau[s] + 1 < k:
        k = tau[s] + 1
    if tau[t] + 1 < k:
        k = tau[t] + 1
    return k


@njit(cache=True)
def common_count_many(ss, tt, tau, vnode, node_bits, node_depth, anc_ptr, anc_end):
    out = np.empty(len(ss), dtype=np.int64)
    for j in range(len(ss)):
        out[j] = common_count(ss[j], tt[j], tau, vnode, node_bits, node_depth, anc_ptr, anc_end)
    return out


@njit(cache=True, nogil=True)
def query_many(ss, tt, tau, vnode, node_bits, node_depth, anc_ptr, anc_end, off, entries):
    out = np.empty(len(ss), dtype=np.int64)
    for j in range(len(ss)):
        s = ss[j]
        t = tt[j]
        k = common_count(s, t, tau, vnode, node_bits, node_depth, anc_ptr, anc_end)
        bs = off[s]
        bt = off[t]
        best = INF
        for i in range(k):
            c = sat(entries[bs + i], entries[bt + i])
            if c < best:
                best = c
        out[j] = best
    return out


# --------------------------------------------------------------------------- #
# shortcut maintenance


@njit(cache=True)
def dhu_decrease(seed_sc, seed_new, src, dst, tau, up_ptr, up_nbr, weight,
                 n, tkeys, tvals, shift, flags):
    """Returns (changed shortcut ids, their new weights, popped, enqueued)."""
    heap = [(np.int64(0), np.int64(0))]
    heap.pop()
    touched = List.empty_list(types.int64)
    before = List.empty_list(types.int64)
    enq = 0
    for j in range(len(seed_sc)):
        s = seed_sc[j]
        if weight[s] > seed_new[j]:
            if not flags[s] & TOUCHED:
                flags[s] |= TOUCHED
                touched.append(s)
                before.append(weight[s])
            weight[s] = seed_new[j]
            if not flags[s] & QUEUED:
                flags[s] |= QUEUED
                heapq.heappush(heap, (-np.int64(tau[src[s]]), s))
                enq += 1
    popped = 0
    while heap:
        item = heapq.heappop(heap)
        s = item[1]
        flags[s] &= ~QUEUED
        popped += 1
        v = src[s]
        w = dst[s]
        ws = weight[s]
        for s2 in range(up_ptr[v], up_ptr[v + 1]):
            w2 = up_nbr[s2]
            if w2 == w:
                continue
            c = sat(ws, weight[s2])
            t = pair_index(w, w2, tau, n, tkeys, tvals, shift)
            if weight[t] > c:
                if not flags[t] & TOUCHED:
                    flags[t] |= TOUCHED
                    touched.append(t)
                    before.append(weight[t])
                weight[t] = c
                if not flags[t] & QUEUED:
                    flags[t] |= QUEUED
                    heapq.heappush(heap, (-np.int64(tau[src[t]]), t))
                    enq += 1
    ids = List.empty_list(types.int64)
    vals = List.empty_list(types.int64)
    for k in range(len(touched)):
        s = touched[k]
        flags[s] = 0
        if weight[s] != before[k]:
            ids.append(s)
            vals.append(weight[s])
    return _arr(ids), _arr(vals), popped, enq


@njit(cache=True)
def dhu_increase(seed_sc, seed_old, src, dst, tau, up_ptr, up_nbr, down_ptr, down_nbr, down_sc,
                 weight, sc_edge, edge_w, n, tkeys, tvals, shift, flags):
    """Returns (changed shortcut ids, their pre-pass weights, popped, enqueued)."""
    heap = [(np.int64(0), np.int64(0))]
    heap.pop()
    touched = List.empty_list(types.int64)
    before = List.empty_list(types.int64)
    enq = 0
    for j in range(len(seed_sc)):
        s = seed_sc[j]
        if weight[s] == seed_old[j] and not flags[s] & QUEUED:
            flags[s] |= QUEUED
            heapq.heappush(heap, (-np.int64(tau[src[s]]), s))
            enq += 1
    popped = 0
    while heap:
        item = heapq.heappop(heap)
        s = item[1]
        flags[s] &= ~QUEUED
        popped += 1
        v = src[s]
        w = dst[s]
        new = edge_w[sc_edge[s]] if sc_edge[s] >= 0 else INF
        for k in range(down_ptr[v], down_ptr[v + 1]):
            x = down_nbr[k]
            t = ht_find(tkeys, tvals, shift, np.int64(x) * n + w)
            if t >= 0:
                c = sat(weight[down_sc[k]], weight[t])
                if c < new:
                    new = c
        ws = weight[s]
        if new != ws:
            for s2 in range(up_ptr[v], up_ptr[v + 1]):
                w2 = up_nbr[s2]
                if w2 == w:
                    continue
                t = pair_index(w, w2, tau, n, tkeys, tvals, shift)
                if weight[t] == sat(ws, weight[s2]) and not flags[t] & QUEUED:
                    flags[t] |= QUEUED
                    heapq.heappush(heap, (-np.int64(tau[src[t]]), t))
                    enq += 1
            if not flags[s] & TOUCHED:
                flags[s] |= TOUCHED
                touched.append(s)
                before.append(ws)
            weight[s] = new
    ids = List.empty_list(types.int64)
    vals = List.empty_list(types.int64)
    for k in range(len(touched)):
        s = touched[k]
        flags[s] = 0
        if weight[s] != before[k]:
            ids.append(s)
            vals.append(before[k])
    return _arr(ids), _arr(vals), popped, enq


# --------------------------------------------------------------------------- #
# label maintenance
#
# Work items are label entries (v, i); the queue is keyed by tau(v). Entries
# written during a pass are recorded once (TOUCHED) with their original value
# so the caller can count the ones that really changed.


@njit(inline="always")
def _record(e, entries, lflags, ch_idx, ch_old):
    if not lflags[e] & TOUCHED:
        lflags[e] |= TOUCHED
        ch_idx.append(e)
        ch_old.append(entries[e])


@njit(cache=True)
def dec_phase1(ds_ids, ds_new, src, dst, tau, off, entries, lflags):
    qv = List.empty_list(types.int64)
    qi = List.empty_list(types.int64)
    ch_idx = List.empty_list(types.int64)
    ch_old = List.empty_list(types.int64)
    for k in range(len(ds_ids)):
        s = ds_ids[k]
        new = ds_new[k]
        v = src[s]
        w = dst[s]
        bv = off[v]
        bw = off[w]
        tw = tau[w]
        if new < entries[bv + tw]:
            for i in range(tw + 1):
                c = sat(new, entries[bw + i])
                e = bv + i
                if c < entries[e]:
                    _record(e, entries, lflags, ch_idx, ch_old)
                    entries[e] = c
                    if not lflags[e] & QUEUED:
                        lflags[e] |= QUEUED
                        qv.append(v)
                        qi.append(i)
    return _arr(qv), _arr(qi), _arr(ch_idx), _arr(ch_old)


@njit(cache=True)
def dec_phase2(qv, qi, tau, off, entries, down_ptr, down_nbr, lflags, idx0, old0):
    ch_idx = List.empty_list(types.int64)
    ch_old = List.empty_list(types.int64)
    for k in range(len(idx0)):
        ch_idx.append(idx0[k])
        ch_old.append(old0[k])
    heap = [(np.int64(0), np.int64(0), np.int64(0))]
    heap.pop()
    for k in range(len(qv)):
        heap.append((np.int64(tau[qv[k]]), np.int64(qv[k]), np.int64(qi[k])))
    heapq.heapify(heap)
    enq = len(qv)
    popped = 0
    while heap:
        item = heapq.heappop(heap)
        v = item[1]
        i = item[2]
        lflags[off[v] + i] &= ~QUEUED
        popped += 1
        lvi = entries[off[v] + i]
        tv = tau[v]
        for k in range(down_ptr[v], down_ptr[v + 1]):
            u = down_nbr[k]
            bu = off[u]
            c = sat(entries[bu + tv], lvi)
            e = bu + i
            if c < entries[e]:
                _record(e, entries, lflags, ch_idx, ch_old)
                entries[e] = c
                if not lflags[e] & QUEUED:
                    lflags[e] |= QUEUED
                    heapq.heappush(heap, (np.int64(tau[u]), np.int64(u), i))
                    enq += 1
    return _arr(ch_idx), _arr(ch_old), popped, enq


@njit(cache=True, nogil=True)
def dec_phase2_columns(col_ptr, cv, ci, tau, off, entries, down_ptr, down_nbr, down_sc, weight, lflags):
    """Column-partitioned phase 2; items of column c are cv[col_ptr[c]:col_ptr[c+1]]."""
    ch_idx = List.empty_list(types.int64)
    ch_old = List.empty_list(types.int64)
    popped = 0
    enq = 0
    for c in range(len(col_ptr) - 1):
        a = col_ptr[c]
        b = col_ptr[c + 1]
        if a == b:
            continue
        i = ci[a]
        heap = [(np.int64(0), np.int64(0))]
        heap.pop()
        for k in range(a, b):
            heap.append((np.int64(tau[cv[k]]), np.int64(cv[k])))
        heapq.heapify(heap)
        enq += b - a
        while heap:
            item = heapq.heappop(heap)
            v = item[1]
            lflags[off[v] + i] &= ~QUEUED
            popped += 1
            lvi = entries[off[v] + i]
            for k in range(down_ptr[v], down_ptr[v + 1]):
                u = down_nbr[k]
                cand = sat(weight[down_sc[k]], lvi)
                e = off[u] + i
                if cand < entries[e]:
                    _record(e, entries, lflags, ch_idx, ch_old)
                    entries[e] = cand
                    if not lflags[e] & QUEUED:
                        lflags[e] |= QUEUED
                        heapq.heappush(heap, (np.int64(tau[u]), np.int64(u)))
                        enq += 1
    return _arr(ch_idx), _arr(ch_old), popped, enq


@njit(cache=True)
def inc_phase1(ds_ids, ds_old, src, dst, tau, off, entries, lflags):
    qv = List.empty_list(types.int64)
    qi = List.empty_list(types.int64)
    for k in range(len(ds_ids)):
        s = ds_ids[k]
        old = ds_old[k]
        v = src[s]
        w = dst[s]
        bv = off[v]
        bw = off[w]
        tw = tau[w]
        if old == entries[bv + tw]:
            for i in range(tw + 1):
                e = bv + i
                if sat(old, entries[bw + i]) == entries[e] and not lflags[e] & QUEUED:
                    lflags[e] |= QUEUED
                    qv.append(v)
                    qi.append(i)
    return _arr(qv), _arr(qi)


@njit(inline="always")
def _recompute(v, i, tau, off, entries, up_ptr, up_nbr, weight):
    # upward lists are sorted by ancestor tau: skip those above column i
    lo = up_ptr[v]
    hi = up_ptr[v + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if tau[up_nbr[mid]] < i:
            lo = mid + 1
        else:
            hi = mid
    best = INF
    for s in range(lo, up_ptr[v + 1]):
        c = sat(weight[s], entries[off[up_nbr[s]] + i])
        if c < best:
            best = c
    return best


@njit(cache=True)
def inc_phase2(qv, qi, tau, off, entries, up_ptr, up_nbr, weight, down_ptr, down_nbr, lflags):
    heap = [(np.int64(0), np.int64(0), np.int64(0))]
    heap.pop()
    for k in range(len(qv)):
        heap.append((np.int64(tau[qv[k]]), np.int64(qv[k]), np.int64(qi[k])))
    heapq.heapify(heap)
    ch_idx = List.empty_list(types.int64)
    ch_old = List.empty_list(types.int64)
    enq = len(qv)
    popped = 0
    while heap:
        item = heapq.heappop(heap)
        v = item[1]
        i = item[2]
        ev = off[v] + i
        lflags[ev] &= ~QUEUED
        popped += 1
        new = _recompute(v, i, tau, off, entries, up_ptr, up_nbr, weight)
        lvi = entries[ev]
        if new > lvi:
            tv = tau[v]
            for k in range(down_ptr[v], down_ptr[v + 1]):
                u = down_nbr[k]
                bu = off[u]
                e = bu + i
                if sat(entries[bu + tv], lvi) == entries[e] and not lflags[e] & QUEUED:
                    lflags[e] |= QUEUED
                    heapq.heappush(heap, (np.int64(tau[u]), np.int64(u), i))
                    enq += 1
            _record(ev, entries, lflags, ch_idx, ch_old)
            entries[ev] = new
    return _arr(ch_idx), _arr(ch_old), popped, enq


@njit(cache=True, nogil=True)
def inc_phase2_columns(col_ptr, cv, ci, tau, off, entries, up_ptr, up_nbr, weight,
                       down_ptr, down_nbr, down_sc, lflags):
    ch_idx = List.empty_list(types.int64)
    ch_old = List.empty_list(types.int64)
    popped = 0
    enq = 0
    for c in range(len(col_ptr) - 1):
        a = col_ptr[c]
        b = col_ptr[c + 1]
        if a == b:
            continue
        i = ci[a]
        heap = [(np.int64(0), np.int64(0))]
        heap.pop()
        for k in range(a, b):
            heap.append((np.int64(tau[cv[k]]), np.int64(cv[k])))
        heapq.heapify(heap)
        enq += b - a
        while heap:
            item = heapq.heappop(heap)
            v = item[1]
            ev = off[v] + i
            lflags[ev] &= ~QUEUED
            popped += 1
            new = _recompute(v, i, tau, off, entries, up_ptr, up_nbr, weight)
            lvi = entries[ev]
            if new > lvi:
                for k in range(down_ptr[v], down_ptr[v + 1]):
                    u = down_nbr[k]
                    e = off[u] + i
                    if sat(weight[down_sc[k]], lvi) == entries[e] and not lflags[e] & QUEUED:
                        lflags[e] |= QUEUED
                        heapq.heappush(heap, (np.int64(tau[u]), np.int64(u)))
                        enq += 1
                _record(ev, entries, lflags, ch_idx, ch_old)
                entries[ev] = new
    return _arr(ch_idx), _arr(ch_old), popped, enq


@njit(cache=True)
def settle_changes(ch_idx, ch_old, entries, lflags):
    """Clear scratch flags; count entries whose value really changed."""
    changed = 0
    for k in range(len(ch_idx)):
        e = ch_idx[k]
        lflags[e] = 0
        if entries[e] != ch_old[k]:
            changed += 1
    return changed
