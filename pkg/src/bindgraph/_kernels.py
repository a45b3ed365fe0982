"""Compiled sampling loops.

Pair values come from one of two sources:

* class models (``kind == 0``): ``table[cls[u], cls[v]]`` for a ``K x K`` table
  that is ``p``, the per-round ``r`` or the residual ``p_rem``;
* Kronecker (``kind == 1``): ``p`` from the bit product, turned into ``r`` or
  ``p_rem`` on the fly (``mode`` 1 or 2) from the node-sampling probabilities.

Pairs are encoded as ``u * n + v`` with ``u < v``. Every uniform draw comes
from the ``Generator`` passed in, so results are a pure function of its state.
"""

import math

import numpy as np
from numba import njit

MODE_P, MODE_R, MODE_PREM = 0, 1, 2


@njit(cache=True)
def _reserve(buf, cnt, extra):
    """``buf`` with room for ``extra`` more entries after ``cnt``.

    Hot loops reserve up front and then only write; reassigning the buffer
    inside an inner loop makes numba refcount it on every iteration.
    """
    need = cnt + extra
    if need <= buf.shape[0]:
        return buf
    bigger = np.empty(max(need, 2 * buf.shape[0]), np.int64)
    bigger[:cnt] = buf[:cnt]
    return bigger


@njit(cache=True, inline="always")
def _push(buf, cnt, val):
    if cnt == buf.shape[0]:
        bigger = np.empty(2 * cnt + 16, np.int64)
        bigger[:cnt] = buf[:cnt]
        buf = bigger
    buf[cnt] = val
    return buf


@njit(cache=True)
def round_probs(p, gg, R):
    """Per-round binding probability and residual probability of one pair."""
    if gg <= 0.0:
        return 0.0, p
    if p >= 1.0:
        base = 1.0
    else:
        base = -math.expm1(math.log1p(-p) / R)
    r = min(base / gg, 1.0)
    t = (1.0 - gg) ** R
    if 1.0 - p >= t:
        prem = 0.0
    else:
        prem = 1.0 - (1.0 - p) / t
    return r, prem


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _kr_prob(u, v, theta, k):
    n11 = _popcount(u & v)
    nmix = _popcount(u ^ v)
    n00 = k - _popcount(u | v)
    return theta[0] ** n00 * theta[1] ** nmix * theta[2] ** n11


@njit(cache=True)
def _pair_value(u, v, mode, kind, cls, table, theta, k, g_node, R):
    if kind == 0:
        return table[cls[u], cls[v]]
    p = _kr_prob(u, v, theta, k)
    if mode == MODE_P:
        return p
    r, prem = round_probs(p, g_node[u] * g_node[v], R)
    return r if mode == MODE_R else prem


@njit(cache=True)
def sample_nodes(rng, members, offsets, g_class, out):
    """Independent Bernoulli(g) node sampling by geometric skipping per class."""
    cnt = 0
    for c in range(g_class.shape[0]):
        gc = g_class[c]
        lo, hi = offsets[c], offsets[c + 1]
        if gc <= 0.0 or lo == hi:
            continue
        if gc >= 1.0:
            for i in range(lo, hi):
                out[cnt] = members[i]
                cnt += 1
            continue
        lq = math.log1p(-gc)
        pos = lo - 1
        while True:
            skip = math.log(1.0 - rng.random()) / lq
            if skip >= hi - pos:
                break
            pos += 1 + int(skip)
            if pos >= hi:
                break
            out[cnt] = members[pos]
            cnt += 1
    return cnt


@njit(cache=True)
def _tri_decode(idx, m):
    # row-major index into the strict upper triangle of an m x m matrix
    i = m - 2 - int(math.floor(math.sqrt(-8.0 * idx + 4.0 * m * (m - 1) - 7.0) / 2.0 - 0.5))
    j = idx + i + 1 - m * (m - 1) // 2 + (m - i) * (m - i - 1) // 2
    # guard against rounding at row boundaries
    while j >= m:
        i += 1
        j = idx + i + 1 - m * (m - 1) // 2 + (m - i) * (m - i - 1) // 2
    while j <= i:
        i -= 1
        j = idx + i + 1 - m * (m - 1) // 2 + (m - i) * (m - i - 1) // 2
    return i, j


@njit(cache=True)
def tri_decode(idx, m):
    return _tri_decode(idx, m)


@njit(cache=True)
def _emit(buf, cnt, u, v, n):
    if u < v:
        return _push(buf, cnt, u * n + v)
    return _push(buf, cnt, v * n + u)


@njit(cache=True)
def independent_pairs(rng, n, members, offsets, kind, cls, table, theta, k, g_node, R, mode):
    """Each pair independently with its pair value (geometric skipping per class pair)."""
    buf = np.empty(1024, np.int64)
    cnt = 0
    if kind == 1:
        for u in range(n):
            buf = _reserve(buf, cnt, n)
            for v in range(u + 1, n):
                q = _pair_value(u, v, mode, kind, cls, table, theta, k, g_node, R)
                if q > 0.0 and rng.random() < q:
                    buf[cnt] = u * n + v
                    cnt += 1
        return buf[:cnt]
    K = table.shape[0]
    for a in range(K):
        ma = offsets[a + 1] - offsets[a]
        for b in range(a, K):
            q = table[a, b]
            mb = offsets[b + 1] - offsets[b]
            total = ma * (ma - 1) // 2 if a == b else ma * mb
            if q <= 0.0 or total == 0:
                continue
            if q >= 1.0:
                for idx in range(total):
                    if a == b:
                        i, j = _tri_decode(idx, ma)
                    else:
                        i, j = idx // mb, idx % mb
                    buf = _emit(buf, cnt, members[offsets[a] + i], members[offsets[b] + j], n)
                    cnt += 1
                continue
            lq = math.log1p(-q)
            idx = -1
            while True:
                skip = math.log(1.0 - rng.random()) / lq
                if skip >= total - idx:
                    break
                idx += 1 + int(skip)
                if idx >= total:
                    break
                if a == b:
                    i, j = _tri_decode(idx, ma)
                else:
                    i, j = idx // mb, idx % mb
                buf = _emit(buf, cnt, members[offsets[a] + i], members[offsets[b] + j], n)
                cnt += 1
    return buf[:cnt]


@njit(cache=True)
def shared_threshold_pairs(s, n, members, offsets, kind, cls, table, theta, k, g_node, R, mode):
    """All pairs whose value is at least ``s`` (one draw shared by every pair)."""
    buf = np.empty(1024, np.int64)
    cnt = 0
    if kind == 1:
        for u in range(n):
            buf = _reserve(buf, cnt, n)
            for v in range(u + 1, n):
                if _pair_value(u, v, mode, kind, cls, table, theta, k, g_node, R) >= s:
                    buf[cnt] = u * n + v
                    cnt += 1
        return buf[:cnt]
    K = table.shape[0]
    for a in range(K):
        for b in range(a, K):
            if table[a, b] < s:
                continue
            ma = offsets[a + 1] - offsets[a]
            mb = offsets[b + 1] - offsets[b]
            buf = _reserve(buf, cnt, ma * (ma - 1) // 2 if a == b else ma * mb)
            for i in range(offsets[a], offsets[a + 1]):
                j0 = i + 1 if a == b else offsets[b]
                for j in range(j0, offsets[b + 1]):
                    u, v = members[i], members[j]
                    buf[cnt] = u * n + v if u < v else v * n + u
                    cnt += 1
    return buf[:cnt]


@njit(cache=True)
def local_binding(rng, n, members, offsets, g_class, R, kind, cls, table, theta, k, grouped):
    """One local-binding graph; returns (pair keys, rounds run, pairs visited).

    ``grouped`` is an ``n * n`` boolean scratch array (cleared here) marking
    pairs already assigned to a group.
    """
    grouped[:] = False
    vs = np.empty(n, np.int64)
    total = n * (n - 1) // 2
    ngrouped = 0
    buf = np.empty(1024, np.int64)
    cnt = 0
    rounds = 0
    visits = 0
    dummy = np.zeros(1)
    for _ in range(R):
        if ngrouped == total:
            break
        rounds += 1
        m = sample_nodes(rng, members, offsets, g_class, vs)
        s = 1.0 - rng.random()
        # sorted ids make each row of ``grouped`` a forward scan
        vs[:m].sort()
        buf = _reserve(buf, cnt, min(m * (m - 1) // 2, total - ngrouped))
        for a in range(m):
            u = vs[a]
            row = u * n
            for b in range(a + 1, m):
                v = vs[b]
                key = row + v
                visits += 1
                if grouped[key]:
                    continue
                grouped[key] = True
                ngrouped += 1
                if _pair_value(u, v, MODE_P, kind, cls, table, theta, k, dummy, 1) >= s:
                    buf[cnt] = key
                    cnt += 1
    if ngrouped < total:
        # leftover pairs are singletons: independent draws, kept only if ungrouped
        rest = independent_pairs(rng, n, members, offsets, kind, cls, table, theta, k, dummy, 1, MODE_P)
        buf = _reserve(buf, cnt, rest.shape[0])
        for key in rest:
            if not grouped[key]:
                buf[cnt] = key
                cnt += 1
    return buf[:cnt], rounds, visits


@njit(cache=True, nogil=True)
def parallel_round(rng, n, members, offsets, g_class, kind, cls, rtable, theta, k, g_node, R):
    """One binding round: sample nodes, bind their pairs with per-round probabilities."""
    vs = np.empty(n, np.int64)
    m = sample_nodes(rng, members, offsets, g_class, vs)
    s = 1.0 - rng.random()
    buf = np.empty(64, np.int64)
    cnt = 0
    for a in range(m):
        buf = _reserve(buf, cnt, m - a - 1)
        for b in range(a + 1, m):
            u, v = vs[a], vs[b]
            if u > v:
                u, v = v, u
            if _pair_value(u, v, MODE_R, kind, cls, rtable, theta, k, g_node, R) >= s:
                buf[cnt] = u * n + v
                cnt += 1
    return buf[:cnt]


@njit(cache=True, nogil=True)
def parallel_residual(rng, shared, n, members, offsets, kind, cls, ptable, theta, k, g_node, R):
    if shared:
        s = 1.0 - rng.random()
        return shared_threshold_pairs(s, n, members, offsets, kind, cls, ptable, theta, k, g_node, R, MODE_PREM)
    return independent_pairs(rng, n, members, offsets, kind, cls, ptable, theta, k, g_node, R, MODE_PREM)


@njit(cache=True)
def _pair_index(key, n):
    u = key // n
    v = key % n
    return u * n - u * (u + 1) // 2 + (v - u - 1)


@njit(cache=True)
def tally_many(rng, count, scheme, shared, n, members, offsets, g_class, R, kind, cls,
               ptable, rtable, remtable, theta, k, g_node):
    """Edge indicators of ``count`` graphs sampled back to back from one stream.

    ``scheme``: 0 independent, 1 local binding, 2 parallel binding. Returns a
    ``count x C(n, 2)`` uint8 matrix in row-major upper-triangle pair order.
    """
    npairs = n * (n - 1) // 2
    out = np.zeros((count, npairs), np.uint8)
    grouped = np.zeros(n * n, np.bool_)
    for t in range(count):
        if scheme == 0:
            keys = independent_pairs(rng, n, members, offsets, kind, cls, ptable, theta, k, g_node, R, MODE_P)
        elif scheme == 1:
            keys, _, _ = local_binding(rng, n, members, offsets, g_class, R, kind, cls, ptable, theta, k, grouped)
        else:
            parts = [parallel_round(rng, n, members, offsets, g_class, kind, cls, rtable, theta, k, g_node, R)
                     for _ in range(R)]
            parts.append(parallel_residual(rng, shared, n, members, offsets, kind, cls, remtable, theta, k, g_node, R))
            for keys in parts:
                for key in keys:
                    out[t, _pair_index(key, n)] = 1
            continue
        for key in keys:
            out[t, _pair_index(key, n)] = 1
    return out
