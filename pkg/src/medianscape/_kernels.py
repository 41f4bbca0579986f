"""Numba kernels for ladder maxima of ball averages and ball medians.

Two walk strategies produce, for each center, the points in nondecreasing
distance grouped into exact ties: a per-row argsort (any space) or a
precomputed offset list (full integer lattices).  Uniform-mass 1-D lattices
get a dedicated kernel: symmetric windows [i-k, i+k] walked per center, then
one-sided windows answered from precomputed prefix/suffix values with a
sparse-table range maximum.

Medians use a threshold count: with the current best value v only the mass
strictly above v matters, and a ball beats v exactly when that mass reaches
gamma times the ball mass.  Elements are written into a bitset over global
value ranks only when an improvement happens.
"""

import math

import numpy as np
from numba import config, njit, prange

# prefer OpenMP; the bundled TBB may be too old and only produces a warning
config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

_SPLIT = 134217729.0


@njit(cache=True, inline="always")
def _reach(c, gamma, tot):
    """c >= gamma*tot, decided exactly."""
    p = gamma * tot
    if c > p:
        return True
    if c < p:
        return False
    t = _SPLIT * gamma
    ah = t - (t - gamma)
    al = gamma - ah
    t = _SPLIT * tot
    bh = t - (t - tot)
    bl = tot - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return e <= 0.0


@njit(cache=True, inline="always")
def _msb(x):
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
    if x >> np.uint64(4):
        x >>= np.uint64(4)
        r += 4
    if x >> np.uint64(2):
        x >>= np.uint64(2)
        r += 2
    if x >> np.uint64(1):
        r += 1
    return r


@njit(cache=True)
def _prev_set(bits, pos):
    """Largest set position <= pos, or -1."""
    if pos < 0:
        return -1
    w = pos >> 6
    x = bits[w] & (~np.uint64(0) >> np.uint64(63 - (pos & 63)))
    while x == 0:
        w -= 1
        if w < 0:
            return -1
        x = bits[w]
    return (w << 6) + _msb(x)


@njit(cache=True)
def _set_bit(bits, q):
    bits[q >> 6] |= np.uint64(1) << np.uint64(q & 63)


@njit(cache=True)
def value_ranks(a):
    """Descending order ranks, sorted values and the first rank of each tie run."""
    n = a.shape[0]
    order = np.argsort(-a, kind="mergesort")
    rank = np.empty(n, np.int64)
    for r in range(n):
        rank[order[r]] = r
    vals = a[order]
    tiestart = np.empty(n, np.int64)
    for r in range(n):
        if r == 0 or vals[r - 1] != vals[r]:
            tiestart[r] = r
        else:
            tiestart[r] = tiestart[r - 1]
    return order, rank, vals, tiestart


# ------------------------------------------------------------------ sparse table

@njit(cache=True)
def _sparse_table(x):
    n = x.shape[0]
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    st = np.empty((levels, n))
    st[0] = x
    for lv in range(1, levels):
        half = 1 << (lv - 1)
        for t in range(n - (1 << lv) + 1):
            st[lv, t] = max(st[lv - 1, t], st[lv - 1, t + half])
    lg = np.zeros(n + 1, np.int64)
    for m in range(2, n + 1):
        lg[m] = lg[m >> 1] + 1
    return st, lg


@njit(cache=True, inline="always")
def _range_max(st, lg, lo, hi):
    lv = lg[hi - lo + 1]
    return max(st[lv, lo], st[lv, hi - (1 << lv) + 1])


# ------------------------------------------------------------------ 1-D lattice

@njit(cache=True)
def _fenwick_find(tree, j):
    """Smallest 0-based position whose prefix count reaches j."""
    n = tree.shape[0] - 1
    pos = 0
    step = 1
    while step * 2 <= n:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] < j:
            pos = nxt
            j -= tree[nxt]
        step //= 2
    return pos


@njit(cache=True)
def _fenwick_add(tree, q):
    k = q + 1
    n = tree.shape[0] - 1
    while k <= n:
        tree[k] += 1
        k += k & (-k)


@njit(cache=True)
def _prefix_medians(a, jt, rank, vals, reverse):
    n = a.shape[0]
    tree = np.zeros(n + 1, np.int64)
    out = np.empty(n)
    for step in range(n):
        t = n - 1 - step if reverse else step
        _fenwick_add(tree, rank[t])
        out[t] = vals[_fenwick_find(tree, jt[step + 1])]
    return out


@njit(parallel=True, cache=True)
def hl_line(a, kR, nchunks):
    """Max of window averages of a over the symmetric ladder, uniform masses."""
    n = a.shape[0]
    pa = np.empty(n)
    sa = np.empty(n)
    s = 0.0
    for t in range(n):
        s += a[t]
        pa[t] = s / (t + 1)
    s = 0.0
    for t in range(n - 1, -1, -1):
        s += a[t]
        sa[t] = s / (n - t)
    pst, lg = _sparse_table(pa)
    sst, _ = _sparse_table(sa)
    out = np.empty(n)
    for c in prange(nchunks):
        lo = c * n // nchunks
        hi = (c + 1) * n // nchunks
        for i in range(lo, hi):
            ks = min(i, n - 1 - i)
            kmax = min(ks, kR)
            best = a[i]
            S = a[i]
            for k in range(1, kmax + 1):
                S += a[i - k] + a[i + k]
                v = S / (2 * k + 1)
                if v > best:
                    best = v
            if kR > ks:
                if i < n - 1 - i:
                    best = max(best, _range_max(pst, lg, 2 * i + 1, i + min(n - 1 - i, kR)))
                elif i > n - 1 - i:
                    best = max(best, _range_max(sst, lg, i - min(i, kR), 2 * i - n))
            out[i] = best
    return out


@njit(parallel=True, cache=True)
def median_line(a, jt, kR, nchunks):
    """Max of window gamma-medians of a over the symmetric ladder; jt[m] is the count threshold."""
    n = a.shape[0]
    _, rank, vals, tiestart = value_ranks(a)
    pm = _prefix_medians(a, jt, rank, vals, False)
    sm = _prefix_medians(a, jt, rank, vals, True)
    pst, lg = _sparse_table(pm)
    sst, _ = _sparse_table(sm)
    out = np.empty(n)
    one = np.uint64(1)
    for ch in prange(nchunks):
        lo = ch * n // nchunks
        hi = (ch + 1) * n // nchunks
        bits = np.zeros((n >> 6) + 2, np.uint64)
        stack = np.empty(n, np.int64)
        for i in range(lo, hi):
            ks = min(i, n - 1 - i)
            kmax = min(ks, kR)
            T = tiestart[rank[i]]
            c = 0
            ns = 0
            kdone = 0
            for k in range(1, kmax + 1):
                c += np.int64(rank[i - k] < T) + np.int64(rank[i + k] < T)
                j = jt[2 * k + 1]
                if c >= j:
                    for kk in range(kdone + 1, k + 1):
                        q1 = rank[i - kk]
                        q2 = rank[i + kk]
                        if q1 < T:
                            bits[q1 >> 6] |= one << np.uint64(q1 & 63)
                            stack[ns] = q1
                            ns += 1
                        if q2 < T:
                            bits[q2 >> 6] |= one << np.uint64(q2 & 63)
                            stack[ns] = q2
                            ns += 1
                    kdone = k
                    p = T
                    for _ in range(c - j + 1):
                        p = _prev_set(bits, p - 1)
                    T2 = tiestart[p]
                    cc = j - 1
                    if T2 < p and cc > 0:
                        r = _prev_set(bits, p - 1)
                        while r >= T2:
                            cc -= 1
                            if cc == 0:
                                break
                            r = _prev_set(bits, r - 1)
                    T = T2
                    c = cc
            best = vals[T]
            for t in range(ns):
                bits[stack[t] >> 6] = np.uint64(0)
            if kR > ks:
                if i < n - 1 - i:
                    best = max(best, _range_max(pst, lg, 2 * i + 1, i + min(n - 1 - i, kR)))
                elif i > n - 1 - i:
                    best = max(best, _range_max(sst, lg, i - min(i, kR), 2 * i - n))
            out[i] = best
    return out


# ------------------------------------------------------------------ general walks

@njit(cache=True)
def dist_row_into(coords, table, scale, power, i, out):
    n = out.shape[0]
    if table.shape[0] > 0:
        for j in range(n):
            out[j] = table[i, j]
        return
    dim = coords.shape[1]
    for j in range(n):
        s = 0.0
        for c in range(dim):
            t = coords[j, c] - coords[i, c]
            s += t * t
        d = scale * math.sqrt(s)
        out[j] = d if power == 1.0 else d ** power


@njit(cache=True)
def _walk_sorted(i, R, coords, table, scale, power, drow, idx, gend, gdist):
    dist_row_into(coords, table, scale, power, i, drow)
    o = np.argsort(drow, kind="mergesort")
    n = drow.shape[0]
    ng = 0
    for t in range(n):
        idx[t] = o[t]
        if t == n - 1 or drow[o[t + 1]] != drow[o[t]]:
            if not drow[o[t]] < R:
                break
            gend[ng] = t + 1
            gdist[ng] = drow[o[t]]
            ng += 1
    return ng


@njit(cache=True)
def _walk_lattice(i, R, icoords, shape, strides, offsets, ogend, ogdist, idx, gend, gdist):
    dim = icoords.shape[1]
    n = idx.shape[0]
    pos = 0
    ng = 0
    start = 0
    for g in range(ogend.shape[0]):
        if not ogdist[g] < R:
            break
        for t in range(start, ogend[g]):
            lin = 0
            ok = True
            for c in range(dim):
                v = icoords[i, c] + offsets[t, c]
                if v < 0 or v >= shape[c]:
                    ok = False
                    break
                lin += v * strides[c]
            if ok:
                idx[pos] = lin
                pos += 1
        start = ogend[g]
        if pos > (gend[ng - 1] if ng > 0 else 0):
            gend[ng] = pos
            gdist[ng] = ogdist[g]
            ng += 1
        if pos == n:
            break
    return ng


@njit(cache=True)
def _walk(i, R, lattice, coords, table, scale, power, icoords, shape, strides, offsets, ogend,
          ogdist, drow, idx, gend, gdist):
    if lattice:
        return _walk_lattice(i, R, icoords, shape, strides, offsets, ogend, ogdist, idx, gend, gdist)
    return _walk_sorted(i, R, coords, table, scale, power, drow, idx, gend, gdist)


@njit(parallel=True, cache=True)
def hl_walk(a, w, R, lattice, coords, table, scale, power, icoords, shape, strides, offsets,
            ogend, ogdist, nchunks):
    n = a.shape[0]
    out = np.empty(n)
    for ch in prange(nchunks):
        lo = ch * n // nchunks
        hi = (ch + 1) * n // nchunks
        drow = np.empty(n)
        idx = np.empty(n, np.int64)
        gend = np.empty(n, np.int64)
        gdist = np.empty(n)
        for i in range(lo, hi):
            ng = _walk(i, R, lattice, coords, table, scale, power, icoords, shape, strides,
                       offsets, ogend, ogdist, drow, idx, gend, gdist)
            best = a[i]
            S = 0.0
            W = 0.0
            pos = 0
            for g in range(ng):
                while pos < gend[g]:
                    y = idx[pos]
                    S += w[y] * a[y]
                    W += w[y]
                    pos += 1
                if g > 0:
                    v = S / W
                    if v > best:
                        best = v
            out[i] = best
    return out


@njit(parallel=True, cache=True)
def median_walk(a, w, gamma, R, lattice, coords, table, scale, power, icoords, shape, strides,
                offsets, ogend, ogdist, nchunks):
    n = a.shape[0]
    order, rank, vals, tiestart = value_ranks(a)
    wr = w[order]
    out = np.empty(n)
    for ch in prange(nchunks):
        lo = ch * n // nchunks
        hi = (ch + 1) * n // nchunks
        drow = np.empty(n)
        idx = np.empty(n, np.int64)
        gend = np.empty(n, np.int64)
        gdist = np.empty(n)
        bits = np.zeros((n >> 6) + 2, np.uint64)
        stack = np.empty(n, np.int64)
        for i in range(lo, hi):
            ng = _walk(i, R, lattice, coords, table, scale, power, icoords, shape, strides,
                       offsets, ogend, ogdist, drow, idx, gend, gdist)
            T = tiestart[rank[i]]
            above = 0.0
            tot = 0.0
            pos = 0
            mat = 0
            ns = 0
            for g in range(ng):
                while pos < gend[g]:
                    y = idx[pos]
                    tot += w[y]
                    if rank[y] < T:
                        above += w[y]
                    pos += 1
                if above > 0.0 and _reach(above, gamma, tot):
                    while mat < pos:
                        q = rank[idx[mat]]
                        if q < T:
                            _set_bit(bits, q)
                            stack[ns] = q
                            ns += 1
                        mat += 1
                    p = _prev_set(bits, T - 1)
                    cur = above
                    while True:
                        q = _prev_set(bits, p - 1)
                        if q < 0 or not _reach(cur - wr[p], gamma, tot):
                            break
                        cur -= wr[p]
                        p = q
                    T2 = tiestart[p]
                    acc = cur - wr[p]
                    q = _prev_set(bits, p - 1)
                    while q >= T2:
                        acc -= wr[q]
                        q = _prev_set(bits, q - 1)
                    T = T2
                    above = acc
            out[i] = vals[T]
            for t in range(ns):
                bits[stack[t] >> 6] = np.uint64(0)
    return out
