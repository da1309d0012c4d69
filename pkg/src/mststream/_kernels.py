"""Numba kernels for threshold graphs on integer cell indices.

All distances are integer l1 distances between cell-index rows; a radius r
is likewise an integer number of cells, so comparisons are exact.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _l1(idx, i, j):
    s = 0
    for c in range(idx.shape[1]):
        v = idx[i, c] - idx[j, c]
        s += v if v >= 0 else -v
    return s


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def uf_labels(idx, r):
    """Component labels (smallest member index) of the graph dist <= r."""
    m = idx.shape[0]
    parent = np.arange(m)
    for i in range(m):
        for j in range(i + 1, m):
            if _l1(idx, i, j) <= r:
                a = _find(parent, i)
                b = _find(parent, j)
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        out[i] = _find(parent, i)
    return out


@njit(cache=True)
def bfs_limited(idx, start, r, rounds, cap):
    """Hop-limited BFS from start, in index order.

    Returns (explored vertices in discovery order, overflow flag). The
    search stops as soon as the explored set reaches cap.
    """
    m = idx.shape[0]
    seen = np.zeros(m, dtype=np.bool_)
    order = np.empty(m, dtype=np.int64)
    order[0] = start
    seen[start] = True
    size = 1
    if size >= cap:
        return order[:size], True
    lo = 0
    for _ in range(rounds):
        hi = size
        if lo == hi:
            break
        for f in range(lo, hi):
            u = order[f]
            for v in range(m):
                if not seen[v] and _l1(idx, u, v) <= r:
                    seen[v] = True
                    order[size] = v
                    size += 1
                    if size >= cap:
                        return order[:size], True
        lo = hi
    return order[:size], False


@njit(cache=True)
def induced_cc_size(idx, members, start, r):
    """|CC(start)| in the graph dist <= r induced on the member list."""
    k = members.shape[0]
    seen = np.zeros(k, dtype=np.bool_)
    stack = np.empty(k, dtype=np.int64)
    s0 = -1
    for a in range(k):
        if members[a] == start:
            s0 = a
    seen[s0] = True
    stack[0] = s0
    top = 1
    count = 1
    while top > 0:
        top -= 1
        u = members[stack[top]]
        for b in range(k):
            if not seen[b] and _l1(idx, u, members[b]) <= r:
                seen[b] = True
                stack[top] = b
                top += 1
                count += 1
    return count


@njit(cache=True)
def y_values(idx, r, radii, thr):
    """y for every vertex; radii[j] is the integer radius of ball j."""
    m = idx.shape[0]
    out = np.empty(m)
    nr = radii.shape[0]
    dist = np.empty(m, dtype=np.int64)
    for p in range(m):
        for q in range(m):
            dist[q] = _l1(idx, p, q)
        counts = np.zeros(nr, dtype=np.int64)
        for q in range(m):
            for j in range(nr):
                if dist[q] <= radii[j]:
                    counts[j] += 1
        if counts[0] >= thr:
            out[p] = 0.0
            continue
        jstar = 0
        for j in range(nr):
            if counts[j] < thr:
                jstar = j
        members = np.empty(counts[jstar], dtype=np.int64)
        c = 0
        for q in range(m):
            if dist[q] <= radii[jstar]:
                members[c] = q
                c += 1
        out[p] = 1.0 / induced_cc_size(idx, members, p, r)
    return out


@njit(cache=True)
def z_values(idx, r, rounds, cap):
    m = idx.shape[0]
    out = np.empty(m)
    for p in range(m):
        found, over = bfs_limited(idx, p, r, rounds, cap)
        out[p] = 0.0 if over else 1.0 / found.shape[0]
    return out


@njit(cache=True)
def ball_count(idx, p, radius):
    c = 0
    for q in range(idx.shape[0]):
        if _l1(idx, p, q) <= radius:
            c += 1
    return c
