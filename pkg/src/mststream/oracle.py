"""Brute-force reference computations: exact MST, components, diameter."""
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .geometry import PointMultiset, pairwise_l1


def _points(P):
    if isinstance(P, PointMultiset):
        return P.distinct()
    X = np.asarray(P, dtype=np.int64)
    if X.ndim == 1:
        X = X[:, None]
    return np.unique(X, axis=0)


def mst_oracle(P):
    """Exact l1 MST of the distinct points, by dense Prim.

    Returns (cost, edges) with integer cost and edges (i, j, w), i < j,
    indexing the lexicographically sorted distinct points. Ties are broken
    towards the lexicographically smallest edge.
    """
    X = _points(P)
    n = len(X)
    if n == 0:
        raise ValueError("MST of an empty set")
    if n == 1:
        return 0, []
    D = pairwise_l1(X)
    in_tree = np.zeros(n, dtype=bool)
    best = D[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.iinfo(np.int64).max
    edges = []
    cost = 0
    for _ in range(n - 1):
        cand = np.where(in_tree, np.iinfo(np.int64).max, best)
        w = cand.min()
        ties = np.flatnonzero(cand == w)
        # smallest (min(i,j), max(i,j)) among tied candidates
        keys = [(min(v, parent[v]), max(v, parent[v])) for v in ties]
        v = int(ties[int(np.argmin([k[0] * n + k[1] for k in keys]))])
        in_tree[v] = True
        cost += int(w)
        i, j = sorted((v, int(parent[v])))
        edges.append((i, j, int(w)))
        closer = (~in_tree) & (D[v] < best)
        best[closer] = D[v][closer]
        parent[closer] = v
    return cost, edges


def mst_kruskal(P):
    """Independent Kruskal variant, used to cross-check mst_oracle."""
    X = _points(P)
    n = len(X)
    if n <= 1:
        return 0, []
    D = pairwise_l1(X)
    iu, ju = np.triu_indices(n, 1)
    w = D[iu, ju]
    order = np.lexsort((ju, iu, w))
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges, cost = [], 0
    for e in order:
        a, b = find(int(iu[e])), find(int(ju[e]))
        if a != b:
            parent[a] = b
            edges.append((int(iu[e]), int(ju[e]), int(w[e])))
            cost += int(w[e])
            if len(edges) == n - 1:
                break
    return cost, edges


def mst_edge_weights(P):
    """Sorted MST edge weights; c*_t = n - #(weights <= t)."""
    _, edges = mst_oracle(P)
    return np.sort(np.array([e[2] for e in edges], dtype=np.int64))


def component_count_true(P, t):
    """Components of the exact threshold graph {(p,q): |p-q|_1 <= t}."""
    X = _points(P)
    w = mst_edge_weights(X)
    return len(X) - int(np.count_nonzero(w <= t))


def bfs_labels(D, r):
    """Component labels of the graph (D <= r) by repeated scipy BFS."""
    n = D.shape[0]
    A = csr_matrix((D <= r) & ~np.eye(n, dtype=bool))
    labels = -np.ones(n, dtype=np.int64)
    nxt = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        order = breadth_first_order(A, s, directed=False, return_predecessors=False)
        labels[order] = nxt
        nxt += 1
    return labels


def diameter_oracle(P):
    X = _points(P)
    if len(X) < 2:
        return 0
    return int(pairwise_l1(X).max())
