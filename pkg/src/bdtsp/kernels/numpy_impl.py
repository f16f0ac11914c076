"""Pure Python/numpy reference implementations of the hot kernels.

Same contracts as :mod:`bdtsp.kernels.numba_impl`; selected with
``BDTSP_BACKEND=numpy``. Kept readable first: these double as the
behavioural reference the jitted twins are tested against.
"""

import numpy as np

HK_INF = np.int64(1) << np.int64(60)


def held_karp_table(cost):
    """Fill the subset DP table for tours anchored at vertex 0.

    ``cost`` is an (n, n) int64 matrix with HK_INF for non-edges. Returns
    ``(D, P)`` where ``D[mask, l]`` is the cheapest path 0 -> ... -> l+1
    visiting exactly the vertices of ``mask`` (bit v encodes vertex v+1)
    and ``P`` holds argmin predecessors (-1 where unset).
    """
    n = cost.shape[0]
    nn = n - 1
    full = 1 << nn
    D = np.full((full, nn), HK_INF, dtype=np.int64)
    P = np.full((full, nn), -1, dtype=np.int8)
    for v in range(nn):
        if cost[0, v + 1] < HK_INF:
            D[1 << v, v] = cost[0, v + 1]
    for mask in range(1, full):
        if mask & (mask - 1) == 0:
            continue
        members = [v for v in range(nn) if (mask >> v) & 1]
        for l in members:
            pm = mask ^ (1 << l)
            prev = np.array([v for v in members if v != l], dtype=np.int64)
            cand = D[pm, prev] + cost[prev + 1, l + 1]
            pos = int(np.argmin(cand))
            if cand[pos] < HK_INF:
                D[mask, l] = cand[pos]
                P[mask, l] = prev[pos]
    return D, P


def components_and_bridges(k, indptr, adj_v, adj_e):
    """Count connected components and bridges of a live multigraph.

    CSR adjacency carries one entry per edge endpoint; ``adj_e`` holds edge
    ids so that parallel edges are never misread as tree arcs. Isolated
    vertices count as components.
    """
    disc = [-1] * k
    low = [0] * k
    ncomp = 0
    nbridge = 0
    timer = 0
    for root in range(k):
        if disc[root] != -1:
            continue
        ncomp += 1
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, int(indptr[root]), -1)]
        while stack:
            v, p, pe = stack[-1]
            if p < indptr[v + 1]:
                stack[-1] = (v, p + 1, pe)
                w = int(adj_v[p])
                e = int(adj_e[p])
                if e == pe:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, int(indptr[w]), e))
                elif disc[w] < low[v]:
                    low[v] = disc[w]
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] > disc[u]:
                        nbridge += 1
    return ncomp, nbridge


def two_cut_sides(k, eu, ev):
    """Enumerate edge pairs whose removal disconnects the graph.

    For every pair {i, j} (i < j) and every component K of the graph minus
    both edges, emit (i, j, vertex mask of K) when both i and j cross K's
    boundary, i.e. K's cut is exactly {i, j}.
    """
    m = len(eu)
    adj = [[] for _ in range(k)]
    for e in range(m):
        adj[eu[e]].append((ev[e], e))
        adj[ev[e]].append((eu[e], e))
    out_i, out_j, out_mask = [], [], []
    for i in range(m):
        for j in range(i + 1, m):
            label = [-1] * k
            ncomp = 0
            for s in range(k):
                if label[s] != -1:
                    continue
                label[s] = ncomp
                queue = [s]
                while queue:
                    x = queue.pop()
                    for y, e in adj[x]:
                        if e == i or e == j:
                            continue
                        if label[y] == -1:
                            label[y] = ncomp
                            queue.append(y)
                ncomp += 1
            if ncomp == 1:
                continue
            for c in range(ncomp):
                cross_i = (label[eu[i]] == c) != (label[ev[i]] == c)
                cross_j = (label[eu[j]] == c) != (label[ev[j]] == c)
                if cross_i and cross_j:
                    mask = 0
                    for t in range(k):
                        if label[t] == c:
                            mask |= 1 << t
                    out_i.append(i)
                    out_j.append(j)
                    out_mask.append(mask)
    return (
        np.array(out_i, dtype=np.int64),
        np.array(out_j, dtype=np.int64),
        np.array(out_mask, dtype=np.int64),
    )


def connected_small_subsets(k, indptr, adj, max_size, cap=1 << 17):
    """Enumerate connected vertex subsets of size <= max_size with boundary 3 or 4.

    Canonical min-vertex enumeration (each subset reported once). ``adj`` is
    CSR with one entry per parallel edge, sorted ascending, so the boundary
    size updates incrementally as deg(v) - 2 * multiplicity(v, subset).
    Returns (masks, cut sizes, subset sizes, truncated flag).
    """
    out_mask, out_cut, out_size = [], [], []
    truncated = False

    def emit(mask, cut, size):
        nonlocal truncated
        if cut == 3 or cut == 4:
            if len(out_mask) >= cap:
                truncated = True
                return False
            out_mask.append(mask)
            out_cut.append(cut)
            out_size.append(size)
        return True

    for s in range(k):
        deg_s = int(indptr[s + 1] - indptr[s])
        mask0 = 1 << s
        nbm = 1 << s
        ext0 = []
        for p in range(int(indptr[s]), int(indptr[s + 1])):
            w = int(adj[p])
            if w > s and not (nbm >> w) & 1:
                ext0.append(w)
                nbm |= 1 << w
        if not emit(mask0, deg_s, 1):
            return _subset_arrays(out_mask, out_cut, out_size, True)
        stack = [(mask0, deg_s, nbm, ext0, 0)]
        while stack:
            mask, cut, nbmask, ext, pos = stack[-1]
            if pos < len(ext) and len(stack) < max_size:
                stack[-1] = (mask, cut, nbmask, ext, pos + 1)
                v = ext[pos]
                mult = 0
                for p in range(int(indptr[v]), int(indptr[v + 1])):
                    if (mask >> int(adj[p])) & 1:
                        mult += 1
                ncut = cut + int(indptr[v + 1] - indptr[v]) - 2 * mult
                nmask = mask | (1 << v)
                child_ext = ext[pos + 1 :]
                child_nbm = nbmask
                for p in range(int(indptr[v]), int(indptr[v + 1])):
                    w = int(adj[p])
                    if w > s and not (child_nbm >> w) & 1:
                        child_ext.append(w)
                        child_nbm |= 1 << w
                if not emit(nmask, ncut, len(stack) + 1):
                    return _subset_arrays(out_mask, out_cut, out_size, True)
                stack.append((nmask, ncut, child_nbm, child_ext, 0))
            else:
                stack.pop()
    return _subset_arrays(out_mask, out_cut, out_size, truncated)


def _subset_arrays(masks, cuts, sizes, truncated):
    return (
        np.array(masks, dtype=np.int64),
        np.array(cuts, dtype=np.int8),
        np.array(sizes, dtype=np.int8),
        truncated,
    )
