"""Jitted twins of the fallback kernels in :mod:`bdtsp.kernels.numpy_impl`.

Same input/output contracts, bit-identical results; only the inner loops are
compiled. All masks are int64, so callers cap live vertex counts at 62.
"""

import numpy as np
from numba import njit

from .numpy_impl import HK_INF

_NJIT = {"cache": True, "nogil": True}


@njit(**_NJIT)
def _hk_fill(cost, D, P):
    n = cost.shape[0]
    nn = n - 1
    full = 1 << nn
    for v in range(nn):
        if cost[0, v + 1] < HK_INF:
            D[1 << v, v] = cost[0, v + 1]
    for mask in range(1, full):
        if mask & (mask - 1) == 0:
            continue
        for l in range(nn):
            if not (mask >> l) & 1:
                continue
            pm = mask ^ (1 << l)
            best = HK_INF
            bestm = -1
            for mm in range(nn):
                if not (pm >> mm) & 1:
                    continue
                d = D[pm, mm]
                if d >= HK_INF:
                    continue
                c = cost[mm + 1, l + 1]
                if c >= HK_INF:
                    continue
                t = d + c
                if t < best:
                    best = t
                    bestm = mm
            if bestm >= 0:
                D[mask, l] = best
                P[mask, l] = bestm


def held_karp_table(cost):
    n = cost.shape[0]
    nn = n - 1
    full = 1 << nn
    D = np.full((full, nn), HK_INF, dtype=np.int64)
    P = np.full((full, nn), -1, dtype=np.int8)
    _hk_fill(cost, D, P)
    return D, P


@njit(**_NJIT)
def _comp_bridges(k, indptr, adj_v, adj_e):
    disc = np.full(k, -1, dtype=np.int64)
    low = np.zeros(k, dtype=np.int64)
    stack_v = np.empty(k + 1, dtype=np.int64)
    stack_p = np.empty(k + 1, dtype=np.int64)
    stack_e = np.empty(k + 1, dtype=np.int64)
    ncomp = 0
    nbridge = 0
    timer = 0
    for root in range(k):
        if disc[root] != -1:
            continue
        ncomp += 1
        disc[root] = timer
        low[root] = timer
        timer += 1
        sp = 0
        stack_v[0] = root
        stack_p[0] = indptr[root]
        stack_e[0] = -1
        while sp >= 0:
            v = stack_v[sp]
            p = stack_p[sp]
            if p < indptr[v + 1]:
                stack_p[sp] = p + 1
                w = adj_v[p]
                e = adj_e[p]
                if e == stack_e[sp]:
                    continue
                if disc[w] == -1:
                    disc[w] = timer
                    low[w] = timer
                    timer += 1
                    sp += 1
                    stack_v[sp] = w
                    stack_p[sp] = indptr[w]
                    stack_e[sp] = e
                elif disc[w] < low[v]:
                    low[v] = disc[w]
            else:
                sp -= 1
                if sp >= 0:
                    u = stack_v[sp]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] > disc[u]:
                        nbridge += 1
    return ncomp, nbridge


def components_and_bridges(k, indptr, adj_v, adj_e):
    return _comp_bridges(k, indptr, adj_v, adj_e)


@njit(**_NJIT)
def _two_cut_sides(k, eu, ev, indptr, adj_v, adj_e, out_i, out_j, out_mask):
    m = eu.shape[0]
    label = np.empty(k, dtype=np.int64)
    queue = np.empty(k, dtype=np.int64)
    count = 0
    for i in range(m):
        for j in range(i + 1, m):
            for t in range(k):
                label[t] = -1
            ncomp = 0
            for s in range(k):
                if label[s] != -1:
                    continue
                label[s] = ncomp
                queue[0] = s
                qt = 1
                while qt > 0:
                    qt -= 1
                    x = queue[qt]
                    for p in range(indptr[x], indptr[x + 1]):
                        e = adj_e[p]
                        if e == i or e == j:
                            continue
                        y = adj_v[p]
                        if label[y] == -1:
                            label[y] = ncomp
                            queue[qt] = y
                            qt += 1
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
                    out_i[count] = i
                    out_j[count] = j
                    out_mask[count] = mask
                    count += 1
    return count


def two_cut_sides(k, eu, ev):
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    m = eu.shape[0]
    indptr, adj_v, adj_e = _csr(k, eu, ev)
    cap = m * m + 8
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_mask = np.empty(cap, dtype=np.int64)
    count = _two_cut_sides(k, eu, ev, indptr, adj_v, adj_e, out_i, out_j, out_mask)
    return out_i[:count].copy(), out_j[:count].copy(), out_mask[:count].copy()


def _csr(k, eu, ev):
    m = eu.shape[0]
    ends = np.concatenate((eu, ev))
    others = np.concatenate((ev, eu))
    eids = np.concatenate((np.arange(m, dtype=np.int64),) * 2)
    order = np.argsort(ends, kind="stable")
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.add.at(indptr, ends + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, others[order], eids[order]


@njit(**_NJIT)
def _small_subsets(k, indptr, adj, max_size, out_mask, out_cut, out_size):
    cap = out_mask.shape[0]
    count = 0
    truncated = 0
    ext = np.empty((max_size + 1, k + 1), dtype=np.int64)
    ext_len = np.empty(max_size + 1, dtype=np.int64)
    ext_pos = np.empty(max_size + 1, dtype=np.int64)
    mask_st = np.empty(max_size + 1, dtype=np.int64)
    cut_st = np.empty(max_size + 1, dtype=np.int64)
    nbm_st = np.empty(max_size + 1, dtype=np.int64)
    for s in range(k):
        mask_st[0] = 1 << s
        cut_st[0] = indptr[s + 1] - indptr[s]
        nbm = 1 << s
        en = 0
        for p in range(indptr[s], indptr[s + 1]):
            w = adj[p]
            if w > s and not (nbm >> w) & 1:
                ext[0, en] = w
                en += 1
                nbm |= 1 << w
        ext_len[0] = en
        ext_pos[0] = 0
        nbm_st[0] = nbm
        if cut_st[0] == 3 or cut_st[0] == 4:
            if count >= cap:
                return count, 1
            out_mask[count] = mask_st[0]
            out_cut[count] = cut_st[0]
            out_size[count] = 1
            count += 1
        depth = 0
        while depth >= 0:
            if ext_pos[depth] < ext_len[depth] and depth + 1 < max_size:
                v = ext[depth, ext_pos[depth]]
                ext_pos[depth] += 1
                mult = 0
                for p in range(indptr[v], indptr[v + 1]):
                    if (mask_st[depth] >> adj[p]) & 1:
                        mult += 1
                ncut = cut_st[depth] + (indptr[v + 1] - indptr[v]) - 2 * mult
                nmask = mask_st[depth] | (1 << v)
                en = 0
                for q in range(ext_pos[depth], ext_len[depth]):
                    ext[depth + 1, en] = ext[depth, q]
                    en += 1
                nbm = nbm_st[depth]
                for p in range(indptr[v], indptr[v + 1]):
                    w = adj[p]
                    if w > s and not (nbm >> w) & 1:
                        ext[depth + 1, en] = w
                        en += 1
                        nbm |= 1 << w
                depth += 1
                mask_st[depth] = nmask
                cut_st[depth] = ncut
                nbm_st[depth] = nbm
                ext_len[depth] = en
                ext_pos[depth] = 0
                if ncut == 3 or ncut == 4:
                    if count >= cap:
                        return count, 1
                    out_mask[count] = nmask
                    out_cut[count] = ncut
                    out_size[count] = depth + 1
                    count += 1
            else:
                depth -= 1
    return count, truncated


def connected_small_subsets(k, indptr, adj, max_size, cap=1 << 17):
    indptr = np.asarray(indptr, dtype=np.int64)
    adj = np.asarray(adj, dtype=np.int64)
    out_mask = np.empty(cap, dtype=np.int64)
    out_cut = np.empty(cap, dtype=np.int8)
    out_size = np.empty(cap, dtype=np.int8)
    count, truncated = _small_subsets(k, indptr, adj, max_size, out_mask, out_cut, out_size)
    return (
        out_mask[:count].copy(),
        out_cut[:count].copy(),
        out_size[:count].copy(),
        bool(truncated),
    )
