"""Independent correctness references.

Held-Karp subset DP and permutation brute force give exact optima to check
the solver against; ``min_ham_path`` is the bounded-size Hamiltonian path
search the cut reductions are built on. None of these share code with the
backtracking path.
"""

import itertools

import numpy as np

from . import kernels
from .errors import ResourceLimitError
from .graph_core import Tour

HK_INF = kernels.HK_INF

HELD_KARP_MAX_N = 24  # table is O(n 2^n); ~1.8 GB at the guard boundary
BRUTE_FORCE_MAX_N = 10
HAM_PATH_MAX = 8


def _cost_matrix_int(instance):
    n = instance.n
    C = np.full((n, n), HK_INF, dtype=np.int64)
    for e in instance.edges:
        if e.cost < C[e.u, e.v]:
            C[e.u, e.v] = e.cost
            C[e.v, e.u] = e.cost
    return C


def _min_edge_ids(instance):
    best = {}
    for e in instance.edges:
        key = frozenset((e.u, e.v))
        if key not in best or (e.cost, e.id) < (best[key].cost, best[key].id):
            best[key] = e
    return best


def _tour_from_order(instance, order, total):
    best = _min_edge_ids(instance)
    ids = []
    n = len(order)
    for i in range(n):
        ids.append(best[frozenset((order[i], order[(i + 1) % n]))].id)
    return Tour(vertices=tuple(order), total_cost=int(total), edge_ids=tuple(ids))


def held_karp_arrays(instance):
    """Raw DP tables: D[mask, l] is the cheapest 0 -> l+1 path over mask."""
    if instance.n > HELD_KARP_MAX_N:
        raise ResourceLimitError(f"held_karp guard: n={instance.n} > {HELD_KARP_MAX_N}")
    C = _cost_matrix_int(instance)
    D, P = kernels.held_karp_table(C)
    return D, P, C


def held_karp(instance):
    """Exact optimum via subset DP, or None when no Hamiltonian cycle exists."""
    n = instance.n
    D, P, C = held_karp_arrays(instance)
    full = (1 << (n - 1)) - 1
    best = HK_INF
    best_l = -1
    for l in range(n - 1):
        d = D[full, l]
        c = C[l + 1, 0]
        if d < HK_INF and c < HK_INF and d + c < best:
            best = d + c
            best_l = l
    if best_l < 0:
        return None
    order = []
    mask, l = full, best_l
    while l >= 0:
        order.append(l + 1)
        pl = int(P[mask, l])
        mask ^= 1 << l
        l = pl
    order.append(0)
    order.reverse()
    return int(best), _tour_from_order(instance, order, best)


def brute_force(instance):
    """Exact optimum by checking every vertex permutation (n <= 10)."""
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise ResourceLimitError(f"brute_force guard: n={n} > {BRUTE_FORCE_MAX_N}")
    C = _cost_matrix_int(instance).astype(np.float64)
    C[C >= float(HK_INF)] = np.inf
    perms = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64)
    costs = C[0, perms[:, 0]].copy()
    for i in range(n - 2):
        costs += C[perms[:, i], perms[:, i + 1]]
    costs += C[perms[:, -1], 0]
    pos = int(np.argmin(costs))
    if not np.isfinite(costs[pos]):
        return None
    order = [0] + [int(x) for x in perms[pos]]
    return int(costs[pos]), _tour_from_order(instance, order, int(costs[pos]))


def min_ham_path(vertices, edges, s, t, forced=(), forbidden=None, end_edges=None):
    """Cheapest Hamiltonian s-t path inside a small vertex set.

    ``edges`` are live internal (id, u, v, cost) records; ``forced`` ids must
    all be used by the path. ``forbidden`` maps a vertex to transit pairs
    (frozensets of two edge ids) the path may not route through, and
    ``end_edges`` names the external edge entering at s / leaving at t so the
    endpoint transit pairs are checked too. Returns (cost, vertices, edge
    ids) or None.
    """
    verts = sorted(set(vertices))
    if len(verts) > HAM_PATH_MAX:
        raise ResourceLimitError(f"min_ham_path guard: |X|={len(verts)} > {HAM_PATH_MAX}")
    forbidden = forbidden or {}
    end_edges = end_edges or {}
    forced = frozenset(forced)

    def banned(v, e_in, e_out):
        if e_in is None or e_out is None:
            return False
        pairs = forbidden.get(v)
        return bool(pairs) and frozenset((e_in, e_out)) in pairs

    if s == t:
        if len(verts) != 1 or verts[0] != s:
            return None
        if forced:
            return None
        if banned(s, end_edges.get(s), end_edges.get(t)):
            return None
        return 0, (s,), ()
    if s not in verts or t not in verts:
        return None

    adj = {v: [] for v in verts}
    vset = set(verts)
    for eid, u, v, cost in edges:
        if u in vset and v in vset:
            adj[u].append((eid, v, cost))
            adj[v].append((eid, u, cost))
    for v in adj:
        adj[v].sort(key=lambda r: (r[2], r[0]))

    total = len(verts)
    best = [None]  # (cost, vertex tuple, edge tuple)

    def visit(v, seen, count, cost, used, path_v, path_e, entry):
        if best[0] is not None and cost >= best[0][0]:
            return
        if count == total:
            if v != t or not forced <= used:
                return
            if banned(t, entry, end_edges.get(t)):
                return
            best[0] = (cost, tuple(path_v), tuple(path_e))
            return
        for eid, w, c in adj[v]:
            if w in seen:
                continue
            if w == t and count != total - 1:
                continue
            if banned(v, entry, eid):
                continue
            seen.add(w)
            path_v.append(w)
            path_e.append(eid)
            visit(w, seen, count + 1, cost + c, used | {eid}, path_v, path_e, eid)
            path_e.pop()
            path_v.pop()
            seen.remove(w)

    visit(s, {s}, 1, 0, frozenset(), [s], [], end_edges.get(s))
    return best[0]
