"""Shared test helpers: independent brute-force oracles and corpus builders.

The oracles here deliberately avoid the package's search/reduction code
paths; they enumerate structures directly so the tests stay a second route.
"""

import itertools

import pytest

from bdtsp.cli import gen_random
from bdtsp.graph_core import build_instance


def build(n, edges, bound, scale=1, pre_forced=()):
    return build_instance(n, edges, bound, cost_scale=scale, pre_forced=pre_forced)


def constrained_tour_oracle(n, edges, forced=(), deleted=()):
    """Minimum tour cost by permutation enumeration under edge constraints.

    ``edges``: (id, u, v, cost) records. Forced edges must all be traversed;
    deleted edges are unavailable. Returns the cost or None. n <= 9.
    """
    assert n <= 9
    deleted = set(deleted)
    forced = set(forced) - deleted
    live = [(e, u, v, c) for (e, u, v, c) in edges if e not in deleted]
    pair_cost = {}
    pair_forced = {}
    for e, u, v, c in live:
        key = frozenset((u, v))
        if e in forced:
            if key in pair_forced:
                return None  # two forced parallels cannot both be used (n > 2)
            pair_forced[key] = c
        if key not in pair_cost or c < pair_cost[key]:
            pair_cost[key] = c
    forced_pairs = set(pair_forced)
    best = None
    for perm in itertools.permutations(range(1, n)):
        order = (0,) + perm
        pairs = [frozenset((order[i], order[(i + 1) % n])) for i in range(n)]
        pair_set = set(pairs)
        if len(pair_set) != n:
            continue  # repeated pair only possible at n == 2
        if not forced_pairs <= pair_set:
            continue
        cost = 0
        ok = True
        for key in pairs:
            if key in pair_forced:
                cost += pair_forced[key]
            elif key in pair_cost:
                cost += pair_cost[key]
            else:
                ok = False
                break
        if ok and (best is None or cost < best):
            best = cost
    return best


def tour_exists_oracle(n, edges):
    return constrained_tour_oracle(n, edges) is not None


def instance_edge_records(instance):
    return [(e.id, e.u, e.v, e.cost) for e in instance.edges]


def connectivity_oracle(n_vertices, edge_pairs):
    """Plain BFS connectivity over explicit vertex count."""
    if n_vertices == 0:
        return True
    adj = {v: set() for v in range(n_vertices)}
    for u, v in edge_pairs:
        adj[u].add(v)
        adj[v].add(u)
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == n_vertices


def two_ec_oracle(n_vertices, edge_records):
    """Delete-each-edge connectivity check: connected and bridgeless."""
    pairs = [(u, v) for (_, u, v, _) in edge_records]
    if not connectivity_oracle(n_vertices, pairs):
        return False
    for i in range(len(pairs)):
        if not connectivity_oracle(n_vertices, pairs[:i] + pairs[i + 1 :]):
            return False
    return True


def block_links_oracle(vertices, unforced_edges):
    """All (edge pair, block) relations by exhaustive component inspection.

    For every unordered pair {e, f} of unforced edges and every connected
    component K of the unforced subgraph minus both, record the pair when
    K's unforced boundary is exactly {e, f}.
    """
    verts = sorted(vertices)
    links = set()
    m = len(unforced_edges)
    for i in range(m):
        for j in range(i + 1, m):
            ei, ej = unforced_edges[i], unforced_edges[j]
            rest = [r for k, r in enumerate(unforced_edges) if k != i and k != j]
            adj = {v: set() for v in verts}
            for (_, u, v, _) in rest:
                adj[u].add(v)
                adj[v].add(u)
            seen_all = set()
            for s in verts:
                if s in seen_all:
                    continue
                comp = {s}
                stack = [s]
                while stack:
                    x = stack.pop()
                    for y in adj[x]:
                        if y not in comp:
                            comp.add(y)
                            stack.append(y)
                seen_all |= comp
                cross_i = (ei[1] in comp) != (ei[2] in comp)
                cross_j = (ej[1] in comp) != (ej[2] in comp)
                if cross_i and cross_j:
                    links.add(frozenset((ei[0], ej[0])))
    return links


def hub_instance(n, degree, cost_max, seed):
    """Random instance guaranteed to contain a vertex of the given degree."""
    inst = gen_random(n, degree, cost_max, seed=seed)
    if inst.max_degree() >= 5:
        return inst
    return None


@pytest.fixture(scope="session")
def fig2_instance():
    """The ten-vertex degree-3 host embedding the forcing-cascade fragment.

    Core: forced-candidates ab, ce; fragment edges ic, cb, bd, df, hi, ij,
    dg; outer ring e-a, a-h, h-g, g-j, j-f, f-e keeps it triangle-free with
    no small 3-cuts, so the rule pass leaves the virgin graph intact.
    """
    names = ["ic", "cb", "bd", "df", "hi", "ij", "dg", "ab", "ce",
             "ea", "ah", "hg", "gj", "jf", "fe"]
    ends = [(8, 2), (2, 1), (1, 3), (3, 5), (7, 8), (8, 9), (3, 6), (0, 1),
            (2, 4), (4, 0), (0, 7), (7, 6), (6, 9), (9, 5), (5, 4)]
    inst = build_instance(10, [(u, v, 3) for u, v in ends], 3, cost_scale=2)
    return inst, {lab: i for i, lab in enumerate(names)}, names
