"""Multigraph representation and the structural queries the solver is built on.

Everything here is a pure function of an immutable snapshot. ``Instance`` is
the loaded problem; ``GraphView`` is a live-edge snapshot (of an instance
overlay or of a reduced working graph) offering connectivity, U-components,
circuits, cuts and tour verification.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import InputError

UNFORCED = "unforced"
FORCED = "forced"
DELETED = "deleted"

FORCE = "force"
REMOVE = "remove"

MAX_LIVE_VERTICES = 62  # int64 bitmask limit in the kernels


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    cost: int

    def other(self, w: int) -> int:
        return self.v if w == self.u else self.u


@dataclass(frozen=True)
class Instance:
    """A weighted undirected multigraph with a degree bound.

    Costs are stored pre-multiplied by ``cost_scale`` (the loader applies a
    factor of 2 so 3-cut weight adjustments stay integral); ``pre_forced``
    holds zero-cost bridge edges injected by vertex splitting.
    """

    n: int
    edges: tuple
    degree_bound: int
    cost_scale: int = 1
    pre_forced: frozenset = frozenset()

    @cached_property
    def incident(self):
        inc = [[] for _ in range(self.n)]
        for e in self.edges:
            inc[e.u].append(e.id)
            inc[e.v].append(e.id)
        return [tuple(ids) for ids in inc]

    @cached_property
    def edge_by_id(self):
        return {e.id: e for e in self.edges}

    def degree(self, v: int) -> int:
        return len(self.incident[v])

    @property
    def m(self) -> int:
        return len(self.edges)

    def max_degree(self) -> int:
        return max((len(ids) for ids in self.incident), default=0)

    def max_cost(self) -> int:
        return max((e.cost for e in self.edges), default=0)

    def validate(self) -> None:
        if self.n < 3:
            raise InputError("instance needs at least 3 vertices")
        if not 3 <= self.degree_bound <= 7:
            raise InputError(f"degree bound {self.degree_bound} outside 3..7")
        seen = set()
        for e in self.edges:
            if e.id in seen:
                raise InputError(f"duplicate edge id {e.id}")
            seen.add(e.id)
            if not (0 <= e.u < self.n and 0 <= e.v < self.n):
                raise InputError(f"edge {e.id} endpoint out of range")
            if e.u == e.v:
                raise InputError(f"edge {e.id} is a self-loop")
            if e.cost < 1 and e.id not in self.pre_forced:
                raise InputError(f"edge {e.id} has non-positive cost")
        for v in range(self.n):
            if self.degree(v) > self.degree_bound:
                raise InputError(
                    f"vertex {v + 1} has degree {self.degree(v)} > bound {self.degree_bound}"
                )


def build_instance(n, edge_list, degree_bound, cost_scale=1, pre_forced=(), validate=True):
    """Build an Instance from (u, v, cost) triples; ids follow list order.

    ``cost_scale`` multiplies every cost at construction (pass 2 for solver
    inputs, per the loading convention).
    """
    edges = tuple(
        Edge(i, u, v, c * cost_scale) for i, (u, v, c) in enumerate(edge_list)
    )
    inst = Instance(
        n=n,
        edges=edges,
        degree_bound=degree_bound,
        cost_scale=cost_scale,
        pre_forced=frozenset(pre_forced),
    )
    if validate:
        inst.validate()
    return inst


@dataclass(frozen=True)
class Tour:
    """Cyclic vertex sequence with its total (scaled) cost."""

    vertices: tuple
    total_cost: int
    edge_ids: tuple = ()


@dataclass(frozen=True)
class Circuit:
    """A maximal alternating edge/block chain inside one U-component.

    ``edges`` is the canonical sequence c_0..c_{m-1}; ``blocks`` holds the
    slot block between c_i and c_{i+1} (cyclically when ``closed``).
    ``links`` keeps every (edge, edge, block) relation of the class for
    parity propagation.
    """

    edges: tuple
    blocks: tuple
    closed: bool
    links: tuple = field(default=(), repr=False)


class GraphView:
    """Immutable live-multigraph snapshot: live edges plus forced marking."""

    __slots__ = ("vertices", "edges", "forced", "_derived")

    def __init__(self, vertices, edges, forced):
        self.vertices = frozenset(vertices)
        self.edges = dict(edges)
        self.forced = frozenset(forced)
        self._derived = {}

    # -- basic structure -------------------------------------------------

    def _memo(self, key, fn):
        if key not in self._derived:
            self._derived[key] = fn()
        return self._derived[key]

    @property
    def vlist(self):
        return self._memo("vlist", lambda: sorted(self.vertices))

    @property
    def vindex(self):
        return self._memo("vindex", lambda: {v: i for i, v in enumerate(self.vlist)})

    @property
    def incident(self):
        def build():
            inc = {v: [] for v in self.vertices}
            for eid in sorted(self.edges):
                u, v, _ = self.edges[eid]
                inc[u].append(eid)
                inc[v].append(eid)
            return inc

        return self._memo("incident", build)

    def degree(self, v):
        return len(self.incident[v])

    def forced_degree(self, v):
        return sum(1 for e in self.incident[v] if e in self.forced)

    def unforced_ids(self):
        return self._memo("unforced", lambda: sorted(set(self.edges) - self.forced))

    def endpoints(self, eid):
        u, v, _ = self.edges[eid]
        return u, v

    def cost(self, eid):
        return self.edges[eid][2]

    def cut_ids(self, X):
        """Live edges with exactly one endpoint in X."""
        X = set(X)
        out = []
        for eid in sorted(self.edges):
            u, v, _ = self.edges[eid]
            if (u in X) != (v in X):
                out.append(eid)
        return out

    # -- kernels glue -----------------------------------------------------

    def _edge_arrays(self, edge_ids):
        vidx = self.vindex
        eu = np.fromiter((vidx[self.edges[e][0]] for e in edge_ids), dtype=np.int64, count=len(edge_ids))
        ev = np.fromiter((vidx[self.edges[e][1]] for e in edge_ids), dtype=np.int64, count=len(edge_ids))
        return eu, ev

    def csr(self):
        """Sorted CSR over live edges (one entry per parallel edge)."""

        def build():
            k = len(self.vlist)
            vidx = self.vindex
            nbrs = [[] for _ in range(k)]
            for eid in sorted(self.edges):
                u, v, _ = self.edges[eid]
                nbrs[vidx[u]].append(vidx[v])
                nbrs[vidx[v]].append(vidx[u])
            indptr = np.zeros(k + 1, dtype=np.int64)
            flat = []
            for i, lst in enumerate(nbrs):
                lst.sort()
                flat.extend(lst)
                indptr[i + 1] = len(flat)
            return indptr, np.array(flat, dtype=np.int64)

        return self._memo("csr", build)

    def mask_to_vertices(self, mask):
        vlist = self.vlist
        return frozenset(vlist[i] for i in range(len(vlist)) if (mask >> i) & 1)


def view_from_states(instance, states=None):
    """Build a GraphView of an Instance under an EdgeState overlay."""
    states = states or {}
    edges = {}
    forced = set()
    for e in instance.edges:
        st = states.get(e.id, UNFORCED)
        if st == DELETED:
            continue
        edges[e.id] = (e.u, e.v, e.cost)
        if st == FORCED:
            forced.add(e.id)
    return GraphView(range(instance.n), edges, forced)


# -- connectivity ----------------------------------------------------------


def is_two_edge_connected(view):
    """True iff the live graph is connected and bridgeless."""
    if not view.vertices:
        raise InputError("empty instance")
    k = len(view.vlist)
    if k > MAX_LIVE_VERTICES:
        raise InputError(f"live vertex count {k} exceeds {MAX_LIVE_VERTICES}")
    edge_ids = sorted(view.edges)
    vidx = view.vindex
    indptr = np.zeros(k + 1, dtype=np.int64)
    deg = [0] * k
    for eid in edge_ids:
        u, v, _ = view.edges[eid]
        deg[vidx[u]] += 1
        deg[vidx[v]] += 1
    for i in range(k):
        indptr[i + 1] = indptr[i] + deg[i]
    adj_v = np.empty(2 * len(edge_ids), dtype=np.int64)
    adj_e = np.empty(2 * len(edge_ids), dtype=np.int64)
    pos = indptr[:-1].copy()
    for local, eid in enumerate(edge_ids):
        u, v, _ = view.edges[eid]
        iu, iv = vidx[u], vidx[v]
        adj_v[pos[iu]] = iv
        adj_e[pos[iu]] = local
        pos[iu] += 1
        adj_v[pos[iv]] = iu
        adj_e[pos[iv]] = local
        pos[iv] += 1
    ncomp, nbridge = kernels.components_and_bridges(k, indptr, adj_v, adj_e)
    return ncomp == 1 and nbridge == 0


def components_of(view, edge_ids):
    """Vertex partition induced by the given edges (singletons included)."""
    parent = {v: v for v in view.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in edge_ids:
        u, v, _ = view.edges[eid]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups = {}
    for v in view.vertices:
        groups.setdefault(find(v), set()).add(v)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def u_components_view(view):
    """Maximal components of the unforced live subgraph; singletons are trivial."""

    def build():
        unforced = [e for e in sorted(view.edges) if e not in view.forced]
        return components_of(view, unforced)

    return view._memo("u_components", build)


def edge_disjoint_paths_at_least(view, x, y, k=3):
    """True iff there are >= k edge-disjoint x-y paths in the live graph."""
    if x == y:
        return True
    flow = {}
    inc = view.incident
    for _ in range(k):
        prev = {x: None}
        stack = [x]
        while stack:
            a = stack.pop()
            if a == y:
                break
            for eid in inc[a]:
                u, v, _ = view.edges[eid]
                b = v if a == u else u
                f = flow.get(eid, 0)
                direction = 1 if a == u else -1
                if f == direction:
                    continue  # edge already carries flow this way
                if b not in prev:
                    prev[b] = (a, eid, direction)
                    stack.append(b)
        if y not in prev:
            return False
        b = y
        while prev[b] is not None:
            a, eid, direction = prev[b]
            f = flow.get(eid, 0)
            flow[eid] = 0 if f == -direction else direction
            b = a
    return True


# -- circuits ---------------------------------------------------------------


def circuits_in_component(view, component, singletons=True):
    """Maximal circuits of one U-component, with block structure.

    Classes of the "2-cut pair of the unforced subgraph" relation are
    sequenced along clean links (blocks containing no other class edge);
    with ``singletons``, unforced edges in no class become single-edge
    circuits when their endpoints stay 3-edge-connected in the whole live
    graph (the solver skips that test: single-edge circuits carry no blocks,
    so they affect neither parity nor the circuit procedure). Memoized per
    snapshot.
    """
    comp = frozenset(component)
    return view._memo(
        ("circuits", comp, singletons), lambda: _circuits_uncached(view, comp, singletons)
    )


def _circuits_uncached(view, comp, singletons):
    comp_edges = [
        e
        for e in sorted(view.edges)
        if e not in view.forced
        and view.edges[e][0] in comp
        and view.edges[e][1] in comp
    ]
    if not comp_edges:
        return []
    vlist = sorted(comp)
    vidx = {v: i for i, v in enumerate(vlist)}
    eu = np.fromiter((vidx[view.edges[e][0]] for e in comp_edges), dtype=np.int64, count=len(comp_edges))
    ev = np.fromiter((vidx[view.edges[e][1]] for e in comp_edges), dtype=np.int64, count=len(comp_edges))
    oi, oj, om = kernels.two_cut_sides(len(vlist), eu, ev)

    links = {}
    for i, j, mask in zip(oi.tolist(), oj.tolist(), om.tolist()):
        a, b = comp_edges[i], comp_edges[j]
        block = frozenset(vlist[t] for t in range(len(vlist)) if (mask >> t) & 1)
        links.setdefault(frozenset((a, b)), []).append(block)
    for blist in links.values():
        blist.sort(key=lambda s: (len(s), sorted(s)))

    parent = {e: e for e in comp_edges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pair in links:
        a, b = sorted(pair)
        parent[find(a)] = find(b)
    classes = {}
    for e in comp_edges:
        classes.setdefault(find(e), []).append(e)

    circuits = []
    in_class = set()
    for root in sorted(classes, key=lambda r: min(classes[r])):
        cls = sorted(classes[root])
        if len(cls) < 2:
            continue
        in_class.update(cls)
        circ = _sequence_class(view, cls, links)
        if circ is not None:
            circuits.append(circ)

    if singletons:
        for e in comp_edges:
            if e in in_class:
                continue
            u, v, _ = view.edges[e]
            if edge_disjoint_paths_at_least(view, u, v, 3):
                circuits.append(Circuit(edges=(e,), blocks=(), closed=False))
    circuits.sort(key=lambda c: min(c.edges))
    return circuits


def _sequence_class(view, cls, links):
    """Order a 2-cut class into a chain/cycle along clean links."""
    cls_set = set(cls)
    # clean link: a block of the pair containing no other class edge inside
    clean = {e: set() for e in cls}
    clean_blocks = {}
    for pair, blocks in links.items():
        a, b = sorted(pair)
        if a not in cls_set or b not in cls_set:
            continue
        good = []
        for blk in blocks:
            dirty = False
            for g in cls_set:
                if g == a or g == b:
                    continue
                gu, gv, _ = view.edges[g]
                if gu in blk and gv in blk:
                    dirty = True
                    break
            if not dirty:
                good.append(blk)
        if good:
            clean_blocks[pair] = good
            clean[a].add(b)
            clean[b].add(a)
    adj = {e: sorted(nbrs) for e, nbrs in clean.items()}

    degs = {e: len(adj[e]) for e in cls}
    order = None
    closed = False
    if cls and all(d == 2 for d in degs.values()):
        order = _walk_cycle(cls, adj)
        closed = order is not None
    if order is None and len(cls) == 2 and degs[cls[0]] == 1:
        # two edges, one linked pair: closed iff both sides are clean blocks
        pair = frozenset(cls)
        order = list(cls)
        closed = len(clean_blocks.get(pair, ())) >= 2
    if order is None:
        ends = [e for e in cls if degs[e] == 1]
        if len(ends) == 2 and all(degs[e] in (1, 2) for e in cls):
            order = _walk_path(min(ends), adj, len(cls))
    if order is None:
        order = _greedy_chain(cls, adj)
        closed = False
        if order is None or len(order) < 2:
            return None

    pairs = list(zip(order, order[1:] + order[:1])) if closed else list(zip(order, order[1:]))
    blocks = []
    used = []
    for a, b in pairs:
        pick = None
        for blk in clean_blocks.get(frozenset((a, b)), ()):
            if blk not in used:
                pick = blk
                break
        if pick is None:
            # slot without a usable clean block: degrade to an open chain
            if not blocks:
                return None
            closed = False
            break
        used.append(pick)
        blocks.append(pick)
    if not closed and len(blocks) >= len(order):
        blocks = blocks[: len(order) - 1]
    return Circuit(tuple(order), tuple(blocks), closed, _link_tuple(cls_set, links))


def _link_tuple(cls_set, links):
    out = []
    for pair, blocks in sorted(links.items(), key=lambda kv: sorted(kv[0])):
        a, b = sorted(pair)
        if a in cls_set and b in cls_set:
            for blk in blocks:
                out.append((a, b, blk))
    return tuple(out)


def _walk_cycle(cls, adj):
    start = min(cls)
    order = [start]
    prev = None
    cur = start
    while True:
        nxts = [x for x in adj[cur] if x != prev]
        if not nxts:
            return None
        nxt = min(nxts)
        if nxt == start:
            return order if len(order) == len(cls) else None
        if nxt in order:
            return None
        order.append(nxt)
        prev, cur = cur, nxt


def _walk_path(start, adj, total):
    order = [start]
    prev = None
    cur = start
    while True:
        nxts = [x for x in adj[cur] if x != prev]
        if not nxts:
            return order if len(order) == total else None
        nxt = min(nxts)
        if nxt in order:
            return None
        order.append(nxt)
        prev, cur = cur, nxt


def _greedy_chain(cls, adj):
    # lexicographically-least maximal chain; conservative fallback for
    # link classes that are neither a simple path nor a simple cycle
    start = min(cls)
    order = [start]
    used = {start}
    cur = start
    while True:
        nxts = [x for x in adj[cur] if x not in used]
        if not nxts:
            break
        cur = min(nxts)
        order.append(cur)
        used.add(cur)
    cur = start
    while True:
        nxts = [x for x in adj[cur] if x not in used]
        if not nxts:
            break
        cur = min(nxts)
        order.insert(0, cur)
        used.add(cur)
    return order if len(order) >= 2 else None


# -- spec-facing wrappers ---------------------------------------------------


def two_edge_connected(instance, states=None):
    """True iff the non-deleted edge set is connected and has no bridge."""
    return is_two_edge_connected(view_from_states(instance, states))


def u_components(instance, states=None):
    """Partition of V into maximal components of the unforced subgraph."""
    return u_components_view(view_from_states(instance, states))


def circuits_of(instance, states, component):
    """Circuits of one nontrivial U-component of the overlaid instance."""
    return circuits_in_component(view_from_states(instance, states), component)


def cut_edges(instance, states, X):
    """Edges of cut(X): one endpoint inside X, one outside."""
    view = view_from_states(instance, states)
    X = set(X)
    if not X or X >= view.vertices:
        raise InputError("cut set must be a nonempty proper subset of V")
    return view.cut_ids(X)


def verify_tour(instance, tour):
    """Check the Tour invariants against the instance; never raises."""
    n = instance.n
    verts = tuple(tour.vertices)
    if len(verts) != n or len(set(verts)) != n:
        return False
    if any(not (0 <= v < n) for v in verts):
        return False
    by_pair = {}
    for e in instance.edges:
        key = frozenset((e.u, e.v))
        if key not in by_pair or e.cost < by_pair[key].cost:
            by_pair[key] = e
    total = 0
    if tour.edge_ids:
        if len(tour.edge_ids) != n:
            return False
        lookup = instance.edge_by_id
        for i, eid in enumerate(tour.edge_ids):
            e = lookup.get(eid)
            if e is None:
                return False
            a, b = verts[i], verts[(i + 1) % n]
            if frozenset((e.u, e.v)) != frozenset((a, b)):
                return False
            total += e.cost
    else:
        for i in range(n):
            key = frozenset((verts[i], verts[(i + 1) % n]))
            e = by_pair.get(key)
            if e is None:
                return False
            total += e.cost
    return total == tour.total_cost
