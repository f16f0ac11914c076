"""Graph-shrinking rules and vertex splitting, with full traceability.

A ``ReducedInstance`` is the working multigraph a partial assignment reduces
the original instance to: live edges with costs, the forced set, a
correspondence map back to original edge ids, and a replayable event trace.
``reduce`` applies the rule pipeline exactly in the documented order; every
event carries its complete state delta (including the degree-forcing
cascade it triggered), so traces replay deterministically and tours can be
expanded back through contractions.
"""

import itertools
import weakref
from dataclasses import dataclass, replace
from typing import ClassVar

import numpy as np

from . import kernels, oracle
from .errors import (
    InfeasibleError,
    InputError,
    InternalError,
    ResourceLimitError,
    UnsupportedDegreeError,
)
from .graph_core import (
    FORCE,
    REMOVE,
    Edge,
    GraphView,
    Instance,
    circuits_in_component,
    u_components_view,
)

SMALL_CUT_MAX = 8  # 3/4-cut subgraph size bound


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class SplitInjectEvent:
    kind: ClassVar[str] = "split"
    bridges: tuple
    forced: tuple
    removed: tuple


@dataclass(frozen=True)
class AssignmentEvent:
    kind: ClassVar[str] = "assignment"
    edge: int
    decision: str
    applied: tuple  # reduced edge ids the decision landed on
    originals: tuple  # original ids assigned alongside (correspondence mates)
    forced: tuple
    removed: tuple


@dataclass(frozen=True)
class CircuitEvent:
    kind: ClassVar[str] = "circuit-procedure"
    seed: int
    decision: str
    circuit: tuple
    forced: tuple
    removed: tuple


@dataclass(frozen=True)
class ParallelEvent:
    kind: ClassVar[str] = "parallel-elimination"
    u: int
    v: int
    forced: tuple
    removed: tuple


@dataclass(frozen=True)
class PathRecord:
    cost: int
    vertices: tuple
    edge_ids: tuple


@dataclass(frozen=True)
class BoundaryEdge:
    old_edge: int
    inner: int
    outer: int
    new_edge: int
    alpha: int
    new_cost: int
    forced: bool


@dataclass(frozen=True)
class ThreeCutEvent:
    kind: ClassVar[str] = "three-cut"
    x_vertices: tuple
    new_vertex: int
    boundary: tuple  # three BoundaryEdge records, sorted by old edge id
    paths: tuple  # PathRecord | None for boundary pairs (0,1), (0,2), (1,2)
    removed_internal: tuple
    forced: tuple
    removed: tuple


@dataclass(frozen=True)
class FourCutEvent:
    kind: ClassVar[str] = "four-cut"
    x_vertices: tuple
    cut_edges: tuple
    infeasible: tuple  # pairing indices: 0=(01|23) 1=(02|13) 2=(03|12)


PAIRINGS = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2))


# -- split types ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitChoice:
    """Partition of a high-degree vertex's incident edges into two sides.

    side_a stays at the vertex, side_b moves to the new vertex; external
    side sizes are (2,3) for degree 5, (3,3) for degree 6, (3,4) for 7.
    """

    vertex: int
    side_a: tuple
    side_b: tuple


@dataclass(frozen=True)
class SplitRecord:
    choice: SplitChoice
    new_vertex: int
    bridge_id: int


# -- runtime constraint sites ---------------------------------------------------


@dataclass(frozen=True)
class ContractionSite:
    """Live bookkeeping for a 3-cut vertex: its edges and forbidden pairs."""

    vertex: int
    edge_ids: tuple
    forbidden: frozenset  # frozensets of two current edge ids


@dataclass(frozen=True)
class FourCutSite:
    x_vertices: frozenset
    cut_edges: tuple  # current ids, boundary order
    inner: tuple  # inner endpoint per cut edge
    infeasible: frozenset  # pairing indices


# -- the working graph ---------------------------------------------------------


class ReducedInstance:
    """Mutable working multigraph produced by the reduction function."""

    __slots__ = (
        "base",
        "vertices",
        "edges",
        "forced",
        "inc",
        "corr_new",
        "red_of",
        "trace",
        "sites",
        "four_sites",
        "four_seen",
        "assigned",
        "next_vertex",
        "next_edge",
        "_view",
    )

    def __init__(self, base):
        self.base = base
        self.vertices = set(range(base.n))
        self.edges = {e.id: (e.u, e.v, e.cost) for e in base.edges}
        self.forced = set()
        self.inc = {v: set() for v in self.vertices}
        for e in base.edges:
            self.inc[e.u].add(e.id)
            self.inc[e.v].add(e.id)
        self.corr_new = {}
        self.red_of = {e.id: e.id for e in base.edges}
        self.trace = []
        self.sites = {}
        self.four_sites = []
        self.four_seen = set()
        self.assigned = {}
        self.next_vertex = base.n
        self.next_edge = len(base.edges)
        self._view = None

    def copy(self):
        ri = ReducedInstance.__new__(ReducedInstance)
        ri.base = self.base
        ri.vertices = set(self.vertices)
        ri.edges = dict(self.edges)
        ri.forced = set(self.forced)
        ri.inc = {v: set(s) for v, s in self.inc.items()}
        ri.corr_new = dict(self.corr_new)
        ri.red_of = dict(self.red_of)
        ri.trace = list(self.trace)
        ri.sites = dict(self.sites)
        ri.four_sites = list(self.four_sites)
        ri.four_seen = set(self.four_seen)
        ri.assigned = dict(self.assigned)
        ri.next_vertex = self.next_vertex
        ri.next_edge = self.next_edge
        ri._view = None
        return ri

    # -- queries ---------------------------------------------------------

    def view(self):
        if self._view is None:
            self._view = GraphView(self.vertices, self.edges, self.forced)
        return self._view

    def corr(self, eid):
        return self.corr_new.get(eid, frozenset((eid,)))

    def forced_cost_sum(self):
        return sum(self.edges[e][2] for e in self.forced)

    def live_unforced(self):
        return sorted(set(self.edges) - self.forced)

    def snapshot(self):
        """Canonical value for equality/determinism checks."""
        return (
            tuple(sorted(self.vertices)),
            tuple(sorted((e, *self.edges[e]) for e in self.edges)),
            tuple(sorted(self.forced)),
            tuple(sorted((e, tuple(sorted(s))) for e, s in self.corr_new.items())),
            tuple(self.trace),
        )

    # -- low-level mutation ------------------------------------------------

    def _touch(self):
        self._view = None

    def _add_edge(self, eid, u, v, cost, forced):
        self.edges[eid] = (u, v, cost)
        self.inc[u].add(eid)
        self.inc[v].add(eid)
        if forced:
            self.forced.add(eid)
        self._touch()

    def _drop_edge(self, eid):
        u, v, _ = self.edges.pop(eid)
        self.inc[u].discard(eid)
        self.inc[v].discard(eid)
        self.forced.discard(eid)
        self._touch()

    def _force_edge(self, eid):
        self.forced.add(eid)
        self._touch()


# -- propagation ---------------------------------------------------------------


def _propagate(ri):
    """Degree-forcing fixpoint; returns (forced delta, removed delta).

    Rules: a live vertex with exactly two live edges has both forced; a
    vertex with two forced edges loses its other live edges. Raises
    InfeasibleError on live degree < 2, forced degree > 2, a forced pair
    forbidden at a contracted vertex, or more forced edges than vertices.
    """
    forced_delta = []
    removed_delta = []
    changed = True
    while changed:
        changed = False
        for v in sorted(ri.vertices):
            ids = ri.inc[v]
            live = len(ids)
            if live < 2:
                raise InfeasibleError(f"vertex {v} has live degree {live}")
            fids = [e for e in ids if e in ri.forced]
            if len(fids) > 2:
                raise InfeasibleError(f"vertex {v} has {len(fids)} forced edges")
            if len(fids) == 2:
                site = ri.sites.get(v)
                if site is not None and frozenset(fids) in site.forbidden:
                    raise InfeasibleError(f"forbidden pair forced at contracted vertex {v}")
                if live > 2:
                    for e in sorted(set(ids) - set(fids)):
                        ri._drop_edge(e)
                        removed_delta.append(e)
                    changed = True
            elif live == 2:
                for e in sorted(set(ids) - set(fids)):
                    ri._force_edge(e)
                    forced_delta.append(e)
                if len(fids) < 2:
                    changed = True
    if len(ri.forced) > len(ri.vertices):
        raise InfeasibleError("more forced edges than vertices")
    return tuple(forced_delta), tuple(removed_delta)


def _apply_decision(ri, eid, decision):
    """Set one live reduced edge's state; consistent repeats are no-ops."""
    if decision == FORCE:
        if eid not in ri.edges:
            raise InfeasibleError(f"edge {eid} was deleted, cannot force")
        if eid in ri.forced:
            return
        ri._force_edge(eid)
    elif decision == REMOVE:
        if eid not in ri.edges:
            return
        if eid in ri.forced:
            raise InfeasibleError(f"edge {eid} is forced, cannot remove")
        ri._drop_edge(eid)
    else:
        raise InputError(f"unknown decision {decision!r}")


# -- circuit procedure -----------------------------------------------------------


def _circuit_containing(ri, eid):
    view = ri.view()
    u, v, _ = ri.edges[eid]
    for comp in u_components_view(view):
        if u in comp:
            for circ in circuits_in_component(view, comp, singletons=False):
                if eid in circ.edges:
                    return circ
            return None
    return None


def _solve_circuit_parities(ri, circuit, seed, decision):
    """Propagate the seed decision around the circuit via block parities."""
    dec = {seed: 1 if decision == FORCE else 0}
    # already-determined circuit edges constrain the propagation too
    for e in circuit.edges:
        if e not in ri.edges:
            dec.setdefault(e, 0)
        elif e in ri.forced:
            dec.setdefault(e, 1)
    view = ri.view()
    constraints = []
    for a, b, block in circuit.links:
        cut = view.cut_ids(block)
        phi = sum(1 for e in cut if e in ri.forced and e != a and e != b)
        constraints.append((a, b, phi & 1))
    changed = True
    while changed:
        changed = False
        for a, b, phi in constraints:
            if a in dec and b in dec:
                if (dec[a] + dec[b] + phi) & 1:
                    raise InfeasibleError("circuit parity contradiction")
            elif a in dec:
                dec[b] = (dec[a] + phi) & 1
                changed = True
            elif b in dec:
                dec[a] = (dec[b] + phi) & 1
                changed = True
    return dec


def _run_circuit(ri, circuit, seed, decision, seed_applied=False):
    """Apply the circuit procedure; returns the appended CircuitEvent."""
    dec = _solve_circuit_parities(ri, circuit, seed, decision)
    forced_delta = []
    removed_delta = []
    for e in sorted(circuit.edges):
        if e not in dec:
            continue  # conservative: disconnected link structure leaves e open
        want = FORCE if dec[e] else REMOVE
        if e == seed and seed_applied:
            continue
        before_forced = e in ri.forced
        before_live = e in ri.edges
        _apply_decision(ri, e, want)
        if want == FORCE and not before_forced:
            forced_delta.append(e)
        elif want == REMOVE and before_live:
            removed_delta.append(e)
    pf, pr = _propagate(ri)
    ev = CircuitEvent(
        seed=seed,
        decision=decision,
        circuit=tuple(circuit.edges),
        forced=tuple(forced_delta) + pf,
        removed=tuple(removed_delta) + pr,
    )
    ri.trace.append(ev)
    return ev


def circuit_procedure(reduced, circuit, seed_edge, decision):
    """Public rule: decide seed_edge and propagate around its circuit."""
    if seed_edge not in circuit.edges:
        raise InputError("seed edge not in circuit")
    if seed_edge not in reduced.edges or seed_edge in reduced.forced:
        raise InputError("seed edge must be live and unforced")
    ri = reduced.copy()
    _run_circuit(ri, circuit, seed_edge, decision)
    return ri


def propagate_forcing(reduced):
    """Public fixpoint of the two degree-forcing rules (state-only; no event)."""
    ri = reduced.copy()
    _propagate(ri)
    return ri


# -- parallel edges ---------------------------------------------------------------


def _parallel_bundles(ri):
    bundles = {}
    for eid in sorted(ri.edges):
        u, v, _ = ri.edges[eid]
        bundles.setdefault((min(u, v), max(u, v)), []).append(eid)
    return {k: ids for k, ids in bundles.items() if len(ids) >= 2}


def _eliminate_parallels(ri):
    """Apply the parallel-edge rule to every bundle; True if state changed."""
    bundles = _parallel_bundles(ri)
    if not bundles:
        return False
    changed = False
    if len(ri.vertices) == 2:
        changed = _terminal_two_vertices(ri)
        return changed
    for (u, v) in sorted(bundles):
        ids = [e for e in bundles[(u, v)] if e in ri.edges]
        if len(ids) < 2:
            continue
        forced = sorted(e for e in ids if e in ri.forced)
        unforced = sorted((ri.edges[e][2], e) for e in ids if e not in ri.forced)
        if len(forced) >= 2:
            raise InfeasibleError(f"two forced parallel edges {forced[0]},{forced[1]} with n > 2")
        removed = []
        if forced:
            removed = [e for _, e in unforced]
        elif unforced:
            removed = [e for _, e in unforced[1:]]
        if not removed:
            continue
        for e in removed:
            _apply_decision(ri, e, REMOVE)
        pf, pr = _propagate(ri)
        ri.trace.append(
            ParallelEvent(u=u, v=v, forced=pf, removed=tuple(removed) + pr)
        )
        changed = True
    return changed


def _terminal_two_vertices(ri):
    """Two live vertices: force the cheapest valid pair of parallel edges."""
    ids = sorted(ri.edges)
    forced = sorted(e for e in ids if e in ri.forced)
    if len(forced) > 2:
        raise InfeasibleError("more than two forced edges on two vertices")
    best = None
    for pair in itertools.combinations(ids, 2):
        if not set(forced) <= set(pair):
            continue
        if _pair_forbidden(ri, pair):
            continue
        cost = ri.edges[pair[0]][2] + ri.edges[pair[1]][2]
        if best is None or (cost, pair) < best:
            best = (cost, pair)
    if best is None:
        raise InfeasibleError("no valid terminal edge pair on two vertices")
    keep = set(best[1])
    removed = []
    newly_forced = []
    for e in ids:
        if e in keep:
            if e not in ri.forced:
                ri._force_edge(e)
                newly_forced.append(e)
        elif e in ri.edges:
            _apply_decision(ri, e, REMOVE)
            removed.append(e)
    if not removed and not newly_forced:
        return False
    u, v = sorted(ri.vertices)
    ri.trace.append(ParallelEvent(u=u, v=v, forced=tuple(newly_forced), removed=tuple(removed)))
    return True


def _pair_forbidden(ri, pair):
    for v in ri.vertices:
        site = ri.sites.get(v)
        if site is None:
            continue
        at_v = [e for e in pair if e in ri.inc[v]]
        if len(at_v) == 2 and frozenset(at_v) in site.forbidden:
            return True
    return False


def eliminate_parallel_edges(reduced):
    """Public rule: reduce every parallel bundle (terminal at two vertices)."""
    ri = reduced.copy()
    _eliminate_parallels(ri)
    return ri


# -- parity condition ---------------------------------------------------------------


def parity_condition(reduced):
    """Both parity clauses: even forced cut per U-component, and an even
    number of odd-forced-cut blocks per closed circuit."""
    view = reduced.view()
    comps = u_components_view(view)
    for comp in comps:
        cut = view.cut_ids(comp)
        odd = sum(1 for e in cut if e in view.forced) & 1
        if odd:
            return False
    for comp in comps:
        if len(comp) == 1:
            continue
        for circ in circuits_in_component(view, comp, singletons=False):
            if not circ.closed:
                continue
            odd_blocks = 0
            for block in circ.blocks:
                cut = view.cut_ids(block)
                if sum(1 for e in cut if e in view.forced) & 1:
                    odd_blocks += 1
            if odd_blocks & 1:
                return False
    return True


# -- three-cut reduction ----------------------------------------------------------


def _site_constraints(ri, X):
    """Transit constraints of contracted vertices inside X."""
    forb = {}
    for v in X:
        site = ri.sites.get(v)
        if site is not None and site.forbidden:
            forb[v] = site.forbidden
    return forb


# Cut-rule results depend only on the local state around X (live/forced bits
# of its internal and cut edges plus transit bans); identical configurations
# recur across sibling branches, so results are memoized per base instance
# under a content key.
_RULE_MEMO = weakref.WeakKeyDictionary()


def _rule_memo(ri):
    memo = _RULE_MEMO.get(ri.base)
    if memo is None:
        memo = {}
        _RULE_MEMO[ri.base] = memo
    return memo


def _local_sig(ri, X):
    internal = []
    cut = []
    seen = set()
    for v in X:
        for e in ri.inc[v]:
            if e in seen:
                continue
            seen.add(e)
            u, w, _ = ri.edges[e]
            if u in X and w in X:
                internal.append((e, e in ri.forced))
            else:
                cut.append((e, e in ri.forced))
    sites = []
    for v in X:
        site = ri.sites.get(v)
        if site is not None and site.forbidden:
            sites.append((v, tuple(sorted(tuple(sorted(p)) for p in site.forbidden))))
    return (
        tuple(sorted(X)),
        tuple(sorted(internal)),
        tuple(sorted(cut)),
        tuple(sorted(sites)),
    )


def _three_cut_data(ri, X):
    """Boundary structure, shortest internal paths and alphas for cut set X.

    Returns None when the rule does not apply cleanly (alphas fractional or
    negative); raises InfeasibleError when no boundary pair admits any
    Hamiltonian path through X. Memoized per snapshot.
    """
    X = frozenset(X)
    memo = _rule_memo(ri)
    key = ("three_cut", _local_sig(ri, X))
    if key in memo:
        cached = memo[key]
        if cached == "infeasible":
            raise InfeasibleError("no Hamiltonian path through 3-cut subgraph")
        return cached
    try:
        data = _three_cut_data_uncached(ri, X)
    except InfeasibleError:
        memo[key] = "infeasible"
        raise
    memo[key] = data
    return data


def _three_cut_data_uncached(ri, X):
    view = ri.view()
    cut = view.cut_ids(X)
    if len(cut) != 3:
        raise InputError(f"cut size {len(cut)} != 3")
    cut = sorted(cut)
    inner = []
    outer = []
    for e in cut:
        u, v, _ = ri.edges[e]
        inner.append(u if u in X else v)
        outer.append(v if u in X else u)
    internal = [
        (e, *ri.edges[e])
        for e in sorted(ri.edges)
        if ri.edges[e][0] in X and ri.edges[e][1] in X
    ]
    internal = [(e, u, v, c) for (e, u, v, c) in internal]
    forced_internal = [e for (e, _, _, _) in internal if e in ri.forced]
    forb = _site_constraints(ri, X)
    sentinel = 2 * (1 + ri.base.n * max((e.cost for e in ri.base.edges), default=1))
    paths = []
    costs = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        res = oracle.min_ham_path(
            X,
            internal,
            inner[i],
            inner[j],
            forced=forced_internal,
            forbidden=forb,
            end_edges={inner[i]: cut[i], inner[j]: cut[j]},
        )
        if res is None:
            paths.append(None)
            costs.append(sentinel)
        else:
            paths.append(PathRecord(cost=res[0], vertices=res[1], edge_ids=res[2]))
            costs.append(res[0])
    if all(p is None for p in paths):
        raise InfeasibleError("no Hamiltonian path through 3-cut subgraph")
    p01, p02, p12 = costs
    if (p01 + p02 - p12) % 2 or (p01 + p12 - p02) % 2 or (p02 + p12 - p01) % 2:
        return None
    alphas = ((p01 + p02 - p12) // 2, (p01 + p12 - p02) // 2, (p02 + p12 - p01) // 2)
    if any(a < 0 for a in alphas):
        return None
    return X, cut, inner, outer, internal, paths, alphas


def _rename_edge_refs(ri, old, new):
    """Point constraint sites at a cut edge's replacement id."""
    for v, site in list(ri.sites.items()):
        if old in site.edge_ids:
            ids = tuple(new if e == old else e for e in site.edge_ids)
            forb = frozenset(
                frozenset(new if e == old else e for e in pair) for pair in site.forbidden
            )
            ri.sites[v] = replace(site, edge_ids=ids, forbidden=forb)
    for i, fs in enumerate(ri.four_sites):
        if old in fs.cut_edges:
            ri.four_sites[i] = replace(
                fs, cut_edges=tuple(new if e == old else e for e in fs.cut_edges)
            )


def _apply_three_cut(ri, data):
    X, cut, inner, outer, internal, paths, alphas = data
    x = ri.next_vertex
    ri.next_vertex += 1
    boundary = []
    ri.vertices.add(x)
    ri.inc[x] = set()
    for idx, old in enumerate(cut):
        new = ri.next_edge
        ri.next_edge += 1
        new_cost = ri.edges[old][2] + alphas[idx]
        was_forced = old in ri.forced
        boundary.append(
            BoundaryEdge(
                old_edge=old,
                inner=inner[idx],
                outer=outer[idx],
                new_edge=new,
                alpha=alphas[idx],
                new_cost=new_cost,
                forced=was_forced,
            )
        )
        ri.corr_new[new] = ri.corr(old)
        for orig in ri.corr(old):
            ri.red_of[orig] = new
        ri._drop_edge(old)
        ri._add_edge(new, outer[idx], x, new_cost, was_forced)
        _rename_edge_refs(ri, old, new)
    removed_internal = []
    for (e, _, _, _) in internal:
        if e in ri.edges:
            ri._drop_edge(e)
        for orig in ri.corr(e):
            ri.red_of[orig] = None  # absorbed into the contraction
        removed_internal.append(e)
    for v in X:
        ri.vertices.discard(v)
        ri.inc.pop(v, None)
        ri.sites.pop(v, None)
    forbidden = set()
    order = ((0, 1), (0, 2), (1, 2))
    for pos, (i, j) in enumerate(order):
        if paths[pos] is None:
            forbidden.add(frozenset((boundary[i].new_edge, boundary[j].new_edge)))
    ri.sites[x] = ContractionSite(
        vertex=x,
        edge_ids=tuple(b.new_edge for b in boundary),
        forbidden=frozenset(forbidden),
    )
    # four-cut sites that lost vertices to the contraction are stale
    ri.four_sites = [fs for fs in ri.four_sites if not (fs.x_vertices & X)]
    ri._touch()
    pf, pr = _propagate(ri)
    ev = ThreeCutEvent(
        x_vertices=tuple(sorted(X)),
        new_vertex=x,
        boundary=tuple(boundary),
        paths=tuple(paths),
        removed_internal=tuple(removed_internal),
        forced=pf,
        removed=pr,
    )
    ri.trace.append(ev)
    return ev


def three_cut_reduce(reduced, X):
    """Public rule: contract a 3-cut subgraph, preserving tour costs."""
    X = frozenset(X)
    if not X or len(X) > SMALL_CUT_MAX:
        raise InputError(f"3-cut set size {len(X)} outside 1..{SMALL_CUT_MAX}")
    if len(X) == 1:
        return reduced.copy()  # degenerate contraction: alphas (0,0,0), no-op
    ri = reduced.copy()
    data = _three_cut_data(ri, X)
    if data is None:
        raise InputError("3-cut not applicable: alphas fractional or negative")
    _apply_three_cut(ri, data)
    return ri


def three_cut_paths_and_alphas(reduced, X):
    """Shortest boundary-pair path costs and alpha weights for a 3-cut set.

    Degenerate single-vertex X reports alphas (0, 0, 0).
    """
    X = frozenset(X)
    if len(X) == 1:
        view = reduced.view()
        cut = sorted(view.cut_ids(X))
        if len(cut) != 3:
            raise InputError(f"cut size {len(cut)} != 3")
        return (0, 0, 0), (0, 0, 0)
    data = _three_cut_data(reduced.copy(), X)
    if data is None:
        raise InputError("3-cut not applicable: alphas fractional or negative")
    _, _, _, _, _, paths, alphas = data
    sentinel_costs = tuple(p.cost if p is not None else None for p in paths)
    return sentinel_costs, alphas


# -- four-cut reducibility ---------------------------------------------------------


@dataclass(frozen=True)
class FourCutResult:
    reducible: bool
    infeasible: tuple  # pairing indices
    pairings: tuple = PAIRINGS


def _pairing_flags(ri, X, cut, inner):
    """Indices of infeasible pairings, memoized by local state."""
    memo = _rule_memo(ri)
    key = ("four_cut", _local_sig(ri, X), cut)
    flags = memo.get(key)
    if flags is None:
        flags = [
            idx
            for idx, pairing in enumerate(PAIRINGS)
            if not _pairing_feasible(ri, X, cut, inner, pairing)
        ]
        memo[key] = flags
    return flags


def _pairing_feasible(ri, X, cut, inner, pairing):
    """Can X split into two disjoint covering paths matching the pairing?

    Enumerates simple s1-t1 paths for the first pairing side (respecting
    transit bans at contracted vertices); for each, the complement must
    carry a Hamiltonian s2-t2 path using all remaining forced edges.
    """
    a, b, c, d = pairing
    X = frozenset(X)
    internal = [
        (e, *ri.edges[e])
        for e in sorted(ri.edges)
        if ri.edges[e][0] in X and ri.edges[e][1] in X
    ]
    forced_internal = {e for (e, _, _, _) in internal if e in ri.forced}
    forb = _site_constraints(ri, X)
    s1, t1 = inner[a], inner[b]
    s2, t2 = inner[c], inner[d]

    def banned(v, e_in, e_out):
        pairs = forb.get(v)
        return bool(pairs) and frozenset((e_in, e_out)) in pairs

    def complement_ok(verts1, used1):
        verts2 = X - verts1
        if s2 not in verts2 or t2 not in verts2:
            return False
        for (e, u, v, _) in internal:
            if e not in forced_internal:
                continue
            in1u, in1v = u in verts1, v in verts1
            if in1u != in1v:
                return False  # forced edge straddles the two sides
            if in1u and e not in used1:
                return False  # forced edge inside side 1 but unused
        sub2 = [r for r in internal if r[1] in verts2 and r[2] in verts2]
        f2 = [e for (e, _, _, _) in sub2 if e in forced_internal]
        return (
            oracle.min_ham_path(
                verts2, sub2, s2, t2, forced=f2, forbidden=forb,
                end_edges={s2: cut[c], t2: cut[d]},
            )
            is not None
        )

    if s1 == t1:
        if not banned(s1, cut[a], cut[b]) and complement_ok(frozenset((s1,)), frozenset()):
            return True
        return False

    adj = {}
    for (e, u, v, _) in internal:
        adj.setdefault(u, []).append((e, v))
        adj.setdefault(v, []).append((e, u))

    hit = [False]

    def dfs(v, seen, used, entry):
        if hit[0]:
            return
        if v == t1:
            if not banned(t1, entry, cut[b]) and complement_ok(frozenset(seen), frozenset(used)):
                hit[0] = True
            return
        for e, w in adj.get(v, ()):
            if w in seen or banned(v, entry, e):
                continue
            seen.add(w)
            used.add(e)
            dfs(w, seen, used, e)
            used.discard(e)
            seen.discard(w)
            if hit[0]:
                return

    dfs(s1, {s1}, set(), cut[a])
    return hit[0]


def four_cut_site_satisfiable(ri, site):
    """Re-test a recorded 4-cut constraint against the current state.

    True when the site went stale (contraction touched it) or at least one
    permitted pairing is still realizable; False prunes the branch.
    """
    if not site.x_vertices <= ri.vertices:
        return True
    if any(e not in ri.edges for e in site.cut_edges):
        return True
    flags_now = _pairing_flags(ri, site.x_vertices, site.cut_edges, site.inner)
    for idx in range(len(PAIRINGS)):
        if idx in site.infeasible or idx in flags_now:
            continue
        return True
    return False


def four_cut_reducible(reduced, X):
    """Pairing feasibility bits for a fully forced 4-cut around X."""
    X = frozenset(X)
    if not X or len(X) > SMALL_CUT_MAX:
        raise InputError(f"4-cut set size {len(X)} outside 1..{SMALL_CUT_MAX}")
    view = reduced.view()
    cut = sorted(view.cut_ids(X))
    if len(cut) != 4:
        raise InputError(f"cut size {len(cut)} != 4")
    if not all(e in reduced.forced for e in cut):
        raise InputError("4-cut test requires all cut edges forced")
    inner = []
    for e in cut:
        u, v, _ = reduced.edges[e]
        inner.append(u if u in X else v)
    infeasible = []
    for idx, pairing in enumerate(PAIRINGS):
        if not _pairing_feasible(reduced, X, cut, inner, pairing):
            infeasible.append(idx)
    return FourCutResult(reducible=bool(infeasible), infeasible=tuple(infeasible))


# -- rule search ---------------------------------------------------------------


def _live_two_cuts(view):
    """(edge, edge, block mask) triples of the live graph, memoized."""

    def build():
        edge_ids = sorted(view.edges)
        if len(edge_ids) < 2 or len(view.vlist) < 2:
            return []
        vidx = view.vindex
        eu = np.fromiter(
            (vidx[view.edges[e][0]] for e in edge_ids), dtype=np.int64, count=len(edge_ids)
        )
        ev = np.fromiter(
            (vidx[view.edges[e][1]] for e in edge_ids), dtype=np.int64, count=len(edge_ids)
        )
        oi, oj, om = kernels.two_cut_sides(len(view.vlist), eu, ev)
        return [
            (edge_ids[i], edge_ids[j], mask)
            for i, j, mask in zip(oi.tolist(), oj.tolist(), om.tolist())
        ]

    return view._memo("live_two_cuts", build)


def _find_reducible_block(ri):
    """Least 2-live-cut block with both cut edges unforced, if any."""
    view = ri.view()
    best = None
    for a, b, mask in _live_two_cuts(view):
        if a in ri.forced or b in ri.forced:
            continue
        key = (min(a, b), max(a, b))
        if best is None or key < best[0]:
            best = (key, a, b, mask)
    if best is None:
        return None
    return best[1], best[2], view.mask_to_vertices(best[3])


def _apply_reducible(ri, found):
    a, b, _block = found
    seed = min(a, b)
    circ = _circuit_containing(ri, seed)
    if circ is None or seed not in circ.edges:
        # conservative fallback: the block itself forces both boundary edges
        forced_delta = []
        for e in (a, b):
            if e not in ri.forced:
                _apply_decision(ri, e, FORCE)
                forced_delta.append(e)
        pf, pr = _propagate(ri)
        ri.trace.append(
            CircuitEvent(
                seed=seed,
                decision=FORCE,
                circuit=(a, b),
                forced=tuple(forced_delta) + pf,
                removed=pr,
            )
        )
    else:
        _run_circuit(ri, circ, seed, FORCE)


def _small_cut_candidates(ri):
    """Connected subsets (size <= 8) with live cut 3 or 4, canonical order."""
    view = ri.view()

    def build():
        k = len(view.vlist)
        if k < 3:
            return []
        indptr, adj = view.csr()
        masks, cuts, sizes, truncated = kernels.connected_small_subsets(
            k, indptr, adj, SMALL_CUT_MAX
        )
        if truncated:
            raise ResourceLimitError("small-cut subset enumeration overflow")
        out = []
        for mask, cut, size in zip(masks.tolist(), cuts.tolist(), sizes.tolist()):
            verts = view.mask_to_vertices(mask)
            out.append((int(size), tuple(sorted(verts)), int(cut), verts))
        out.sort(key=lambda r: (r[0], r[1]))
        return out

    return view._memo("small_cuts", build)


def _find_and_apply_three_cut(ri, candidates):
    nlive = len(ri.vertices)
    for size, _key, cut, verts in candidates:
        if cut != 3 or size < 2 or size >= nlive:
            continue
        data = _three_cut_data(ri, verts)
        if data is None:
            continue
        _apply_three_cut(ri, data)
        return True
    return False


def _record_four_cuts(ri, candidates):
    recorded = False
    for size, key, cut, verts in candidates:
        if cut != 4:
            continue
        view_cut = sorted(ri.view().cut_ids(verts))
        if len(view_cut) != 4 or not all(e in ri.forced for e in view_cut):
            continue
        dedupe = (key, tuple(view_cut))
        if dedupe in ri.four_seen:
            continue
        ri.four_seen.add(dedupe)
        inner = []
        for e in view_cut:
            u, v, _ = ri.edges[e]
            inner.append(u if u in verts else v)
        infeasible = _pairing_flags(ri, verts, tuple(view_cut), tuple(inner))
        if not infeasible:
            continue
        if len(infeasible) == 3:
            raise InfeasibleError("all 4-cut pairings infeasible")
        site = FourCutSite(
            x_vertices=frozenset(verts),
            cut_edges=tuple(view_cut),
            inner=tuple(inner),
            infeasible=frozenset(infeasible),
        )
        ri.four_sites.append(site)
        ri.trace.append(
            FourCutEvent(
                x_vertices=tuple(sorted(verts)),
                cut_edges=tuple(view_cut),
                infeasible=tuple(infeasible),
            )
        )
        recorded = True
    return recorded


def _exhaust(ri):
    """Rule loop 2(a): circuits, then parallels, then 3/4-cut, until stable."""
    while True:
        found = _find_reducible_block(ri)
        if found is not None:
            _apply_reducible(ri, found)
            continue
        if _eliminate_parallels(ri):
            continue
        candidates = _small_cut_candidates(ri)
        if _find_and_apply_three_cut(ri, candidates):
            continue
        if _record_four_cuts(ri, candidates):
            continue
        break


# -- the reduction function ---------------------------------------------------------


def _init_reduced(instance):
    ri = ReducedInstance(instance)
    bridges = tuple(sorted(instance.pre_forced))
    for e in bridges:
        ri._force_edge(e)
    pf, pr = _propagate(ri)
    if bridges or pf or pr:
        ri.trace.append(SplitInjectEvent(bridges=bridges, forced=pf, removed=pr))
    return ri


def validate_assignment(instance, assignment):
    seen = set()
    for step in assignment:
        if len(step) != 2:
            raise InputError(f"bad assignment step {step!r}")
        eid, dec = step
        if eid not in instance.edge_by_id:
            raise InputError(f"assignment references unknown edge {eid}")
        if dec not in (FORCE, REMOVE):
            raise InputError(f"bad decision {dec!r}")
        if eid in seen:
            raise InputError(f"edge {eid} assigned twice")
        seen.add(eid)


def reduce(instance, assignment=()):
    """Reduce the instance under an ordered partial assignment.

    Pipeline per step: exhaust the rules, apply the decision to the reduced
    edge carrying the original id (and thereby to all correspondence mates),
    run the circuit procedure on the rest of the seed's circuit, and repeat;
    the rules run once more at the end. Raises InfeasibleError when any rule
    proves the branch dead.
    """
    validate_assignment(instance, assignment)
    ri = _init_reduced(instance)
    _exhaust(ri)
    for eid, dec in assignment:
        _apply_step(ri, eid, dec)
        _exhaust(ri)
    return ri


def _apply_step(ri, eid, dec):
    """One assignment step: 2(b) apply + 2(c) circuit remainder."""
    if eid not in ri.red_of:
        raise InternalError(f"no reduced edge for original {eid}")
    red = ri.red_of[eid]
    if red is None:
        raise InputError(f"edge {eid} was absorbed by a contraction and cannot be assigned")
    circ = None
    if red in ri.edges and red not in ri.forced:
        circ = _circuit_containing(ri, red)
    before_forced = red in ri.forced
    before_live = red in ri.edges
    _apply_decision(ri, red, dec)
    mates = tuple(sorted(ri.corr(red)))
    for orig in mates:
        ri.assigned[orig] = dec
    pf, pr = _propagate(ri)
    own = ()
    if dec == FORCE and not before_forced:
        own = (red,)
    removed_own = (red,) if dec == REMOVE and before_live else ()
    ri.trace.append(
        AssignmentEvent(
            edge=eid,
            decision=dec,
            applied=(red,),
            originals=mates,
            forced=own + pf,
            removed=removed_own + pr,
        )
    )
    if circ is not None and red in circ.edges and len(circ.edges) > 1:
        _run_circuit(ri, circ, red, dec, seed_applied=True)


# -- trace replay --------------------------------------------------------------


def replay_trace(instance, trace):
    """Re-apply a trace structurally; reproduces the reduced graph exactly."""
    ri = ReducedInstance(instance)
    for ev in trace:
        if ev.kind == "split":
            for e in ev.bridges + ev.forced:
                ri.forced.add(e)
            for e in ev.removed:
                ri._drop_edge(e)
        elif ev.kind in ("assignment", "circuit-procedure", "parallel-elimination"):
            for e in ev.removed:
                if e in ri.edges:
                    ri._drop_edge(e)
            for e in ev.forced:
                ri.forced.add(e)
        elif ev.kind == "three-cut":
            x = ev.new_vertex
            ri.vertices.add(x)
            ri.inc[x] = set()
            for b in ev.boundary:
                ri.corr_new[b.new_edge] = ri.corr(b.old_edge)
                for orig in ri.corr(b.old_edge):
                    ri.red_of[orig] = b.new_edge
                ri._drop_edge(b.old_edge)
                ri._add_edge(b.new_edge, b.outer, x, b.new_cost, b.forced)
            for e in ev.removed_internal:
                if e in ri.edges:
                    ri.forced.discard(e)
                    ri._drop_edge(e)
            for v in ev.x_vertices:
                ri.vertices.discard(v)
                ri.inc.pop(v, None)
            ri.next_vertex = max(ri.next_vertex, x + 1)
            ri.next_edge = max(ri.next_edge, max(b.new_edge for b in ev.boundary) + 1)
            for e in ev.removed:
                if e in ri.edges:
                    ri._drop_edge(e)
            for e in ev.forced:
                ri.forced.add(e)
        elif ev.kind == "four-cut":
            pass
        else:
            raise InternalError(f"unknown event kind {ev.kind!r}")
        ri.trace.append(ev)
    ri._touch()
    return ri


# -- tour expansion through the trace --------------------------------------------


def expand_tour_edges(reduced, edge_ids):
    """Map a reduced-graph tour edge set back to original edge ids."""
    ids = set(edge_ids)
    for ev in reversed(reduced.trace):
        if ev.kind != "three-cut":
            continue
        present = [b for b in ev.boundary if b.new_edge in ids]
        if not present:
            # tour does not visit the contracted vertex: impossible for a
            # Hamiltonian tour; guarded for robustness on partial inputs
            raise InternalError("tour misses a contracted vertex")
        if len(present) != 2:
            raise InternalError("tour must use exactly two edges of a contracted vertex")
        order = {b.new_edge: i for i, b in enumerate(ev.boundary)}
        i, j = sorted(order[b.new_edge] for b in present)
        pos = ((0, 1), (0, 2), (1, 2)).index((i, j))
        path = ev.paths[pos]
        if path is None:
            raise InternalError("tour routed through a forbidden boundary pair")
        for b in present:
            ids.discard(b.new_edge)
            ids.add(b.old_edge)
        ids.update(path.edge_ids)
    return sorted(ids)


# -- vertex splitting --------------------------------------------------------------


def enumerate_splits(degree):
    """Abstract side partitions for splitting a vertex of the given degree."""
    if degree == 5:
        return [
            (a, tuple(i for i in range(5) if i not in a))
            for a in itertools.combinations(range(5), 2)
        ]
    if degree == 6:
        return [
            (a, tuple(i for i in range(6) if i not in a))
            for a in itertools.combinations(range(6), 3)
            if 0 in a
        ]
    if degree == 7:
        return [
            (a, tuple(i for i in range(7) if i not in a))
            for a in itertools.combinations(range(7), 3)
        ]
    raise UnsupportedDegreeError(f"no splitting rule for degree {degree}")


def split_vertex(instance, choice):
    """Split one high-degree vertex along the choice; bridge is pre-forced.

    The new vertex takes side_b; the zero-cost bridge joins the halves and
    is injected into the forced set at reduction start. For degree 7 the
    side-b vertex has degree 5 and needs a further split.
    """
    v = choice.vertex
    inc = set(instance.incident[v])
    side_a = tuple(choice.side_a)
    side_b = tuple(choice.side_b)
    if set(side_a) | set(side_b) != inc or set(side_a) & set(side_b):
        raise InputError("split sides must partition the vertex's incident edges")
    deg = len(inc)
    expected = {5: (2, 3), 6: (3, 3), 7: (3, 4)}.get(deg)
    if expected is None:
        raise UnsupportedDegreeError(f"vertex degree {deg} not splittable")
    if (len(side_a), len(side_b)) != expected:
        raise InputError(f"side sizes {(len(side_a), len(side_b))} != {expected} for degree {deg}")
    w = instance.n
    bridge = len(instance.edges)
    new_edges = []
    for e in instance.edges:
        if e.id in side_b:
            u2 = w if e.u == v else e.u
            v2 = w if e.v == v else e.v
            new_edges.append(Edge(e.id, u2, v2, e.cost))
        else:
            new_edges.append(e)
    new_edges.append(Edge(bridge, v, w, 0))
    inst2 = Instance(
        n=instance.n + 1,
        edges=tuple(new_edges),
        degree_bound=instance.degree_bound,
        cost_scale=instance.cost_scale,
        pre_forced=instance.pre_forced | {bridge},
    )
    return inst2, SplitRecord(choice=choice, new_vertex=w, bridge_id=bridge)
