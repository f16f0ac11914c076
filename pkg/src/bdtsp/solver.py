"""Backtracking search over partial edge assignments.

The predicate classifies a partial assignment as true/false/indeterminate
after running the reduction pipeline; the heuristic picks the next original
edge to branch on. ``backtrack`` explores force-before-remove with
first-accept semantics (or the full tree when measuring), ``binary_search_
optimum`` drives it with a shrinking cost threshold, and ``solve`` handles
degree-5..7 instances by enumerating vertex splittings down to degree 4.
"""

import random
from dataclasses import dataclass, field

from . import reductions
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
    Tour,
    is_two_edge_connected,
    u_components_view,
    circuits_in_component,
    verify_tour,
)
from .reductions import SplitChoice, enumerate_splits, split_vertex

TRUE = "true"
FALSE = "false"
INDETERMINATE = "indeterminate"

LEMMA1_CAP = 1 << 20


def _ceil_log2(n):
    return (n - 1).bit_length() if n > 1 else 0


@dataclass
class SearchStats:
    tree_nodes: int = 0
    max_depth: int = 0
    p_calls: int = 0
    h_calls: int = 0
    pruned_false: int = 0
    accepted: int = 0

    @property
    def internal(self):
        return self.tree_nodes - self.pruned_false - self.accepted

    def merge(self, other):
        self.tree_nodes += other.tree_nodes
        self.max_depth = max(self.max_depth, other.max_depth)
        self.p_calls += other.p_calls
        self.h_calls += other.h_calls
        self.pruned_false += other.pruned_false
        self.accepted += other.accepted


@dataclass(frozen=True)
class BoundState:
    """Binary-search bounds; threshold is the midpoint cutoff."""

    lower: int
    upper: int

    @property
    def threshold(self):
        return (self.lower + self.upper + 1) // 2


@dataclass(frozen=True)
class BinaryRecord:
    runs: int
    first_cost: int | None  # upper bound the session started from
    bound: int | None  # 2 + ceil(log2(first_cost + 1))
    within_bound: bool


@dataclass
class SolveReport:
    tour: Tour | None
    cost: int | None  # scaled units
    stats: SearchStats
    sessions: list = field(default_factory=list)
    sub_solves: int = 0
    splits_enumerated: int = 0
    f56: int = 0
    f7: int = 0
    full_tree_nodes: int | None = None
    split_mode: str = "exhaustive"


class _NodeData:
    __slots__ = (
        "reduced",
        "infeasible",
        "forced_sum",
        "two_ec",
        "parity",
        "four_ok",
        "leafish",
        "cap_declined",
        "completion",
        "branch",
    )

    def __init__(self):
        self.reduced = None
        self.infeasible = False
        self.forced_sum = 0
        self.two_ec = False
        self.parity = False
        self.four_ok = True
        self.leafish = False
        self.cap_declined = False
        self.completion = None
        self.branch = -1  # lazy; -1 = not computed


def _is_four_cycle(view, comp):
    if len(comp) != 4:
        return False
    inner = [
        e
        for e in view.edges
        if e not in view.forced and view.edges[e][0] in comp and view.edges[e][1] in comp
    ]
    if len(inner) != 4:
        return False
    deg = {v: 0 for v in comp}
    for e in inner:
        u, v, _ = view.edges[e]
        deg[u] += 1
        deg[v] += 1
    return all(d == 2 for d in deg.values())


def _completion(ri):
    """Cheapest Lemma-1 completion (edge ids, cost), or None.

    Precondition: every U-component trivial or a 4-cycle. Enumerates the
    per-4-cycle edge choices with union-find pruning; raises
    ResourceLimitError past the 2^20 combination cap.
    """
    view = ri.view()
    comps = u_components_view(view)
    base_deg = {v: 0 for v in ri.vertices}
    for e in ri.forced:
        u, v, _ = ri.edges[e]
        base_deg[u] += 1
        base_deg[v] += 1
    option_sets = []
    for comp in comps:
        inner = sorted(
            e
            for e in view.edges
            if e not in view.forced
            and view.edges[e][0] in comp
            and view.edges[e][1] in comp
        )
        if not inner:
            v = min(comp)
            if base_deg[v] != 2:
                return None
            continue
        if not _is_four_cycle(view, comp):
            raise InputError("component neither trivial nor a 4-cycle")
        options = []
        for bits in range(16):
            chosen = [inner[i] for i in range(4) if (bits >> i) & 1]
            deg = {v: base_deg[v] for v in comp}
            for e in chosen:
                u, v, _ = ri.edges[e]
                deg[u] += 1
                deg[v] += 1
            if all(d == 2 for d in deg.values()):
                cost = sum(ri.edges[e][2] for e in chosen)
                options.append((cost, tuple(chosen)))
        if not options:
            return None
        options.sort()
        option_sets.append(options)

    total = 1
    for options in option_sets:
        total *= len(options)
        if total > LEMMA1_CAP:
            raise ResourceLimitError("lemma-1 completion cap exceeded")

    n_live = len(ri.vertices)
    forced = sorted(ri.forced)
    base_cost = sum(ri.edges[e][2] for e in forced)

    def place(parent, count, edges):
        # union-find with premature-cycle rejection; last edge may close
        for e in edges:
            u, v, _ = ri.edges[e]
            ru, rv = _find(parent, u), _find(parent, v)
            count += 1
            if ru == rv:
                if count != n_live:
                    return None
            else:
                parent[ru] = rv
        return count

    root_parent = {v: v for v in ri.vertices}
    root_count = place(root_parent, 0, forced)
    if root_count is None:
        return None

    best = [None]

    def rec(idx, parent, count, cost, chosen):
        if best[0] is not None and cost >= best[0][1]:
            return
        if idx == len(option_sets):
            if count != n_live:
                return
            roots = {_find(parent, v) for v in ri.vertices}
            if len(roots) != 1:
                return
            ids = tuple(sorted(forced + chosen))
            if _forbidden_pair_used(ri, ids):
                return
            best[0] = (ids, cost)
            return
        for opt_cost, opt_edges in option_sets[idx]:
            p2 = dict(parent)
            c2 = place(p2, count, opt_edges)
            if c2 is None:
                continue
            rec(idx + 1, p2, c2, cost + opt_cost, chosen + list(opt_edges))

    rec(0, root_parent, root_count, base_cost, [])
    return best[0]


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _forbidden_pair_used(ri, ids):
    idset = set(ids)
    for v, site in ri.sites.items():
        if v not in ri.vertices:
            continue
        at_v = [e for e in ri.inc[v] if e in idset]
        if len(at_v) == 2 and frozenset(at_v) in site.forbidden:
            return True
    return False


def _cycle_walk(edges_map, ids):
    """Order an edge set forming one cycle: (vertices, edge ids, cost)."""
    inc = {}
    for e in ids:
        u, v, _ = edges_map[e]
        inc.setdefault(u, []).append(e)
        inc.setdefault(v, []).append(e)
    for v in inc:
        if len(inc[v]) != 2:
            raise InternalError(f"tour degree {len(inc[v])} at vertex {v}")
        inc[v].sort()
    start = min(inc)
    verts = [start]
    eids = []
    used = set()
    cur = start
    cost = 0
    while True:
        nxt_edge = None
        for e in inc[cur]:
            if e not in used:
                nxt_edge = e
                break
        if nxt_edge is None:
            break
        used.add(nxt_edge)
        u, v, c = edges_map[nxt_edge]
        cur = v if cur == u else u
        cost += c
        eids.append(nxt_edge)
        if cur == start:
            break
        verts.append(cur)
    if len(used) != len(ids) or len(verts) != len(ids):
        raise InternalError("tour edge set is not a single cycle")
    return tuple(verts), tuple(eids), cost


def lemma1_finish(reduced):
    """Minimum-cost completion when all U-components are trivial/4-cycles.

    Returns a Tour over the reduced graph (reduced edge ids), or None.
    """
    completion = _completion(reduced)
    if completion is None:
        return None
    ids, cost = completion
    verts, eids, walked = _cycle_walk(reduced.edges, ids)
    if walked != cost:
        raise InternalError("completion cost mismatch")
    return Tour(vertices=verts, total_cost=cost, edge_ids=eids)


class SearchSession:
    """Per-instance memo of reduced node states, shared across runs.

    The reduction is threshold-independent, so every backtracking run of a
    binary search reuses the same node data; each node equals a from-scratch
    reduce of its assignment prefix.
    """

    def __init__(self, instance):
        if instance.max_degree() > 4:
            raise InputError("backtracking requires degree <= 4; split the instance first")
        self.instance = instance
        self.nodes = {}

    def node(self, assignment):
        nd = self.nodes.get(assignment)
        if nd is not None:
            return nd
        nd = _NodeData()
        try:
            if not assignment:
                ri = reductions._init_reduced(self.instance)
                reductions._exhaust(ri)
            else:
                parent = self.node(assignment[:-1])
                if parent.infeasible:
                    nd.infeasible = True
                    self.nodes[assignment] = nd
                    return nd
                ri = parent.reduced.copy()
                eid, dec = assignment[-1]
                reductions._apply_step(ri, eid, dec)
                reductions._exhaust(ri)
        except InfeasibleError:
            nd.infeasible = True
            self.nodes[assignment] = nd
            return nd
        nd.reduced = ri
        nd.forced_sum = ri.forced_cost_sum()
        nd.two_ec = is_two_edge_connected(ri.view())
        if nd.two_ec:
            nd.parity = reductions.parity_condition(ri)
        if nd.two_ec and nd.parity:
            nd.four_ok = all(
                reductions.four_cut_site_satisfiable(ri, s) for s in ri.four_sites
            )
        if nd.two_ec and nd.parity and nd.four_ok:
            view = ri.view()
            comps = u_components_view(view)
            nd.leafish = all(
                len(c) == 1 or _is_four_cycle(view, c) for c in comps
            )
            if nd.leafish:
                try:
                    nd.completion = _completion(ri)
                except ResourceLimitError:
                    nd.cap_declined = True
        self.nodes[assignment] = nd
        return nd

    def p_value(self, nd, threshold):
        if nd.infeasible:
            return FALSE
        if threshold is not None and nd.forced_sum >= threshold:
            return FALSE
        if not nd.two_ec or not nd.parity or not nd.four_ok:
            return FALSE
        if nd.leafish and not nd.cap_declined:
            if nd.completion is not None and (
                threshold is None or nd.completion[1] < threshold
            ):
                return TRUE
            return FALSE
        return INDETERMINATE

    def branch_edge(self, nd):
        if nd.branch != -1:
            return nd.branch
        ri = nd.reduced
        view = ri.view()
        comps = u_components_view(view)
        qualifying = [
            c for c in comps if len(c) > 1 and not _is_four_cycle(view, c)
        ]
        if qualifying:
            comp = qualifying[0]
            circuits = circuits_in_component(view, comp, singletons=False)
            if circuits:
                pick = min(
                    circuits, key=lambda c: (-len(c.edges), tuple(sorted(c.edges)))
                )
                red_eid = min(pick.edges)
            else:
                red_eid = _least_unforced_edge(ri, comp)
        else:
            nontrivial = [c for c in comps if len(c) > 1]
            if not nontrivial:
                raise InputError("no nontrivial component to branch on")
            red_eid = _least_unforced_edge(ri, nontrivial[0])
        originals = [o for o in sorted(ri.corr(red_eid)) if o not in ri.assigned]
        if not originals:
            raise InternalError("branch edge has no unassigned original")
        nd.branch = originals[0]
        return nd.branch

    def accepted_tour(self, nd):
        ids, _cost = nd.completion
        base_ids = reductions.expand_tour_edges(nd.reduced, ids)
        edges_map = {e.id: (e.u, e.v, e.cost) for e in self.instance.edges}
        verts, eids, cost = _cycle_walk(edges_map, base_ids)
        tour = Tour(vertices=verts, total_cost=cost, edge_ids=eids)
        if not verify_tour(self.instance, tour):
            raise InternalError("reconstructed tour failed verification")
        return tour


def _least_unforced_edge(ri, comp):
    for v in sorted(comp):
        ids = sorted(e for e in ri.inc[v] if e not in ri.forced)
        if ids:
            return ids[0]
    raise InputError("component has no unforced edge")


# -- spec-facing predicate / heuristic ---------------------------------------


def predicate(instance, assignment=(), threshold=None):
    """Classify a partial assignment: 'true', 'false' or 'indeterminate'."""
    session = SearchSession(instance)
    nd = session.node(tuple(assignment))
    return session.p_value(nd, threshold)


def heuristic(instance, assignment=()):
    """Original edge id to branch on next; requires an indeterminate node."""
    session = SearchSession(instance)
    nd = session.node(tuple(assignment))
    if session.p_value(nd, None) != INDETERMINATE:
        raise InputError("heuristic requires an indeterminate assignment")
    return session.branch_edge(nd)


# -- tree exploration ---------------------------------------------------------


def backtrack(instance, threshold=None, session=None, full_tree=False):
    """Explore the assignment tree; first accepting node wins.

    Returns ((assignment, Tour) | None, SearchStats). With ``full_tree`` the
    whole tree is walked (the answer keeps first-accept order) so that
    stats.tree_nodes measures T.
    """
    if session is None:
        session = SearchSession(instance)
    stats = SearchStats()

    def walk(assignment):
        nd = session.node(assignment)
        stats.tree_nodes += 1
        stats.p_calls += 1
        stats.max_depth = max(stats.max_depth, len(assignment))
        value = session.p_value(nd, threshold)
        if value == FALSE:
            stats.pruned_false += 1
            return None
        if value == TRUE:
            stats.accepted += 1
            return assignment, nd
        stats.h_calls += 1
        edge = session.branch_edge(nd)
        found = None
        for dec in (FORCE, REMOVE):
            res = walk(assignment + ((edge, dec),))
            if res is not None and found is None:
                found = res
                if not full_tree:
                    return found
        return found

    res = walk(())
    if res is None:
        return None, stats
    assignment, nd = res
    return (assignment, session.accepted_tour(nd)), stats


def binary_search_optimum(instance, session=None, initial_upper=None):
    """Shortest tour by thresholded repetition of the backtracking search.

    Returns (Tour | None, SearchStats, BinaryRecord). ``initial_upper``
    restricts the search to tours strictly cheaper than the given cost.
    """
    if session is None:
        session = SearchSession(instance)
    stats = SearchStats()
    runs = 0
    res, st = backtrack(instance, initial_upper, session)
    stats.merge(st)
    runs += 1
    if res is None:
        first = initial_upper
        bound = 2 + _ceil_log2(first + 1) if first is not None else None
        return None, stats, BinaryRecord(runs, first, bound, bound is None or runs <= bound)
    best = res[1]
    first = initial_upper if initial_upper is not None else best.total_cost
    bounds = BoundState(0, best.total_cost)
    while bounds.lower < bounds.upper:
        t = bounds.threshold
        res, st = backtrack(instance, t, session)
        stats.merge(st)
        runs += 1
        if res is None:
            bounds = BoundState(t, bounds.upper)
        else:
            best = res[1]
            bounds = BoundState(bounds.lower, best.total_cost)
    bound = 2 + _ceil_log2(first + 1)
    return best, stats, BinaryRecord(runs, first, bound, runs <= bound)


def compute_upper_bound(instance):
    """Sum over vertices of the costliest incident edge (input cost units)."""
    total = 0
    for v in range(instance.n):
        ids = instance.incident[v]
        if ids:
            total += max(instance.edge_by_id[e].cost for e in ids)
    return total // instance.cost_scale


def reconstruct_tour(instance, assignment):
    """Replay an accepting assignment into a tour on the original edges."""
    try:
        ri = reductions.reduce(instance, tuple(assignment))
    except InfeasibleError as exc:
        raise InputError("assignment is not accepting") from exc
    tour_reduced = lemma1_finish(ri)
    if tour_reduced is None:
        raise InputError("assignment is not accepting")
    base_ids = reductions.expand_tour_edges(ri, tour_reduced.edge_ids)
    edges_map = {e.id: (e.u, e.v, e.cost) for e in instance.edges}
    verts, eids, cost = _cycle_walk(edges_map, base_ids)
    tour = Tour(vertices=verts, total_cost=cost, edge_ids=eids)
    if not verify_tour(instance, tour):
        raise InternalError("expanded tour failed verification")
    return tour


# -- degree dispatch ------------------------------------------------------------


def _split_variants(instance):
    v = next((u for u in range(instance.n) if instance.degree(u) >= 5), None)
    if v is None:
        yield instance, ()
        return
    inc = sorted(instance.incident[v])
    for ia, ib in enumerate_splits(len(inc)):
        choice = SplitChoice(
            vertex=v,
            side_a=tuple(inc[i] for i in ia),
            side_b=tuple(inc[i] for i in ib),
        )
        inst2, rec = split_vertex(instance, choice)
        for leaf, recs in _split_variants(inst2):
            yield leaf, (rec,) + recs


def _sample_variant(instance, rng):
    recs = []
    while True:
        v = next((u for u in range(instance.n) if instance.degree(u) >= 5), None)
        if v is None:
            return instance, tuple(recs)
        inc = sorted(instance.incident[v])
        options = enumerate_splits(len(inc))
        ia, ib = options[rng.randrange(len(options))]
        choice = SplitChoice(
            vertex=v,
            side_a=tuple(inc[i] for i in ia),
            side_b=tuple(inc[i] for i in ib),
        )
        instance, rec = split_vertex(instance, choice)
        recs.append(rec)


def split_counts(instance):
    """(f56, f7): degree-5/6-type splits (7-splits cascade one) and 7-splits."""
    f7 = sum(1 for v in range(instance.n) if instance.degree(v) == 7)
    f56 = sum(1 for v in range(instance.n) if instance.degree(v) in (5, 6)) + f7
    return f56, f7


def solve(instance, split_mode="exhaustive", seed=0, samples=None, measure_full_tree=False):
    """Exact optimum for instances of degree up to 7.

    Degree <= 4 solves directly; 5..7 enumerates vertex splittings (the
    Cartesian product over high-degree vertices) and optimizes each degree-4
    variant, seeding every variant's threshold with the best tour found so
    far. Sampling mode draws seeded random splittings instead (heuristic).
    """
    maxdeg = instance.max_degree()
    if maxdeg > 7:
        raise UnsupportedDegreeError(f"max degree {maxdeg} > 7")
    f56, f7 = split_counts(instance)
    report = SolveReport(
        tour=None, cost=None, stats=SearchStats(), f56=f56, f7=f7, split_mode=split_mode
    )

    if maxdeg <= 4:
        variants = [(instance, ())]
    elif split_mode == "exhaustive":
        variants = _split_variants(instance)
    elif split_mode == "sample":
        rng = random.Random(seed)
        if samples is None:
            samples = max(1, round(3 * (10 / 6) ** f56 * (35 / 20) ** f7))
        variants = (_sample_variant(instance, rng) for _ in range(samples))
    else:
        raise InputError(f"unknown split mode {split_mode!r}")

    best = None  # (cost, tour_in_leaf, recs)
    first_leaf = None
    for leaf, recs in variants:
        report.splits_enumerated += 1
        if first_leaf is None:
            first_leaf = leaf
        upper = best[0] if best is not None else None
        tour, stats, record = binary_search_optimum(leaf, initial_upper=upper)
        report.stats.merge(stats)
        report.sessions.append(record)
        report.sub_solves += 1
        if tour is not None and (best is None or tour.total_cost < best[0]):
            best = (tour.total_cost, tour, recs)

    if best is not None:
        cost, tour, recs = best
        bridge_ids = {r.bridge_id for r in recs}
        base_ids = [e for e in tour.edge_ids if e not in bridge_ids]
        edges_map = {e.id: (e.u, e.v, e.cost) for e in instance.edges}
        verts, eids, walked = _cycle_walk(edges_map, base_ids)
        final = Tour(vertices=verts, total_cost=walked, edge_ids=eids)
        if walked != cost:
            raise InternalError("split merge changed the tour cost")
        if not verify_tour(instance, final):
            raise InternalError("merged tour failed verification")
        report.tour = final
        report.cost = walked

    if measure_full_tree and first_leaf is not None:
        _, stats = backtrack(first_leaf, threshold=None, full_tree=True)
        report.full_tree_nodes = stats.tree_nodes
    return report
