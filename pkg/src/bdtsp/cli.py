"""Instance ingestion, random generation, command dispatch and reporting.

Instance format: first non-comment line ``n m k``; then m lines ``u v c``
with 1-indexed vertices and integer cost c >= 1; ``#`` starts a comment.
TSPLIB EXPLICIT full-matrix files are also accepted (positive entries become
edges). Costs are doubled at load (cost_scale = 2) so cut reductions stay in
integer arithmetic; reports print both the input-unit and raw scaled values.

Report output is line-oriented ``key=value`` (diffable); ``--json`` emits
the same fields as one JSON object. Exit codes: 0 ok, 1 input error,
2 solver/oracle mismatch, 3 resource limit.
"""

import argparse
import hashlib
import json
import random
import statistics
import sys
import time

import numpy as np

from . import kernels, oracle, quantum_cost, reductions, solver
from .errors import BdtspError, InputError, ResourceLimitError
from .graph_core import FORCE, REMOVE, build_instance

COST_SCALE = 2

EXIT_INPUT = 1
EXIT_MISMATCH = 2
EXIT_RESOURCE = 3


# -- parsing -------------------------------------------------------------------


def parse_instance(text, degree_bound=None):
    """Parse the native edge-list format or a TSPLIB EXPLICIT full matrix."""
    if "EDGE_WEIGHT_SECTION" in text or "DIMENSION" in text:
        return _parse_tsplib(text, degree_bound)
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line))
    if not rows:
        raise InputError("empty instance file")
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 3:
        raise InputError(f"line {lineno}: header must be 'n m k'")
    try:
        n, m, k = (int(p) for p in parts)
    except ValueError as exc:
        raise InputError(f"line {lineno}: non-integer header field") from exc
    if degree_bound is not None:
        k = degree_bound
    if len(rows) - 1 != m:
        raise InputError(f"expected {m} edge lines, found {len(rows) - 1}")
    edges = []
    for lineno, line in rows[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise InputError(f"line {lineno}: edge line must be 'u v c'")
        try:
            u, v, c = (int(p) for p in parts)
        except ValueError as exc:
            raise InputError(f"line {lineno}: non-integer edge field") from exc
        if not (1 <= u <= n and 1 <= v <= n):
            raise InputError(f"line {lineno}: vertex out of range 1..{n}")
        if u == v:
            raise InputError(f"line {lineno}: self-loop")
        if c < 1:
            raise InputError(f"line {lineno}: cost must be a positive integer")
        edges.append((u - 1, v - 1, c))
    return build_instance(n, edges, k, cost_scale=COST_SCALE)


def _parse_tsplib(text, degree_bound):
    dim = None
    fmt = None
    wtype = None
    values = []
    in_section = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line == "EOF":
            continue
        upper = line.upper()
        if in_section:
            if ":" in line or upper.isalpha():
                in_section = False
            else:
                values.extend(int(float(tok)) for tok in line.split())
                continue
        if upper.startswith("DIMENSION"):
            dim = int(line.split(":")[1])
        elif upper.startswith("EDGE_WEIGHT_TYPE"):
            wtype = line.split(":")[1].strip().upper()
        elif upper.startswith("EDGE_WEIGHT_FORMAT"):
            fmt = line.split(":")[1].strip().upper()
        elif upper.startswith("EDGE_WEIGHT_SECTION"):
            in_section = True
    if dim is None:
        raise InputError("TSPLIB file missing DIMENSION")
    if wtype is not None and wtype != "EXPLICIT":
        raise InputError(f"unsupported EDGE_WEIGHT_TYPE {wtype}")
    if fmt is not None and fmt != "FULL_MATRIX":
        raise InputError(f"unsupported EDGE_WEIGHT_FORMAT {fmt}")
    if len(values) != dim * dim:
        raise InputError(f"EDGE_WEIGHT_SECTION has {len(values)} values, expected {dim * dim}")
    edges = []
    for i in range(dim):
        for j in range(i + 1, dim):
            a = values[i * dim + j]
            b = values[j * dim + i]
            if a != b:
                raise InputError(f"matrix not symmetric at ({i + 1},{j + 1})")
            if a > 0:
                edges.append((i, j, a))
    degrees = [0] * dim
    for u, v, _ in edges:
        degrees[u] += 1
        degrees[v] += 1
    inferred = max(3, max(degrees, default=0))
    k = degree_bound if degree_bound is not None else inferred
    if inferred > 7:
        worst = degrees.index(max(degrees))
        raise InputError(f"vertex {worst + 1} has degree {max(degrees)} > 7")
    return build_instance(dim, edges, k, cost_scale=COST_SCALE)


def serialize_instance(instance):
    """Native-format text (input cost units); parse round-trips."""
    lines = [f"{instance.n} {instance.m} {instance.degree_bound}"]
    for e in instance.edges:
        lines.append(f"{e.u + 1} {e.v + 1} {e.cost // instance.cost_scale}")
    return "\n".join(lines) + "\n"


def instance_digest(instance):
    return hashlib.sha256(serialize_instance(instance).encode()).hexdigest()[:12]


# -- random generation ------------------------------------------------------------


def gen_random(n, degree_bound, cost_max, seed):
    """Seeded random connected simple graph with max degree <= degree_bound.

    For bounds above 4 the bulk of the graph stays at degree <= 4 and only
    one or two hub vertices are raised to the bound: exhaustive split
    enumeration is exponential in the number of above-4 vertices, so the
    generated corpora keep that count small by construction.
    """
    if n < 3:
        raise InputError(f"n={n} < 3")
    if not 3 <= degree_bound <= 7:
        raise InputError(f"degree bound {degree_bound} outside 3..7")
    if cost_max < 1:
        raise InputError(f"cost_max={cost_max} < 1")
    rng = random.Random(seed)
    base_bound = min(degree_bound, 4)
    deg = [0] * n
    present = set()
    edges = []

    def add(u, v):
        edges.append((u, v, rng.randint(1, cost_max)))
        present.add((min(u, v), max(u, v)))
        deg[u] += 1
        deg[v] += 1

    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        candidates = [u for u in order[:i] if deg[u] < base_bound]
        if not candidates:
            candidates = order[:i]  # degree-3, tiny n: spill over one tree slot
        add(order[i], rng.choice(candidates))
    attempts = 3 * n * base_bound
    for _ in range(attempts):
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u == v or deg[u] >= base_bound or deg[v] >= base_bound:
            continue
        if (min(u, v), max(u, v)) in present:
            continue
        add(u, v)
    if degree_bound > 4:
        for hub in rng.sample(range(n), 1 + seed % 2):
            while deg[hub] < degree_bound:
                candidates = [
                    w
                    for w in range(n)
                    if w != hub and deg[w] < 4 and (min(hub, w), max(hub, w)) not in present
                ]
                if not candidates:
                    break
                add(hub, rng.choice(candidates))
    return build_instance(n, edges, degree_bound, cost_scale=COST_SCALE)


# -- report plumbing ---------------------------------------------------------------


def _emit(pairs, as_json):
    if as_json:
        print(json.dumps(dict(pairs)))
    else:
        for k, v in pairs:
            print(f"{k}={v}")


def _fmt_tour(tour):
    return "-".join(str(v + 1) for v in tour.vertices)


def _answer_pairs(instance, tour):
    if tour is None:
        return [("answer", "none")]
    return [
        ("answer", "tour"),
        ("answer_cost", tour.total_cost // instance.cost_scale),
        ("answer_cost_scaled", tour.total_cost),
        ("answer_tour", _fmt_tour(tour)),
    ]


def _stats_pairs(stats):
    return [
        ("stats_tree_nodes", stats.tree_nodes),
        ("stats_max_depth", stats.max_depth),
        ("stats_p_calls", stats.p_calls),
        ("stats_h_calls", stats.h_calls),
        ("stats_pruned_false", stats.pruned_false),
        ("stats_accepted", stats.accepted),
    ]


def _qreport_pairs(q):
    return [
        ("model_T", q.tree_size),
        ("model_v", q.variables),
        ("model_v_per_n", f"{q.variables_per_n:.4f}"),
        ("model_delta", f"{q.delta:.6g}"),
        ("model_per_run_delta", f"{q.per_run_delta:.6g}"),
        ("model_backtracking_calls", q.backtracking_calls),
        ("model_repetitions", q.repetitions),
        ("model_amplification", f"{q.amplification:.6g}"),
        ("model_total_queries", q.total_queries),
        ("model_L", q.max_cost),
        ("model_L_prime", q.upper_bound),
        ("exponent_degree", q.degree),
        ("exponent_classical", "-" if q.classical_exponent is None else q.classical_exponent),
        ("exponent_quantum", q.quantum_exponent),
        ("model_note", q.note()),
    ]


# -- commands ------------------------------------------------------------------


def _load(args):
    with open(args.instance) as fh:
        return parse_instance(fh.read(), degree_bound=args.degree)


def cmd_solve(args):
    instance = _load(args)
    start = time.perf_counter()
    if args.threshold is not None:
        session = solver.SearchSession(instance)
        res, stats = solver.backtrack(
            instance, threshold=args.threshold * instance.cost_scale, session=session
        )
        tour = res[1] if res else None
        report = solver.SolveReport(tour=tour, cost=tour.total_cost if tour else None, stats=stats)
    else:
        report = solver.solve(instance, split_mode=args.split_mode, seed=args.seed)
    elapsed = time.perf_counter() - start
    pairs = [
        ("instance", instance_digest(instance)),
        ("n", instance.n),
        ("m", instance.m),
        ("degree_bound", instance.degree_bound),
        ("cost_scale", instance.cost_scale),
    ]
    pairs += _answer_pairs(instance, report.tour)
    exit_code = 0
    if args.oracle:
        hk = oracle.held_karp(instance)
        if hk is None:
            pairs.append(("oracle", "none"))
            agree = report.tour is None
        else:
            pairs.append(("oracle", "tour"))
            pairs.append(("oracle_cost", hk[0] // instance.cost_scale))
            agree = report.tour is not None and report.tour.total_cost == hk[0]
        pairs.append(("agree", str(agree).lower()))
        if not agree:
            exit_code = EXIT_MISMATCH
    pairs += _stats_pairs(report.stats)
    pairs += [
        ("runs", sum(r.runs for r in report.sessions)),
        ("sub_solves", report.sub_solves),
        ("splits_enumerated", report.splits_enumerated),
        ("wall_time_s", f"{elapsed:.4f}"),
    ]
    _emit(pairs, args.json)
    return exit_code


def cmd_reduce(args):
    instance = _load(args)
    assignment = _parse_assignment(args.assign, instance)
    try:
        ri = reductions.reduce(instance, assignment)
    except BdtspError as exc:
        if isinstance(exc, InputError):
            raise
        print(f"infeasible={exc}")
        return 0
    pairs = [
        ("instance", instance_digest(instance)),
        ("live_vertices", len(ri.vertices)),
        ("live_edges", len(ri.edges)),
        ("forced_edges", len(ri.forced)),
        ("trace_events", len(ri.trace)),
    ]
    _emit(pairs, args.json)
    for i, ev in enumerate(ri.trace):
        print(f"trace[{i}] kind={ev.kind} {ev}")
    return 0


def _parse_assignment(spec, instance):
    if not spec:
        return ()
    steps = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            eid_s, dec = item.split(":")
            eid = int(eid_s) - 1
        except ValueError as exc:
            raise InputError(f"bad assignment item {item!r} (want EDGE:force|remove)") from exc
        if dec not in (FORCE, REMOVE):
            raise InputError(f"bad decision {dec!r}")
        if not 0 <= eid < instance.m:
            raise InputError(f"edge {eid + 1} out of range 1..{instance.m}")
        steps.append((eid, dec))
    return tuple(steps)


def cmd_estimate(args):
    instance = _load(args)
    start = time.perf_counter()
    report = solver.solve(
        instance, split_mode=args.split_mode, seed=args.seed, measure_full_tree=True
    )
    full = solver.SearchStats()
    full.tree_nodes = report.full_tree_nodes
    q = quantum_cost.tsp_estimate(full, instance, delta_total=args.delta)
    elapsed = time.perf_counter() - start
    pairs = [
        ("instance", instance_digest(instance)),
        ("n", instance.n),
        ("m", instance.m),
    ]
    pairs += _answer_pairs(instance, report.tour)
    pairs += _qreport_pairs(q)
    entry = quantum_cost.exponent_table(q.degree)
    pairs += [
        ("exponent_classical_note", entry.classical_note),
        ("exponent_quantum_note", entry.quantum_note),
        ("trend_log2T_over_n", f"{np.log2(max(q.tree_size, 1)) / instance.n:.4f}"),
        ("wall_time_s", f"{elapsed:.4f}"),
    ]
    _emit(pairs, args.json)
    return 0


def cmd_bench(args):
    if args.kernels:
        return _bench_kernels(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = []
    for n in sizes:
        ratios = []
        for s in range(args.seeds):
            inst = gen_random(n, args.degree, args.cost_max, seed=args.seed + s)
            start = time.perf_counter()
            report = solver.solve(inst, measure_full_tree=True)
            elapsed = time.perf_counter() - start
            t_full = report.full_tree_nodes
            ratio = np.log2(max(t_full, 1)) / n
            ratios.append(ratio)
            print(
                f"bench n={n} seed={args.seed + s} T={t_full} "
                f"log2T_over_n={ratio:.4f} answer={'tour' if report.tour else 'none'} "
                f"time_s={elapsed:.3f}"
            )
        med = statistics.median(ratios)
        rows.append((n, med))
        print(f"bench_summary n={n} median_log2T_over_n={med:.4f} seeds={args.seeds}")
    worst = max(m for _, m in rows)
    print(f"bench_overall max_median={worst:.4f}")
    return 0


def _bench_kernels(args):
    from .kernels import numpy_impl

    try:
        from .kernels import numba_impl
    except ImportError:
        numba_impl = None
    impls = [("numpy", numpy_impl)] + ([("numba", numba_impl)] if numba_impl else [])
    rng = random.Random(args.seed)
    n = max(int(s) for s in args.sizes.split(","))
    inst = gen_random(n, args.degree, args.cost_max, seed=args.seed)
    C = oracle._cost_matrix_int(inst)
    view_edges = [(e.u, e.v) for e in inst.edges]
    eu = np.array([u for u, _ in view_edges], dtype=np.int64)
    ev = np.array([v for _, v in view_edges], dtype=np.int64)
    indptr, adj = _csr_sorted(inst)
    reps = args.seeds
    for name, impl in impls:
        impl.held_karp_table(C)  # warm the jit before timing
        start = time.perf_counter()
        for _ in range(reps):
            impl.held_karp_table(C)
        print(f"kernelbench kernel=held_karp backend={name} n={n} reps={reps} "
              f"time_s={time.perf_counter() - start:.4f}")
        impl.two_cut_sides(n, eu, ev)
        start = time.perf_counter()
        for _ in range(reps):
            impl.two_cut_sides(n, eu, ev)
        print(f"kernelbench kernel=two_cut_sides backend={name} n={n} reps={reps} "
              f"time_s={time.perf_counter() - start:.4f}")
        impl.connected_small_subsets(n, indptr, adj, 8)
        start = time.perf_counter()
        for _ in range(reps):
            impl.connected_small_subsets(n, indptr, adj, 8)
        print(f"kernelbench kernel=connected_small_subsets backend={name} n={n} reps={reps} "
              f"time_s={time.perf_counter() - start:.4f}")
    print(f"kernelbench active_backend={kernels.backend_name()}")
    return 0


def _csr_sorted(instance):
    nbrs = [[] for _ in range(instance.n)]
    for e in instance.edges:
        nbrs[e.u].append(e.v)
        nbrs[e.v].append(e.u)
    indptr = np.zeros(instance.n + 1, dtype=np.int64)
    flat = []
    for i, lst in enumerate(nbrs):
        lst.sort()
        flat.extend(lst)
        indptr[i + 1] = len(flat)
    return indptr, np.array(flat, dtype=np.int64)


def cmd_verify(args):
    mismatches = 0
    checked = 0
    for s in range(args.count):
        inst = gen_random(args.size, args.degree, args.cost_max, seed=args.seed + s)
        if args.degree >= 5 and inst.max_degree() <= 4:
            continue
        report = solver.solve(inst, split_mode=args.split_mode, seed=args.seed)
        hk = oracle.held_karp(inst)
        checked += 1
        agree = (
            (report.tour is None and hk is None)
            or (report.tour is not None and hk is not None and report.tour.total_cost == hk[0])
        )
        if not agree:
            mismatches += 1
            got = report.tour.total_cost if report.tour else None
            want = hk[0] if hk else None
            print(f"verify_mismatch seed={args.seed + s} solver={got} oracle={want}")
    print(f"verify checked={checked} mismatches={mismatches}")
    return EXIT_MISMATCH if mismatches else 0


# -- entry point ------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degree", type=int, default=None, choices=range(3, 8))
    p.add_argument("--json", action="store_true")
    p.add_argument("--split-mode", choices=("exhaustive", "sample"), default="exhaustive")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bdtsp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("instance")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--threshold", type=int, default=None,
                   help="single decision run: find a tour cheaper than this (input units)")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("reduce", help="print the reduction trace for an assignment")
    p.add_argument("instance")
    p.add_argument("--assign", default="", help="comma list EDGE:force|remove (1-based ids)")
    _add_common(p)
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("estimate", help="solve and print the query-cost model report")
    p.add_argument("instance")
    p.add_argument("--delta", type=float, default=1 / 3)
    _add_common(p)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("bench", help="tree-size sweep, or kernel backend comparison")
    p.add_argument("--sizes", default="10,12,14,16")
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--cost-max", type=int, default=64)
    p.add_argument("--kernels", action="store_true", help="compare numba vs numpy kernels")
    _add_common(p)
    p.set_defaults(fn=cmd_bench, degree=3)

    p = sub.add_parser("verify", help="cross-check solver vs oracle on a seeded corpus")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--cost-max", type=int, default=64)
    _add_common(p)
    p.set_defaults(fn=cmd_verify, degree=3)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
