import math

import pytest

from bdtsp.errors import InputError, UnsupportedDegreeError
from bdtsp.quantum_cost import (
    backtracking_calls,
    ceil_log2,
    exponent_table,
    tsp_estimate,
)
from bdtsp.solver import SearchStats

from conftest import build


def test_backtracking_calls_minimal():
    assert backtracking_calls(1, 2, 0.5) == 3  # ceil(2^{3/2})


def test_backtracking_calls_frozen_value():
    # independent high-precision evaluation of
    # sqrt(1e6) * 100^1.5 * log2(100) * log2(3) = 10530262.9209770800...
    assert backtracking_calls(10 ** 6, 100, 1 / 3) == 10530263


def test_backtracking_calls_sqrt_scaling():
    # quadrupling T doubles the prediction exactly at exact-arithmetic points
    base = backtracking_calls(1, 4, 0.25)
    assert base == 32  # 1 * 8 * 2 * 2
    assert backtracking_calls(4, 4, 0.25) == 2 * base


def test_backtracking_calls_monotone():
    prev = 0
    for T in (1, 2, 8, 64, 1024):
        val = backtracking_calls(T, 12, 0.2)
        assert val >= prev
        prev = val
    prev = 0
    for v in (2, 3, 8, 30):
        val = backtracking_calls(64, v, 0.2)
        assert val >= prev
        prev = val
    prev = 0
    for delta in (0.5, 0.25, 0.1, 0.01):
        val = backtracking_calls(64, 12, delta)
        assert val >= prev
        prev = val


def test_backtracking_calls_domain():
    with pytest.raises(InputError):
        backtracking_calls(0, 2, 0.5)
    with pytest.raises(InputError):
        backtracking_calls(1, 1, 0.5)
    with pytest.raises(InputError):
        backtracking_calls(1, 2, 1.5)


def test_ceil_log2():
    assert ceil_log2(1) == 0
    assert ceil_log2(2) == 1
    assert ceil_log2(3) == 2
    assert ceil_log2(1001) == 10


def test_exponent_table_values():
    want = {3: 1.110, 4: 1.301, 5: 1.680, 6: 1.680, 7: 2.222}
    for degree, q in want.items():
        entry = exponent_table(degree)
        assert entry.quantum_base == q
    assert exponent_table(3).classical_base == 1.232
    assert exponent_table(4).classical_base == 1.692
    assert exponent_table(6).classical_base is None
    assert exponent_table(7).speedup is False
    with pytest.raises(UnsupportedDegreeError):
        exponent_table(8)


def test_exponent_quadratic_structure():
    # quantum^2 tracks classical within 0.2% for degrees 3 and 4
    e3 = exponent_table(3)
    assert abs(e3.quantum_base ** 2 - e3.classical_base) / e3.classical_base <= 0.002
    under_c, under_q = e3.underlying
    assert abs(under_c - 2 ** 0.3) < 1e-12 and abs(under_q - 2 ** 0.15) < 1e-12
    assert abs(e3.quantum_base ** 2 - under_c) / under_c <= 0.002
    e4 = exponent_table(4)
    assert abs(e4.quantum_base ** 2 - e4.classical_base) / e4.classical_base <= 0.002


def test_tsp_estimate_degree3_no_amplification():
    inst = build(5, [(i, (i + 1) % 5, 2) for i in range(5)], 3, scale=2)
    stats = SearchStats(tree_nodes=7)
    rep = tsp_estimate(stats, inst, delta_total=1 / 3)
    assert rep.amplification == 1.0
    assert rep.f56 == 0 and rep.f7 == 0
    assert rep.variables == inst.m
    assert rep.per_run_delta == pytest.approx((1 / 3) / rep.repetitions)
    assert rep.total_queries == math.ceil(rep.repetitions * rep.backtracking_calls)


def test_tsp_estimate_f2_amplification():
    # degree-5 star pair: two hubs of degree 5
    edges = [(0, i, 1) for i in range(1, 6)]
    edges += [(6, i, 1) for i in range(1, 6)]
    edges += [(1, 2, 1), (3, 4, 1)]
    inst = build(7, edges, 5, scale=2)
    assert sum(1 for v in range(7) if inst.degree(v) == 5) == 2
    rep = tsp_estimate(SearchStats(tree_nodes=4), inst)
    assert rep.f56 == 2 and rep.f7 == 0
    assert rep.amplification == pytest.approx(10 / 6)


def test_tsp_estimate_repetitions_from_upper_bound():
    # triangle with costs 400, 200, 100: per-vertex maxima 400+400+200 = 1000
    inst = build(3, [(0, 1, 400), (0, 2, 200), (1, 2, 100)], 3, scale=2)
    rep = tsp_estimate(SearchStats(tree_nodes=1), inst)
    assert rep.upper_bound == 1000
    assert rep.repetitions == 12  # 2 + ceil(log2(1001))
