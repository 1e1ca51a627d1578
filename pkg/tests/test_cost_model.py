import numpy as np
import pytest

from fastmp.cost_model import (CostReport, CostRow, FlopCounter, adaptive_iteration_flops,
                               conventional_iteration_flops, cosamp_relative_cost,
                               crossover_iteration, fast_iteration_flops,
                               kernel_update_flops, read_cost_csv)
from fastmp.sensing import make_instance, make_operator
from fastmp.solvers import SolveConfig, omp_solve


def test_conventional_examples():
    assert conventional_iteration_flops("fourier", 4096) == 245760
    assert conventional_iteration_flops("hadamard", 1024) == 20480
    assert conventional_iteration_flops("fourier", 2) == 10


def test_fast_examples():
    assert fast_iteration_flops("fourier", 4096, 11) == 245760
    assert fast_iteration_flops("hadamard", 1024, 3) == 4096
    assert fast_iteration_flops("hadamard", 1024, 3) / conventional_iteration_flops("hadamard", 1024) == 0.2
    for kind in ("fourier", "hadamard"):
        assert fast_iteration_flops(kind, 512, 1) == conventional_iteration_flops(kind, 512)


def test_table_cells():
    for lg in range(6, 14):
        n = 2 ** lg
        for t in range(1, 14):
            assert conventional_iteration_flops("fourier", n) == 5 * n * lg
            assert conventional_iteration_flops("hadamard", n) == 2 * n * lg
            assert fast_iteration_flops("fourier", n, t) == (5 * n * lg if t == 1 else 6 * n * (t - 1))
            assert fast_iteration_flops("hadamard", n, t) == (2 * n * lg if t == 1 else 2 * n * (t - 1))


def brute_force_crossover(kind, n):
    conv = conventional_iteration_flops(kind, n)
    t = 1
    while fast_iteration_flops(kind, n, t + 1) <= conv:
        t += 1
    return t


def test_crossover_examples():
    assert crossover_iteration("fourier", 4096) == 11
    assert crossover_iteration("hadamard", 1024) == 11
    assert crossover_iteration("fourier", 2) == 1


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
def test_crossover_matches_search(kind):
    for lg in range(1, 21):
        assert crossover_iteration(kind, 2 ** lg) == brute_force_crossover(kind, 2 ** lg)


def test_adaptive_is_minimum():
    for kind in ("fourier", "hadamard"):
        for n in (64, 4096):
            t_star = crossover_iteration(kind, n)
            for t in range(1, 30):
                a = adaptive_iteration_flops(kind, n, t)
                assert a == min(fast_iteration_flops(kind, n, t),
                                conventional_iteration_flops(kind, n))
                assert (a == fast_iteration_flops(kind, n, t)) == (t <= t_star) or \
                    fast_iteration_flops(kind, n, t) == conventional_iteration_flops(kind, n)


def test_cosamp_relative_cost():
    assert cosamp_relative_cost(8192, 4) == 24 / 65
    assert 0.36 <= cosamp_relative_cost(8192, 4) <= 0.38
    assert cosamp_relative_cost(8192, 0) == 0
    assert cosamp_relative_cost(1024, 10) == pytest.approx(1.2, abs=1e-15)
    assert cosamp_relative_cost(1024, 5, kind="hadamard") == 0.5


def test_invalid_inputs():
    with pytest.raises(ValueError):
        conventional_iteration_flops("fourier", 12)
    with pytest.raises(ValueError):
        fast_iteration_flops("fourier", 8, 0)
    with pytest.raises(ValueError):
        kernel_update_flops("dct", 8, 1)


def test_counted_conventional_hadamard_iteration():
    op = make_operator("hadamard", 64, 16, seed=0)
    inst = make_instance(op, 4, 0.1, seed=1)
    res = omp_solve(op, inst.y, SolveConfig(max_iterations=3, residual_tolerance=0.0))
    for row in res.costs.rows:
        assert row.mode == "conventional"
        assert row.counted_flops == 768 == row.analytic_flops


def test_counted_fast_hadamard_iteration():
    n = 1024
    op = make_operator("hadamard", n, 64, seed=0)
    inst = make_instance(op, 4, 0.1, seed=1)
    res = omp_solve(op, inst.y, SolveConfig(max_iterations=3, residual_tolerance=0.0,
                                            correlation_mode="fast"))
    first, second = res.costs.rows[:2]
    assert first.counted_flops == conventional_iteration_flops("hadamard", n)
    assert abs(second.counted_flops - 2 * n) <= 0.1 * 2 * n


def test_setup_cost_reported_separately():
    op = make_operator("fourier", 256, 64, seed=0)
    inst = make_instance(op, 3, seed=1)
    res = omp_solve(op, inst.y, SolveConfig(correlation_mode="fast"), k=3)
    assert res.costs.setup_flops == 2 * 5 * 256 * 8
    assert res.costs.rows[0].counted_flops == 5 * 256 * 8


def test_flop_counter_arithmetic():
    c = FlopCounter(complex_mults=2, complex_adds=3, real_mults=4, real_adds=5, scaling_mults=100)
    assert c.flops == 12 + 6 + 9
    d = FlopCounter()
    d.add(c)
    assert d.flops == c.flops
    d.reset()
    assert d.flops == 0 and d.scaling_mults == 0


def test_cost_report_csv_round_trip():
    rep = CostReport("fourier", 64)
    rep.append(CostRow(1, "fast", 1920, 1920, 1920))
    rep.append(CostRow(2, "fast", 384, 380, 1920))
    text = rep.to_csv()
    assert text.splitlines()[0] == "t,mode,analytic_flops,counted_flops,relative_vs_conventional"
    rows = read_cost_csv(text)
    assert rows[1] == {"t": 2, "mode": "fast", "analytic_flops": 384, "counted_flops": 380,
                       "relative_vs_conventional": 0.2}
    with pytest.raises(ValueError):
        rep.append(CostRow(2, "fast", 1, 1, 1))
    with pytest.raises(ValueError):
        rep.append(CostRow(3, "fast", 1, -1, 1))
    with pytest.raises(ValueError):
        read_cost_csv("a,b\n1,2\n")
    assert np.isnan(CostRow(1, "x", 1, 1, 0).relative_vs_conventional)
