"""Seeded Monte-Carlo equivalence campaigns and analytic cost sweeps."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cost_model
from .fast_correlation import compute_kernel
from .sensing import derive_seed, make_instance, make_operator
from .solvers import RankDeficientError, SolveConfig, LSMethod, solve

OMP_BENCH_HEADER = ("kind", "N", "M", "t", "relative_cost")
COSAMP_BENCH_HEADER = ("kind", "N", "K", "t", "relative_cost")


@dataclass
class TrialOutcome:
    index: int
    seed: int
    identical: bool
    deviation: float
    recovered: dict
    selections: dict = field(repr=False, default_factory=dict)


@dataclass
class EquivalenceSummary:
    trials: int
    mismatches: int
    mean_deviation: float
    max_deviation: float
    recovery_counts: dict
    mismatched_trials: list
    outcomes: list = field(repr=False, default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def _recovered(result, inst, tol=1e-8):
    if set(result.support) != set(inst.support.tolist()):
        return False
    ref = np.linalg.norm(inst.x_true)
    if ref == 0:
        return np.linalg.norm(result.x_hat) == 0
    return np.linalg.norm(result.x_hat - inst.x_true) / ref <= tol


def run_trial(args):
    """One trial: the same instance solved in every requested mode."""
    (index, base_seed, kind, n, m, k, noise, solver, modes, structured) = args
    seed = derive_seed(base_seed, index)
    op = make_operator(kind, n, m, seed=seed)
    inst = make_instance(op, k, noise, seed=derive_seed(seed, 1))
    kernel = compute_kernel(op) if any(md != "conventional" for md in modes) else None
    ls = LSMethod.INCREMENTAL_QR if solver == "omp" else LSMethod.NORMAL_EQUATIONS
    results = {}
    for mode in modes:
        cfg = SolveConfig(correlation_mode=mode, ls_method=ls,
                          record_correlations=True, structured=structured)
        try:
            results[mode] = solve(solver, op, inst.y, k=k, config=cfg, kernel=kernel)
        except RankDeficientError as exc:
            results[mode] = exc.result
    ref = results[modes[0]]
    identical = all(r.selections == ref.selections for r in results.values())
    deviation = 0.0
    for mode in modes[1:]:
        other = results[mode]
        if len(other.correlations) != len(ref.correlations):
            identical = False
        for a, b in zip(other.correlations, ref.correlations):
            nb = np.linalg.norm(b)
            if nb > 0:
                deviation = max(deviation, float(np.linalg.norm(a - b) / nb))
            elif np.linalg.norm(a) > 0:
                deviation = float("inf")
    return TrialOutcome(index, seed, identical, deviation,
                        {md: _recovered(r, inst) for md, r in results.items()},
                        {md: r.selections for md, r in results.items()})


def run_equivalence(kind="fourier", n=256, m=64, k=5, trials=100, seed=0,
                    solver="omp", modes=("conventional", "fast"), noise_stddev=0.0,
                    structured=True, workers=1) -> EquivalenceSummary:
    """Solve ``trials`` seeded instances in each mode and compare selections.

    Trial ``i`` uses ``derive_seed(seed, i)``; results are ordered by trial
    index whatever the number of workers.
    """
    modes = tuple(modes)
    if len(modes) < 1:
        raise ValueError("need at least one mode")
    jobs = [(i, seed, kind, n, m, k, noise_stddev, solver, modes, structured)
            for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_trial, jobs, chunksize=16))
    else:
        outcomes = [run_trial(job) for job in jobs]
    devs = [o.deviation for o in outcomes]
    return EquivalenceSummary(
        trials=trials,
        mismatches=sum(not o.identical for o in outcomes),
        mean_deviation=float(np.mean(devs)) if devs else 0.0,
        max_deviation=float(np.max(devs)) if devs else 0.0,
        recovery_counts={md: sum(o.recovered[md] for o in outcomes) for md in modes},
        mismatched_trials=[o.index for o in outcomes if not o.identical],
        outcomes=outcomes,
    )


def omp_bench_rows(kinds, ns, ms, t_max=13):
    """Relative correlation cost of fast over conventional OMP for t = 1..t_max."""
    rows = []
    for kind in kinds:
        for n in ns:
            for m in ms:
                if m > n:
                    continue
                for t in range(1, t_max + 1):
                    rows.append((kind, n, m, t, cost_model.omp_relative_cost(kind, n, t)))
    return rows


def cosamp_bench_rows(kinds, ns, ks, t_max=13):
    rows = []
    for kind in kinds:
        for n in ns:
            conv = cost_model.conventional_iteration_flops(kind, n)
            for k in ks:
                for t in range(1, t_max + 1):
                    fast = cost_model.cosamp_fast_iteration_flops(kind, n, k, t)
                    rows.append((kind, n, k, t, fast / conv))
    return rows


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([*row[:-1], repr(float(row[-1]))])
    return buf.getvalue()
