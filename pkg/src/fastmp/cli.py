"""Command-line front end: ``fastmp {verify,solve,bench,equiv}``.

Options can also come from a flat ``key=value`` file given with
``--config``; command-line flags take precedence over it.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .cost_model import KINDS
from .sensing import format_instance, make_instance, make_operator
from .solvers import CorrelationMode, RankDeficientError, SolveConfig, LSMethod, format_result, solve
from .verification import corrupted_factory, run_verification
from .structured_unitary import StructuredUnitary

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "kind": "fourier", "n": "256", "m": "64", "k": "5", "trials": "100",
    "seed": "0", "solver": "omp", "mode": "conventional,fast", "tmax": "13",
    "out": None, "noise": "0", "workers": "1", "max_n": "64",
}

BENCH_EPILOG = """\
CSV schema
  OMP:    kind,N,M,t,relative_cost
  CoSaMP: kind,N,K,t,relative_cost
relative_cost is fast-update flops over transform flops at iteration t,
taken from the analytic model. --n, --m, --k and --kind accept
comma-separated lists.
"""

SOLVE_EPILOG = """\
Output files (in --out, default the current directory)
  instance.txt       header 'N M K seed kind', Omega (1-based), then N lines
                     of x_true and M lines of y, each 're im'
  result_<mode>.txt  header 'N M iterations residual_norm solver mode',
                     support (1-based), then one 're im' line per coefficient
  cost_<mode>.csv    t,mode,analytic_flops,counted_flops,relative_vs_conventional
"""


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Parse a flat ``key=value`` file; '#' starts a comment."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        cfg[key] = value
    return cfg


def _resolve(args) -> dict:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = str(value)
    return merged


def _int(opts, key, lo=None):
    try:
        value = int(opts[key])
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be an integer, got {opts[key]!r}") from None
    if lo is not None and value < lo:
        raise UsageError(f"{key} must be >= {lo}")
    return value


def _int_list(opts, key, lo=None):
    try:
        values = [int(v) for v in str(opts[key]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{key} must be a comma-separated list of integers") from None
    if not values or (lo is not None and min(values) < lo):
        raise UsageError(f"{key} must hold integers >= {lo}")
    return values


def _kinds(opts):
    kinds = [v.strip().lower() for v in opts["kind"].split(",") if v.strip()]
    for kind in kinds:
        if kind not in KINDS:
            raise UsageError(f"unknown kind {kind!r} (choose from {', '.join(KINDS)})")
    return kinds


def _modes(opts):
    modes = [v.strip().lower() for v in opts["mode"].split(",") if v.strip()]
    valid = [m.value for m in CorrelationMode]
    for mode in modes:
        if mode not in valid:
            raise UsageError(f"unknown mode {mode!r} (choose from {', '.join(valid)})")
    return modes


def _solver(opts):
    solver = opts["solver"].lower()
    if solver not in ("omp", "cosamp"):
        raise UsageError("solver must be omp or cosamp")
    return solver


def cmd_verify(max_n: int, corrupt: bool = False, out=None) -> int:
    out = out or sys.stdout
    factory = corrupted_factory if corrupt else StructuredUnitary
    report = run_verification(max_n, unitary_factory=factory)
    for check in report.checks:
        print(f"{'PASS' if check.ok else 'FAIL'}  {check.name}: {check.detail}", file=out)
    print(f"{len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed",
          file=out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_solve(opts, out=None) -> int:
    out = out or sys.stdout
    kind = _kinds(opts)[0]
    n, m, k = _int(opts, "n", 1), _int(opts, "m", 1), _int(opts, "k", 0)
    seed = _int(opts, "seed")
    noise = float(opts["noise"])
    solver = _solver(opts)
    modes = _modes(opts)
    outdir = Path(opts["out"] or ".")
    try:
        op = make_operator(kind, n, m, seed=seed)
        inst = make_instance(op, k, noise, seed=seed + 1)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "instance.txt").write_text(format_instance(inst))
    ls = LSMethod.INCREMENTAL_QR if solver == "omp" else LSMethod.NORMAL_EQUATIONS
    supports = []
    status = EXIT_OK
    for mode in modes:
        cfg = SolveConfig(correlation_mode=mode, ls_method=ls)
        try:
            result = solve(solver, op, inst.y, k=k, config=cfg)
        except RankDeficientError as exc:
            result = exc.result
            print(f"{mode}: stopped early, {exc}", file=out)
            status = EXIT_FAIL
        (outdir / f"result_{mode}.txt").write_text(format_result(result, op))
        (outdir / f"cost_{mode}.csv").write_text(result.costs.to_csv())
        supports.append(list(result.support))
        print(f"{mode}: support={[j + 1 for j in result.support]} "
              f"residual_norm={result.residual_norm:.6g} "
              f"iterations={result.iterations_run}", file=out)
    if any(s != supports[0] for s in supports):
        print("modes disagree on the recovered support", file=out)
        status = EXIT_FAIL
    return status


def cmd_bench(opts, out=None) -> int:
    out = out or sys.stdout
    kinds = _kinds(opts)
    ns = _int_list(opts, "n", 2)
    tmax = _int(opts, "tmax", 1)
    for n in ns:
        if n & (n - 1):
            raise UsageError(f"bench sizes must be powers of two, got {n}")
    if _solver(opts) == "omp":
        text = experiments.rows_to_csv(
            experiments.OMP_BENCH_HEADER,
            experiments.omp_bench_rows(kinds, ns, _int_list(opts, "m", 1), tmax))
    else:
        text = experiments.rows_to_csv(
            experiments.COSAMP_BENCH_HEADER,
            experiments.cosamp_bench_rows(kinds, ns, _int_list(opts, "k", 0), tmax))
    if opts["out"]:
        Path(opts["out"]).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_equiv(opts, out=None) -> int:
    out = out or sys.stdout
    kind = _kinds(opts)[0]
    modes = _modes(opts)
    if len(modes) < 2:
        raise UsageError("equiv needs at least two modes")
    n, m, k = _int(opts, "n", 1), _int(opts, "m", 1), _int(opts, "k", 0)
    if not k < m <= n:
        raise UsageError("need K < M <= N")
    summary = experiments.run_equivalence(
        kind=kind, n=n, m=m, k=k, trials=_int(opts, "trials", 1),
        seed=_int(opts, "seed"), solver=_solver(opts), modes=modes,
        noise_stddev=float(opts["noise"]), workers=_int(opts, "workers", 1))
    print(f"trials={summary.trials} mismatches={summary.mismatches} "
          f"mean_deviation={summary.mean_deviation:.3e} "
          f"max_deviation={summary.max_deviation:.3e}", file=out)
    for mode, count in summary.recovery_counts.items():
        print(f"exact_recoveries[{mode}]={count}", file=out)
    if summary.mismatched_trials:
        print(f"mismatched trials: {summary.mismatched_trials[:20]}", file=out)
    if opts["out"]:
        lines = ["trial,seed,identical,deviation"]
        lines += [f"{o.index},{o.seed},{int(o.identical)},{o.deviation!r}"
                  for o in summary.outcomes]
        Path(opts["out"]).write_text("\n".join(lines) + "\n")
    return EXIT_OK if summary.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastmp",
        description="Matching pursuit over partial Fourier/Hadamard operators "
                    "with kernel-update correlation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="key=value file; flags override it")
        flags = {
            "kind": dict(help="fourier or hadamard"),
            "n": dict(help="signal length N"),
            "m": dict(help="number of measurements M"),
            "k": dict(help="sparsity K"),
            "trials": dict(help="number of Monte-Carlo trials"),
            "seed": dict(help="base RNG seed"),
            "solver": dict(help="omp or cosamp"),
            "mode": dict(help="comma-separated: conventional, fast, adaptive"),
            "tmax": dict(help="last iteration in cost sweeps (default 13)"),
            "out": dict(help="output path"),
            "noise": dict(help="noise standard deviation per entry"),
            "workers": dict(help="worker processes"),
        }
        for name in names:
            p.add_argument(f"--{name}", default=None, **flags[name])

    p = sub.add_parser("verify", help="exhaustive constraint and permutation checks")
    p.add_argument("--max-n", dest="max_n", default=None,
                   help="largest power-of-two size to check (default 64)")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    common(p)

    p = sub.add_parser("solve", help="solve one generated instance",
                       epilog=SOLVE_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p, "kind", "n", "m", "k", "seed", "solver", "mode", "noise", "out")

    p = sub.add_parser("bench", help="analytic relative-cost sweep as CSV",
                       epilog=BENCH_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p, "kind", "n", "m", "k", "solver", "tmax", "out")

    p = sub.add_parser("equiv", help="Monte-Carlo fast/conventional equivalence")
    common(p, "kind", "n", "m", "k", "trials", "seed", "solver", "mode", "noise",
           "out", "workers")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        if args.command == "verify":
            return cmd_verify(_int(opts, "max_n", 1), corrupt=args.corrupt)
        if args.command == "solve":
            return cmd_solve(opts)
        if args.command == "bench":
            return cmd_bench(opts)
        return cmd_equiv(opts)
    except (UsageError, ValueError) as exc:
        print(f"fastmp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
