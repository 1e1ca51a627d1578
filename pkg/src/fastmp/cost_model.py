"""Flop accounting for the correlation step of matching pursuit solvers.

Convention: one complex multiplication is 6 flops, one complex addition is
2 flops, real operations are 1 flop each. Only the correlation step enters
the per-iteration comparison; everything else (least squares,
identification, residual updates, one-time kernel setup) is tracked in
separate counters and never mixed into it.

Counted flops on the fast path differ slightly from the analytic
``6N`` / ``2N`` per atom:

* Fourier: the kernel is conjugate symmetric, so ``x c[j]`` and
  ``x c[N-j]`` share their four real products. An atom costs ``6N - 4``.
* Hadamard: the kernel takes values ``l / N`` with integer ``l``. We scale
  ``x`` once per distinct nonzero ``|l|`` (2 real multiplications each) and
  then do ``N`` complex additions, so an atom costs
  ``2N + 2 * n_levels``. With ``M`` rows there are at most ``M`` such levels,
  so the excess stays a few percent once ``N >> M``.

The unitary's ``1/sqrt(N)`` normalisation is counted in ``scaling_mults``
and excluded from ``flops``, matching the unnormalised transform counts
``5N log2 N`` (radix-2 FFT) and ``N log2 N`` additions (FHT).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

COMPLEX_MULT_FLOPS = 6
COMPLEX_ADD_FLOPS = 2

FOURIER = "fourier"
HADAMARD = "hadamard"
KINDS = (FOURIER, HADAMARD)

COST_CSV_HEADER = ("t", "mode", "analytic_flops", "counted_flops",
                   "relative_vs_conventional")


def log2_exact(n: int) -> int:
    """Return log2(n) for a power of two, raise ValueError otherwise."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


def _check_kind(kind: str) -> str:
    kind = str(kind).lower()
    if kind not in KINDS:
        raise ValueError(f"unknown transform kind {kind!r}")
    return kind


@dataclass
class FlopCounter:
    """Tally of arithmetic executed by an instrumented code path.

    ``scaling_mults`` holds the real multiplications spent on the
    1/sqrt(N) normalisation of the unitary transforms. They are kept out of
    ``flops`` because the transform cost being compared (N log N butterflies)
    does not include them.
    """

    complex_mults: int = 0
    complex_adds: int = 0
    real_mults: int = 0
    real_adds: int = 0
    scaling_mults: int = 0

    @property
    def flops(self) -> int:
        return (COMPLEX_MULT_FLOPS * self.complex_mults
                + COMPLEX_ADD_FLOPS * self.complex_adds
                + self.real_mults + self.real_adds)

    def add(self, other: "FlopCounter") -> None:
        self.complex_mults += other.complex_mults
        self.complex_adds += other.complex_adds
        self.real_mults += other.real_mults
        self.real_adds += other.real_adds
        self.scaling_mults += other.scaling_mults

    def reset(self) -> None:
        self.complex_mults = self.complex_adds = 0
        self.real_mults = self.real_adds = self.scaling_mults = 0


def conventional_iteration_flops(kind: str, n: int) -> int:
    """Flops of one correlation step done by a full fast transform.

    Fourier: 5 N log2 N (radix-2 FFT). Hadamard: N log2 N complex additions,
    i.e. 2 N log2 N flops.
    """
    kind = _check_kind(kind)
    lg = log2_exact(n)
    if kind == FOURIER:
        return 5 * n * lg
    return 2 * n * lg


def kernel_update_flops(kind: str, n: int, atoms: int) -> int:
    """Flops of subtracting ``atoms`` scaled, permuted kernels from h0."""
    kind = _check_kind(kind)
    if atoms < 0:
        raise ValueError("atoms must be non-negative")
    per_atom = 6 * n if kind == FOURIER else 2 * n
    return per_atom * atoms


def fast_iteration_flops(kind: str, n: int, t: int) -> int:
    """Correlation flops of fast OMP at iteration ``t`` (1-based).

    The first iteration is one transform; afterwards the update subtracts
    t - 1 kernels.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if t == 1:
        return conventional_iteration_flops(kind, n)
    return kernel_update_flops(kind, n, t - 1)


def adaptive_iteration_flops(kind: str, n: int, t: int) -> int:
    return min(fast_iteration_flops(kind, n, t),
               conventional_iteration_flops(kind, n))


def crossover_iteration(kind: str, n: int) -> int:
    """Largest t at which the fast update is no more expensive than a transform.

    Adaptive solvers use the kernel update for t <= t_star and fall back
    to the transform afterwards.
    """
    kind = _check_kind(kind)
    lg = log2_exact(n)
    if kind == FOURIER:
        # 6N(t-1) <= 5N lg  <=>  t - 1 <= 5 lg / 6
        return (5 * lg) // 6 + 1
    return lg + 1


def cosamp_fast_iteration_flops(kind: str, n: int, k: int, t: int) -> int:
    if t < 1:
        raise ValueError("t must be >= 1")
    if t == 1:
        return conventional_iteration_flops(kind, n)
    return kernel_update_flops(kind, n, k)


def cosamp_relative_cost(n: int, k: int, kind: str = FOURIER) -> float:
    """Fast over conventional CoSaMP correlation cost for iterations t > 1.

    For Fourier this is 6K / (5 log2 N); for Hadamard K / log2 N.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    return kernel_update_flops(kind, n, k) / conventional_iteration_flops(kind, n)


def omp_relative_cost(kind: str, n: int, t: int) -> float:
    return fast_iteration_flops(kind, n, t) / conventional_iteration_flops(kind, n)


@dataclass
class CostRow:
    t: int
    mode: str
    analytic_flops: int
    counted_flops: int
    conventional_flops: int
    other_flops: int = 0

    @property
    def relative_vs_conventional(self) -> float:
        if self.conventional_flops == 0:
            return float("nan")
        return self.analytic_flops / self.conventional_flops


@dataclass
class CostReport:
    """Per-iteration correlation cost of one solve.

    ``setup_flops`` is the one-time kernel precomputation (two transforms per
    row selection) and is reported as its own line item. ``dense_fallback``
    flags Fourier sizes that are not powers of two, for which the analytic
    formulas do not apply and analytic values are the dense-DFT counts.
    """

    kind: str
    n: int
    rows: list[CostRow] = field(default_factory=list)
    setup_flops: int = 0
    dense_fallback: bool = False

    def append(self, row: CostRow) -> None:
        if self.rows and row.t <= self.rows[-1].t:
            raise ValueError("cost rows must be ordered by t")
        if row.counted_flops < 0:
            raise ValueError("counted flops must be non-negative")
        self.rows.append(row)

    @property
    def modes(self) -> list[str]:
        return [row.mode for row in self.rows]

    @property
    def total_counted(self) -> int:
        return sum(row.counted_flops for row in self.rows)

    @property
    def total_analytic(self) -> int:
        return sum(row.analytic_flops for row in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COST_CSV_HEADER)
        for row in self.rows:
            writer.writerow([row.t, row.mode, row.analytic_flops,
                             row.counted_flops,
                             repr(row.relative_vs_conventional)])
        return buf.getvalue()


def read_cost_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COST_CSV_HEADER:
        raise ValueError(f"unexpected cost CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        out.append({
            "t": int(rec["t"]),
            "mode": rec["mode"],
            "analytic_flops": int(rec["analytic_flops"]),
            "counted_flops": int(rec["counted_flops"]),
            "relative_vs_conventional": float(rec["relative_vs_conventional"]),
        })
    return out
