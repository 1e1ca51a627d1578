"""OMP and CoSaMP with conventional, fast, or adaptive correlation steps.

All three correlation modes run the same greedy algorithm; only the way the
correlation vector ``Phi^H r`` is produced differs. Identification breaks
near-ties (magnitudes within ``tie_tolerance * max|h0|``) toward the
smallest index, so the modes select identical supports despite rounding
differences in the correlation vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from . import cost_model
from .cost_model import CostReport, CostRow, FlopCounter
from .fast_correlation import CorrelationKernel, compute_kernel, fast_update
from .sensing import SensingOperator

RANK_TOLERANCE = 1e-10
# Forming the Gram matrix squares the conditioning, so a Cholesky pivot of an
# exactly dependent column only drops to about sqrt(eps) of the column norm.
GRAM_RANK_TOLERANCE = 1e-7


class CorrelationMode(str, Enum):
    CONVENTIONAL = "conventional"
    FAST = "fast"
    ADAPTIVE = "adaptive"


class LSMethod(str, Enum):
    INCREMENTAL_QR = "incremental_qr"
    NORMAL_EQUATIONS = "normal_equations"


@dataclass(frozen=True)
class SolveConfig:
    """Halting and computation options shared by the solvers.

    ``max_iterations=None`` means K for OMP when K is known (else M) and 2K
    for CoSaMP. ``residual_tolerance=None`` means ``1e-9 * ||y||``.
    """

    max_iterations: int | None = None
    residual_tolerance: float | None = None
    correlation_mode: CorrelationMode = CorrelationMode.CONVENTIONAL
    ls_method: LSMethod = LSMethod.INCREMENTAL_QR
    structured: bool = True
    record_correlations: bool = False
    tie_tolerance: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "correlation_mode",
                           CorrelationMode(self.correlation_mode))
        object.__setattr__(self, "ls_method", LSMethod(self.ls_method))
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.residual_tolerance is not None and self.residual_tolerance < 0:
            raise ValueError("residual_tolerance must be >= 0")


@dataclass
class RecoveryResult:
    """Output of a solve.

    ``selections`` is the per-iteration choice: the selected index for OMP,
    and ``(candidates, pruned_support)`` for CoSaMP. ``correlations`` holds
    each iteration's correlation vector when recording was requested.
    """

    x_hat: np.ndarray
    support: list
    iterations_run: int
    costs: CostReport
    residual_norm: float
    selections: list = field(default_factory=list)
    correlations: list = field(default_factory=list)
    solver: str = "omp"
    mode: str = CorrelationMode.CONVENTIONAL.value
    status: str = "ok"


class RankDeficientError(np.linalg.LinAlgError):
    """Selected columns are numerically dependent; ``result`` holds the partial solve."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def _matvec_flops(rows, cols):
    if rows == 0 or cols == 0:
        return 0
    return (cost_model.COMPLEX_MULT_FLOPS * rows * cols
            + cost_model.COMPLEX_ADD_FLOPS * rows * (cols - 1))


class IncrementalQR:
    """Thin QR of a growing column set, with ``Q^H y`` kept up to date.

    Columns are orthogonalised by two passes of classical Gram-Schmidt.
    """

    def __init__(self, y, capacity, rank_tol=RANK_TOLERANCE):
        y = np.asarray(y, dtype=complex)
        self.m = len(y)
        self.y = y
        self.rank_tol = rank_tol
        self.q = np.zeros((self.m, capacity), dtype=complex)
        self.r = np.zeros((capacity, capacity), dtype=complex)
        self.qty = np.zeros(capacity, dtype=complex)
        self.size = 0
        self.flops = 0

    def append(self, col):
        col = np.asarray(col, dtype=complex)
        t = self.size
        if t == self.q.shape[1]:
            self._grow()
        q = self.q[:, :t]
        w = col.copy()
        proj = np.zeros(t, dtype=complex)
        for _ in range(2):
            coef = q.conj().T @ w
            w -= q @ coef
            proj += coef
        self.flops += 4 * _matvec_flops(self.m, t)
        norm0 = np.linalg.norm(col)
        nrm = np.linalg.norm(w)
        if norm0 == 0 or nrm <= self.rank_tol * norm0:
            raise RankDeficientError(
                f"column {t} is numerically dependent on the selected columns "
                f"(relative residual {nrm / norm0 if norm0 else 0.0:.3g})")
        self.q[:, t] = w / nrm
        self.r[:t, t] = proj
        self.r[t, t] = nrm
        self.qty[t] = np.vdot(self.q[:, t], self.y)
        self.flops += _matvec_flops(1, self.m) + 8 * self.m
        self.size = t + 1

    def _grow(self):
        cap = max(1, 2 * self.q.shape[1])
        q = np.zeros((self.m, cap), dtype=complex)
        r = np.zeros((cap, cap), dtype=complex)
        qty = np.zeros(cap, dtype=complex)
        s = self.size
        q[:, :s], r[:s, :s], qty[:s] = self.q[:, :s], self.r[:s, :s], self.qty[:s]
        self.q, self.r, self.qty = q, r, qty

    def solve(self):
        s = self.size
        self.flops += 4 * s * s
        return scipy.linalg.solve_triangular(self.r[:s, :s], self.qty[:s])


def _normal_equations(a, y, rank_tol=GRAM_RANK_TOLERANCE):
    gram = a.conj().T @ a
    rhs = a.conj().T @ y
    try:
        chol = scipy.linalg.cholesky(gram, lower=False)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("normal equations are singular") from exc
    # R[j, j] is the norm of column j after projecting out columns 0..j-1
    col_norms = np.sqrt(np.real(np.diag(gram)))
    ratio = np.abs(np.diag(chol)) / np.where(col_norms > 0, col_norms, 1.0)
    if (col_norms == 0).any() or (ratio <= rank_tol).any():
        raise RankDeficientError("selected columns are numerically dependent")
    z = scipy.linalg.solve_triangular(chol, rhs, trans="C", lower=False)
    return scipy.linalg.solve_triangular(chol, z, lower=False)


def least_squares(op: SensingOperator, support, y, method=LSMethod.NORMAL_EQUATIONS):
    """Coefficients minimising ``||y - Phi[:, support] x||``.

    Raises RankDeficientError when a column's component orthogonal to the
    preceding ones is below 1e-10 of its norm (1e-7 on the normal-equations
    path, whose Cholesky pivots only resolve about sqrt(eps)).
    """
    method = LSMethod(method)
    support = list(support)
    y = np.asarray(y, dtype=complex)
    if not support:
        return np.zeros(0, dtype=complex)
    a = op.columns(support)
    if method is LSMethod.NORMAL_EQUATIONS:
        return _normal_equations(a, y)
    qr = IncrementalQR(y, len(support))
    for j in range(len(support)):
        qr.append(a[:, j])
    return qr.solve()


def ranked_indices(mag, tol=0.0):
    """Indices by decreasing magnitude; runs of values closer than ``tol``
    are treated as ties and ordered by index."""
    mag = np.asarray(mag)
    order = np.argsort(-mag, kind="stable")
    if tol > 0 and len(order) > 1:
        sm = mag[order]
        starts = np.concatenate(([True], (sm[:-1] - sm[1:]) > tol))
        cluster = np.cumsum(starts)
        order = order[np.lexsort((order, cluster))]
    return order


def _argmax_with_ties(mag, tol):
    top = mag.max()
    return int(np.flatnonzero(mag >= top - tol)[0])


class _Correlator:
    """Produces the correlation vector at iteration t in the configured mode."""

    def __init__(self, op, y, cfg, kernel, report):
        self.op = op
        self.mode = cfg.correlation_mode
        self.structured = cfg.structured
        self.report = report
        self.kernel = kernel
        self.h0 = None
        if op.unitary.is_fast:
            self.conventional_flops = cost_model.conventional_iteration_flops(op.kind, op.n)
        else:
            probe = FlopCounter()
            op.unitary.adjoint(np.zeros(op.n), probe)
            self.conventional_flops = probe.flops
        if self.mode is not CorrelationMode.CONVENTIONAL and kernel is None:
            setup = FlopCounter()
            self.kernel = compute_kernel(op, setup)
            report.setup_flops = setup.flops

    def kernel_cost(self, atoms):
        return cost_model.kernel_update_flops(self.op.kind, self.op.n, atoms)

    def use_fast(self, t, atoms):
        if self.mode is CorrelationMode.CONVENTIONAL:
            return False
        if t == 1 or self.mode is CorrelationMode.FAST:
            return True
        return self.kernel_cost(atoms) <= self.conventional_flops

    def correlate(self, t, residual, support, coeffs, counter):
        """Return ``(h, mode_used, analytic_flops)``."""
        if t == 1:
            self.h0 = self.op.apply_adjoint(residual, counter)
            mode = ("conventional" if self.mode is CorrelationMode.CONVENTIONAL
                    else "fast")
            return self.h0.copy(), mode, self.conventional_flops
        if self.use_fast(t, len(support)):
            h = fast_update(self.h0, self.kernel, support, coeffs, counter,
                            structured=self.structured)
            return h, "fast", self.kernel_cost(len(support))
        h = self.op.apply_adjoint(residual, counter)
        return h, "conventional", self.conventional_flops


def _prepare(op, y, cfg):
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.shape != (op.m,):
        raise ValueError(f"dimension mismatch: y has length {len(y)}, expected {op.m}")
    tol = cfg.residual_tolerance
    if tol is None:
        tol = 1e-9 * np.linalg.norm(y)
    report = CostReport(op.kind, op.n, dense_fallback=not op.unitary.is_fast)
    return y, tol, report


def omp_solve(op: SensingOperator, y, config: SolveConfig | None = None,
              k: int | None = None, kernel: CorrelationKernel | None = None
              ) -> RecoveryResult:
    """Orthogonal matching pursuit.

    Parameters
    ----------
    op : SensingOperator
    y : ndarray, shape (M,)
        Measurements.
    config : SolveConfig, optional
    k : int, optional
        Sparsity, used as the default iteration budget.
    kernel : CorrelationKernel, optional
        Precomputed kernel for ``op``; built on demand otherwise.

    Returns
    -------
    RecoveryResult
        ``support`` lists the selected indices in selection order.

    Raises
    ------
    RankDeficientError
        If a newly selected column is numerically dependent on the earlier
        ones; the partial result is attached to the exception.
    """
    cfg = config or SolveConfig()
    y, res_tol, report = _prepare(op, y, cfg)
    if cfg.max_iterations is not None:
        max_it = cfg.max_iterations
    else:
        max_it = op.m if k is None else k
    corr = _Correlator(op, y, cfg, kernel, report)

    support: list[int] = []
    coeffs = np.zeros(0, dtype=complex)
    cols = np.zeros((op.m, max(max_it, 1)), dtype=complex)
    qr = (IncrementalQR(y, max(max_it, 1))
          if cfg.ls_method is LSMethod.INCREMENTAL_QR else None)
    r = y.copy()
    res_norm = float(np.linalg.norm(r))
    result = RecoveryResult(np.zeros(op.n, dtype=complex), support, 0, report,
                            res_norm, solver="omp", mode=cfg.correlation_mode.value)
    tie_tol = 0.0
    t = 0
    while res_norm > res_tol and t < max_it:
        t += 1
        counter = FlopCounter()
        h, mode_used, analytic = corr.correlate(t, r, support, coeffs, counter)
        if t == 1:
            tie_tol = cfg.tie_tolerance * float(np.abs(h).max())
        if cfg.record_correlations:
            result.correlations.append(h)
        lam = _argmax_with_ties(np.abs(h), tie_tol)
        result.selections.append(lam)
        other = 3 * op.n
        col = op.columns([lam])[:, 0]
        try:
            if qr is not None:
                before = qr.flops
                qr.append(col)
                new_coeffs = qr.solve()
                other += qr.flops - before
            else:
                if lam in support:
                    raise RankDeficientError(f"index {lam} selected twice")
                cols[:, t - 1] = col
                new_coeffs = _normal_equations(cols[:, :t], y)
                other += _matvec_flops(t, op.m) * (t + 1)
        except RankDeficientError as exc:
            result.iterations_run = t - 1
            result.status = "rank_deficient"
            raise RankDeficientError(str(exc), result) from exc
        support.append(lam)
        cols[:, t - 1] = col
        coeffs = new_coeffs
        a = cols[:, :t] @ coeffs
        r = y - a
        other += _matvec_flops(op.m, t) + 2 * op.m
        res_norm = float(np.linalg.norm(r))
        report.append(CostRow(t, mode_used, analytic, counter.flops,
                              corr.conventional_flops, other))
        result.x_hat = np.zeros(op.n, dtype=complex)
        result.x_hat[support] = coeffs
        result.iterations_run = t
        result.residual_norm = res_norm
    return result


def _cosamp_ls(op, merged, y):
    a = op.columns(merged)
    if len(merged) <= op.m:
        try:
            return _normal_equations(a, y), _matvec_flops(len(merged), op.m) * (len(merged) + 1)
        except RankDeficientError:
            pass
    # underdetermined or dependent merge: minimum-norm least squares
    sol = np.linalg.lstsq(a, y, rcond=None)[0]
    return sol, _matvec_flops(op.m, len(merged)) * len(merged)


def cosamp_solve(op: SensingOperator, y, k: int, config: SolveConfig | None = None,
                 kernel: CorrelationKernel | None = None) -> RecoveryResult:
    """Compressive sampling matching pursuit.

    Each iteration forms the proxy ``Phi^H r`` (by transform or by kernel
    update over the current K-term estimate), merges its 2K largest entries
    with the current support, solves least squares on the merge and keeps
    the K largest coefficients. Merges wider than M, or numerically
    dependent ones, fall back to the minimum-norm least-squares solution.
    """
    cfg = config or SolveConfig(ls_method=LSMethod.NORMAL_EQUATIONS)
    if k < 0:
        raise ValueError("k must be non-negative")
    y, res_tol, report = _prepare(op, y, cfg)
    max_it = cfg.max_iterations if cfg.max_iterations is not None else 2 * k
    corr = _Correlator(op, y, cfg, kernel, report)

    support: list[int] = []
    coeffs = np.zeros(0, dtype=complex)
    r = y.copy()
    res_norm = float(np.linalg.norm(r))
    result = RecoveryResult(np.zeros(op.n, dtype=complex), support, 0, report,
                            res_norm, solver="cosamp", mode=cfg.correlation_mode.value)
    if k == 0:
        return result
    tie_tol = 0.0
    t = 0
    while res_norm > res_tol and t < max_it:
        t += 1
        counter = FlopCounter()
        h, mode_used, analytic = corr.correlate(t, r, support, coeffs, counter)
        if t == 1:
            tie_tol = cfg.tie_tolerance * float(np.abs(h).max())
        if cfg.record_correlations:
            result.correlations.append(h)
        cand = ranked_indices(np.abs(h), tie_tol)[:2 * k]
        merged = sorted(set(cand.tolist()) | set(support))
        b, other = _cosamp_ls(op, merged, y)
        keep = ranked_indices(np.abs(b))[:k]
        keep = keep[np.argsort(np.asarray(merged)[keep])]
        support = [merged[i] for i in keep]
        coeffs = b[keep]
        result.selections.append((tuple(sorted(cand.tolist())), tuple(support)))
        r = y - op.columns(support) @ coeffs
        other += 3 * op.n + _matvec_flops(op.m, len(support)) + 2 * op.m
        res_norm = float(np.linalg.norm(r))
        report.append(CostRow(t, mode_used, analytic, counter.flops,
                              corr.conventional_flops, other))
        result.x_hat = np.zeros(op.n, dtype=complex)
        result.x_hat[support] = coeffs
        result.support = support
        result.iterations_run = t
        result.residual_norm = res_norm
    return result


def solve(solver: str, op, y, k=None, config=None, kernel=None) -> RecoveryResult:
    solver = solver.lower()
    if solver == "omp":
        return omp_solve(op, y, config, k=k, kernel=kernel)
    if solver == "cosamp":
        if k is None:
            raise ValueError("CoSaMP needs the sparsity k")
        return cosamp_solve(op, y, k, config, kernel=kernel)
    raise ValueError(f"unknown solver {solver!r}")


def format_result(result: RecoveryResult, op: SensingOperator) -> str:
    """Text form: header ``N M iterations residual_norm solver mode``, the
    support (1-based) on one line, then one ``re im`` line per coefficient."""
    lines = [f"{op.n} {op.m} {result.iterations_run} {result.residual_norm:.17g} "
             f"{result.solver} {result.mode}",
             " ".join(str(j + 1) for j in result.support)]
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in result.x_hat[result.support])
    return "\n".join(lines) + "\n"


def parse_result(text: str) -> dict:
    lines = text.splitlines()
    n, m, iters, res, solver, mode = lines[0].split()
    support = [int(j) - 1 for j in lines[1].split()]
    coeffs = np.array([complex(*map(float, ln.split()))
                       for ln in lines[2:2 + len(support)]], dtype=complex)
    x_hat = np.zeros(int(n), dtype=complex)
    x_hat[support] = coeffs
    return {"n": int(n), "m": int(m), "iterations": int(iters),
            "residual_norm": float(res), "solver": solver, "mode": mode,
            "support": support, "coeffs": coeffs, "x_hat": x_hat}
