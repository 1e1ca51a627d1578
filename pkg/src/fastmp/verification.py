"""Exhaustive structural checks: transform constraints, the permutation
structure of U^H D U, the closure law and correlation-kernel invariants."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost_model import FOURIER, KINDS
from .fast_correlation import PermutationAction, verify_permutation_structure
from .sensing import RowSelection, SensingOperator
from .structured_unitary import StructuredUnitary


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.ok]

    def add(self, name, ok, detail=""):
        self.checks.append(CheckResult(name, bool(ok), detail))


def check_unitarity(u, dense=None, tol=1e-10):
    mat = u.dense() if dense is None else dense
    err = np.abs(mat.conj().T @ mat - np.eye(u.n)).max()
    return err <= tol, f"max |U^H U - I| = {err:.3g}"


def check_constant_modulus(u, dense=None, tol=1e-12):
    mat = u.dense() if dense is None else dense
    err = np.abs(np.abs(mat) - 1 / np.sqrt(u.n)).max()
    return err <= tol, f"max ||U_mn| - 1/sqrt(N)| = {err:.3g}"


def check_first_column(u, dense=None, tol=1e-12):
    mat = u.dense() if dense is None else dense
    err = np.abs(mat[:, 0] - 1 / np.sqrt(u.n)).max()
    return err <= tol, f"max |u_0 - 1/sqrt(N)| = {err:.3g}"


def brute_force_product_index(dense, i, j, tol=1e-10):
    """Search all columns for sqrt(N) u_i * sqrt(N) u_j; None if absent."""
    n = dense.shape[0]
    scaled = np.sqrt(n) * dense
    prod = scaled[:, i] * scaled[:, j]
    err = np.abs(scaled - prod[:, None]).max(axis=0)
    hits = np.flatnonzero(err <= tol)
    return int(hits[0]) if len(hits) == 1 else None


def check_closure(u, dense=None, tol=1e-10):
    """Every product of scaled columns is a scaled column, at ``product_index``."""
    mat = u.dense() if dense is None else dense
    n = u.n
    scaled = np.sqrt(n) * mat
    for i in range(n):
        prods = scaled[:, i, None] * scaled  # column j holds u_i * u_j
        for j in range(n):
            k = u.product_index(i, j)
            err = np.abs(prods[:, j] - scaled[:, k]).max()
            if err > tol:
                found = brute_force_product_index(mat, i, j, tol)
                return False, (f"product of columns {i} and {j} is column {found}, "
                               f"closed form gives {k} (err {err:.3g})")
    return True, f"{n * n} products matched"


def kernel_invariant_failures(c, kind, m, n, tol=1e-12):
    """Invariant violations of a correlation kernel vector (empty if fine)."""
    c = np.asarray(c)
    bad = []
    if abs(c[0] - m / n) > tol:
        bad.append(f"c[0] = {c[0]:.6g}, expected M/N = {m / n:.6g}")
    if kind == FOURIER:
        mirror = c[(-np.arange(n)) % n].conj()
        err = np.abs(c - mirror).max()
        if err > tol:
            bad.append(f"conjugate symmetry violated by {err:.3g}")
    else:
        scaled = c * n
        ints = np.rint(scaled.real)
        if np.abs(scaled - ints).max() > 1e-9:
            bad.append("N*c has non-integer entries")
        elif ((ints.astype(np.int64) - m) % 2 != 0).any():
            bad.append("N*c entries differ in parity from M")
        elif (np.abs(ints) > m).any():
            bad.append("|c| exceeds M/N")
    return bad


def run_verification(max_n: int, unitary_factory=StructuredUnitary, seed=0,
                     kernel_trials: int = 100, kinds=KINDS) -> VerificationReport:
    """Run every structural check for power-of-two sizes 2 <= N <= max_n.

    ``unitary_factory(kind, n)`` builds the transform under test; replacing it
    is how a faulty transform is injected.
    """
    report = VerificationReport()
    rng = np.random.default_rng(seed)
    sizes = []
    n = 2
    while n <= max_n:
        sizes.append(n)
        n *= 2
    for kind in kinds:
        for n in sizes:
            u = unitary_factory(kind, n)
            mat = u.dense()
            tag = f"{kind} N={n}"
            report.add(f"{tag} unitarity", *check_unitarity(u, mat))
            report.add(f"{tag} constant modulus", *check_constant_modulus(u, mat))
            report.add(f"{tag} constant first column", *check_first_column(u, mat))
            report.add(f"{tag} closure", *check_closure(u, mat))

            failed = None
            for lam in range(n):
                chk = verify_permutation_structure(u, lam, dense=mat)
                if not chk.ok:
                    failed = f"lambda={lam}: {chk.message}"
                    break
                expected = PermutationAction(kind, lam, n).index_map
                if not np.array_equal(chk.permutation, expected):
                    failed = f"lambda={lam}: permutation differs from the closed form"
                    break
            report.add(f"{tag} permutation structure", failed is None,
                       failed or f"all {n} lambdas give permutations")

            bad = []
            for _ in range(kernel_trials):
                m = int(rng.integers(1, n + 1))
                omega = np.sort(rng.choice(n, size=m, replace=False))
                op = SensingOperator(u, RowSelection(tuple(omega.tolist()), n))
                e0 = np.zeros(n, dtype=complex)
                e0[0] = 1
                c = op.apply_adjoint(op.apply(e0))
                bad = kernel_invariant_failures(c, kind, m, n)
                if bad:
                    bad = [f"Omega={omega.tolist()}: {bad[0]}"]
                    break
            report.add(f"{tag} kernel invariants", not bad,
                       bad[0] if bad else f"{kernel_trials} random selections")
    return report


class CorruptedUnitary(StructuredUnitary):
    """Test hook: a transform whose forward output has one entry perturbed."""

    def forward(self, v, counter=None):
        out = np.array(super().forward(v, counter))
        out[..., -1] *= 1.01
        return out


def corrupted_factory(kind, n):
    return CorruptedUnitary(kind, n) if n >= 4 else StructuredUnitary(kind, n)

