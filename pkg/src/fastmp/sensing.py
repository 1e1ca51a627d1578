"""Partial unitary sensing operators ``Phi = S_Omega U`` and synthetic problems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost_model import FlopCounter
from .structured_unitary import StructuredUnitary

UNIFORM = "uniform"
EXPLICIT = "explicit"


def derive_seed(base: int, index: int) -> int:
    """Seed of trial ``index`` in a campaign started from ``base``.

    ``SeedSequence((base, index))`` hashed to 63 bits, so trials are
    independent of evaluation order.
    """
    state = np.random.SeedSequence((int(base), int(index))).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclass(frozen=True)
class RowSelection:
    """M distinct row indices out of N (0-based), in the order given."""

    omega: tuple
    n: int

    def __post_init__(self):
        omega = tuple(int(i) for i in self.omega)
        n = int(self.n)
        if not 1 <= len(omega) <= n:
            raise ValueError(f"need 1 <= M <= N, got M={len(omega)}, N={n}")
        if len(set(omega)) != len(omega):
            raise ValueError("row indices must be distinct")
        if min(omega) < 0 or max(omega) >= n:
            raise ValueError("row index out of range")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return len(self.omega)

    @property
    def indices(self):
        return np.asarray(self.omega, dtype=np.int64)


def make_row_selection(n: int, m: int, mode: str = UNIFORM, indices=None,
                       seed=None) -> RowSelection:
    """Draw ``m`` rows uniformly without replacement, or validate an explicit list.

    Random selections are returned sorted so that a given seed always maps to
    the same operator.
    """
    if mode == UNIFORM:
        if not 1 <= m <= n:
            raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")
        rng = np.random.default_rng(seed)
        omega = np.sort(rng.choice(n, size=m, replace=False))
        return RowSelection(tuple(omega.tolist()), n)
    if mode == EXPLICIT:
        if indices is None:
            raise ValueError("explicit mode needs indices")
        sel = RowSelection(tuple(indices), n)
        if sel.m != m:
            raise ValueError(f"expected {m} indices, got {sel.m}")
        return sel
    raise ValueError(f"unknown selection mode {mode!r}")


@dataclass(frozen=True)
class SensingOperator:
    unitary: StructuredUnitary
    selection: RowSelection

    def __post_init__(self):
        if self.selection.n != self.unitary.n:
            raise ValueError("selection size does not match the unitary size")

    @property
    def n(self) -> int:
        return self.unitary.n

    @property
    def m(self) -> int:
        return self.selection.m

    @property
    def kind(self) -> str:
        return self.unitary.kind

    @property
    def omega(self):
        return self.selection.indices

    def apply(self, x, counter: FlopCounter | None = None):
        """``Phi @ x``: one fast transform, then keep the rows in Omega."""
        return self.unitary.forward(x, counter)[..., self.omega]

    def apply_adjoint(self, r, counter: FlopCounter | None = None):
        """``Phi^H @ r``: scatter r onto Omega, then one adjoint transform."""
        r = np.asarray(r, dtype=complex)
        if r.shape[-1] != self.m:
            raise ValueError(
                f"dimension mismatch: expected length {self.m}, got {r.shape[-1]}")
        full = np.zeros(r.shape[:-1] + (self.n,), dtype=complex)
        full[..., self.omega] = r
        return self.unitary.adjoint(full, counter)

    def columns(self, support):
        """Columns of Phi indexed by ``support``, as an M x len(support) array."""
        support = np.asarray(support, dtype=np.int64).reshape(-1)
        return self.unitary.entries(self.omega, support)

    def dense(self):
        return self.unitary.reference_dense()[self.omega, :]


def make_operator(kind: str, n: int, m: int, seed=None, indices=None) -> SensingOperator:
    if indices is None:
        sel = make_row_selection(n, m, UNIFORM, seed=seed)
    else:
        sel = make_row_selection(n, m, EXPLICIT, indices=indices)
    return SensingOperator(StructuredUnitary(kind, n), sel)


@dataclass
class ProblemInstance:
    op: SensingOperator
    x_true: np.ndarray
    y: np.ndarray
    noise: np.ndarray
    k: int
    seed: int | None = None

    @property
    def support(self):
        return np.flatnonzero(self.x_true)


def _circular_gaussian(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def make_instance(op: SensingOperator, k: int, noise_stddev: float = 0.0,
                  seed=None) -> ProblemInstance:
    """Random K-sparse signal with circular complex Gaussian entries.

    ``noise_stddev`` is the standard deviation of each complex noise entry
    (each real part gets ``noise_stddev / sqrt(2)``).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k >= op.m:
        raise ValueError(f"sparsity {k} must be smaller than M={op.m}")
    if noise_stddev < 0:
        raise ValueError("noise_stddev must be non-negative")
    rng = np.random.default_rng(seed)
    support = rng.choice(op.n, size=k, replace=False)
    x = np.zeros(op.n, dtype=complex)
    x[support] = _circular_gaussian(rng, k)
    noise = noise_stddev * _circular_gaussian(rng, op.m)
    y = op.apply(x) + noise
    return ProblemInstance(op, x, y, noise, k, seed)


def _fmt(z) -> str:
    return f"{z.real:.17g} {z.imag:.17g}"


def format_instance(inst: ProblemInstance) -> str:
    """Plain-text instance file.

    Line 1: ``N M K seed kind``; line 2: Omega (1-based); then N lines of
    ``re im`` for x_true and M lines for y. 17 significant digits make the
    round trip lossless.
    """
    op = inst.op
    seed = "-" if inst.seed is None else str(inst.seed)
    lines = [f"{op.n} {op.m} {inst.k} {seed} {op.kind}",
             " ".join(str(i + 1) for i in op.selection.omega)]
    lines.extend(_fmt(z) for z in inst.x_true)
    lines.extend(_fmt(z) for z in inst.y)
    return "\n".join(lines) + "\n"


def _parse_complex_lines(lines):
    vals = np.array([[float(a) for a in ln.split()] for ln in lines], dtype=float)
    if vals.size == 0:
        return np.zeros(0, dtype=complex)
    if vals.ndim != 2 or vals.shape[1] != 2:
        raise ValueError("expected 're im' pairs")
    return vals[:, 0] + 1j * vals[:, 1]


def parse_instance(text: str) -> ProblemInstance:
    """Inverse of ``format_instance``.

    The noise vector is not stored in the file; it is recovered as
    ``y - Phi x_true``.
    """
    lines = text.splitlines()
    try:
        n_s, m_s, k_s, seed_s, kind = lines[0].split()
        n, m, k = int(n_s), int(m_s), int(k_s)
    except (IndexError, ValueError) as exc:
        raise ValueError("malformed instance header") from exc
    omega = [int(i) - 1 for i in lines[1].split()]
    if len(lines) < 2 + n + m:
        raise ValueError("instance file is truncated")
    x = _parse_complex_lines(lines[2:2 + n])
    y = _parse_complex_lines(lines[2 + n:2 + n + m])
    op = SensingOperator(StructuredUnitary(kind, n), RowSelection(tuple(omega), n))
    if op.m != m:
        raise ValueError("Omega length does not match M")
    seed = None if seed_s == "-" else int(seed_s)
    return ProblemInstance(op, x, y, y - op.apply(x), k, seed)
