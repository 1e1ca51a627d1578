"""Correlation-kernel update replacing the per-iteration adjoint transform.

For ``Phi = S_Omega U`` with U Fourier or Hadamard, the correlation of a
residual ``y - Phi_L x`` is

    h = h0 - sum_tau x[tau] * P_{L[tau]} c,      c = U^H S^T S U e_0,

where ``h0 = Phi^H y`` and ``P_lam = U^H diag(sqrt(N) u_lam) U`` is a
permutation: a cyclic shift by ``lam`` (Fourier) or the index map
``k -> k ^ lam`` (Hadamard). Permutations are realised as index arithmetic,
never stored.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost_model import FOURIER, HADAMARD, FlopCounter
from .sensing import SensingOperator
from .structured_unitary import StructuredUnitary


@dataclass(frozen=True)
class PermutationAction:
    """The permutation ``U^H D_lam U`` for a transform family (0-based ``lam``)."""

    kind: str
    lam: int
    n: int

    def __post_init__(self):
        if not 0 <= self.lam < self.n:
            raise IndexError(f"lambda {self.lam} out of range for size {self.n}")

    @property
    def index_map(self):
        """Array ``src`` with ``(P v)[k] == v[src[k]]``."""
        k = np.arange(self.n)
        if self.kind == FOURIER:
            return (k - self.lam) % self.n
        return k ^ self.lam

    def apply(self, v):
        v = np.asarray(v)
        if v.shape[-1] != self.n:
            raise ValueError(
                f"dimension mismatch: expected length {self.n}, got {v.shape[-1]}")
        if self.kind == FOURIER:
            return np.roll(v, self.lam, axis=-1)
        return v[..., self.index_map]


def permute(p: PermutationAction, v):
    return p.apply(v)


@dataclass(frozen=True, eq=False)
class CorrelationKernel:
    """``c = U^H S^T S U e_0`` plus the tables the structured update needs.

    Fourier kernels are conjugate symmetric, so only entries ``0..N//2`` are
    used by the structured path. Hadamard kernels take values ``l / N`` with
    integer ``l``; the structured path multiplies the coefficient by each
    distinct ``|l|`` once and gathers the rest.
    """

    c: np.ndarray
    kind: str
    m: int
    n: int
    half: np.ndarray = field(repr=False, default=None)
    levels: np.ndarray = field(repr=False, default=None)
    codes: np.ndarray = field(repr=False, default=None)

    @property
    def n_levels(self) -> int:
        return 0 if self.levels is None else len(self.levels)


def compute_kernel(op: SensingOperator, counter: FlopCounter | None = None
                   ) -> CorrelationKernel:
    """Correlation kernel from one ``apply`` and one ``apply_adjoint`` of e_0."""
    e0 = np.zeros(op.n, dtype=complex)
    e0[0] = 1.0
    c = op.apply_adjoint(op.apply(e0, counter), counter)
    if op.kind == HADAMARD:
        scaled = c * op.n
        ints = np.rint(scaled.real).astype(np.int64)
        if np.abs(scaled - ints).max(initial=0.0) > 1e-6:
            raise ValueError("Hadamard kernel entries are not multiples of 1/N")
        c = ints / op.n + 0j
        mags = np.unique(np.abs(ints[ints != 0]))
        codes = np.zeros(op.n, dtype=np.int64)
        rank = np.searchsorted(mags, np.abs(ints)) + 1
        codes[ints > 0] = rank[ints > 0]
        codes[ints < 0] = len(mags) + rank[ints < 0]
        levels = mags / op.n
        for arr in (c, levels, codes):
            arr.setflags(write=False)
        return CorrelationKernel(c, op.kind, op.m, op.n, levels=levels, codes=codes)
    half = c[: op.n // 2 + 1].copy()
    c.setflags(write=False)
    half.setflags(write=False)
    return CorrelationKernel(c, op.kind, op.m, op.n, half=half)


def _scaled_fourier_kernel(kernel, x, buf, counter):
    """Write ``x * c`` into ``buf`` sharing products between mirrored entries.

    With ``c[N-j] = conj(c[j])`` and ``x = p + iq``, ``c[j] = a + ib``:
    ``x c[j] = (pa - qb) + i(qa + pb)`` and ``x c[N-j] = (pa + qb) + i(qa - pb)``,
    so each mirrored pair costs 4 real multiplications and 4 real additions.
    """
    n = kernel.n
    pairs = (n - 1) // 2
    a = kernel.half.real
    b = kernel.half.imag
    p, q = x.real, x.imag
    pa = p * a[1:pairs + 1]
    qb = q * b[1:pairs + 1]
    qa = q * a[1:pairs + 1]
    pb = p * b[1:pairs + 1]
    buf.real[1:pairs + 1] = pa - qb
    buf.imag[1:pairs + 1] = qa + pb
    buf.real[n - pairs:] = (pa + qb)[::-1]
    buf.imag[n - pairs:] = (qa - pb)[::-1]
    # self-mirrored entries (0 and N/2) are real
    selfs = [0] if n % 2 else [0, n // 2]
    for j in selfs:
        buf[j] = complex(p * a[j], q * a[j])
    if counter is not None:
        counter.real_mults += 4 * pairs + 2 * len(selfs)
        counter.real_adds += 4 * pairs


def fast_update(h0, kernel: CorrelationKernel, support, coeffs,
                counter: FlopCounter | None = None, structured: bool = True,
                out=None):
    """Return ``h0 - sum_tau coeffs[tau] * P_{support[tau]} c``.

    Parameters
    ----------
    h0 : ndarray, shape (N,)
        Correlation of the measurements, ``Phi^H y``.
    kernel : CorrelationKernel
    support : sequence of int
        Distinct 0-based column indices.
    coeffs : ndarray
        One coefficient per support entry.
    counter : FlopCounter, optional
        Receives the arithmetic actually executed.
    structured : bool
        Use the cheap path (conjugate-symmetric products for Fourier, level
        table for Hadamard). ``False`` multiplies the full kernel, which is
        the plain reference.
    out : ndarray, optional
        Working buffer for the result; may alias ``h0``.

    Returns
    -------
    ndarray, shape (N,)
    """
    n = kernel.n
    support = [int(j) for j in support]
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if len(support) != len(coeffs):
        raise ValueError("support and coefficients differ in length")
    if len(set(support)) != len(support):
        raise ValueError("duplicate support indices")
    h0 = np.asarray(h0, dtype=complex)
    if h0.shape != (n,):
        raise ValueError(f"dimension mismatch: expected length {n}")
    if out is None:
        h = h0.copy()
    else:
        h = out
        if h is not h0:
            h[:] = h0
    if kernel.kind == FOURIER:
        buf = np.empty(n, dtype=complex)
        for lam, x in zip(support, coeffs):
            if not 0 <= lam < n:
                raise IndexError(f"support index {lam} out of range")
            if structured:
                _scaled_fourier_kernel(kernel, x, buf, counter)
            else:
                np.multiply(kernel.c, x, out=buf)
                if counter is not None:
                    counter.complex_mults += n
            # (P_lam v)[k] = v[k - lam]
            h[lam:] -= buf[:n - lam]
            h[:lam] -= buf[n - lam:]
            if counter is not None:
                counter.complex_adds += n
        return h
    idx = np.arange(n)
    n_lev = kernel.n_levels
    table = np.zeros(2 * n_lev + 1, dtype=complex)
    for lam, x in zip(support, coeffs):
        if not 0 <= lam < n:
            raise IndexError(f"support index {lam} out of range")
        src = idx ^ lam
        if structured:
            np.multiply(kernel.levels, x, out=table[1:n_lev + 1])
            np.negative(table[1:n_lev + 1], out=table[n_lev + 1:])
            h -= table[kernel.codes[src]]
            if counter is not None:
                counter.real_mults += 2 * n_lev
        else:
            h -= x * kernel.c.real[src]
            if counter is not None:
                counter.real_mults += 2 * n
        if counter is not None:
            counter.complex_adds += n
    return h


@dataclass
class PermutationCheck:
    """Outcome of materialising ``U^H D_lam U`` and testing it is a permutation."""

    lam: int
    ok: bool
    permutation: np.ndarray | None = None
    message: str = ""
    entry: tuple | None = None


def verify_permutation_structure(u: StructuredUnitary, lam: int, tol: float = 1e-10,
                       dense=None) -> PermutationCheck:
    """Check that ``U^H diag(sqrt(N) u_lam) U`` is a 0/1 permutation matrix.

    On success ``permutation[k]`` is the column holding the 1 in row ``k``,
    i.e. ``(P v)[k] == v[permutation[k]]``.
    """
    mat = u.dense() if dense is None else dense
    n = mat.shape[0]
    d = np.sqrt(n) * mat[:, lam]
    p = mat.conj().T @ (d[:, None] * mat)
    is_one = np.abs(p - 1) <= tol
    is_zero = np.abs(p) <= tol
    bad = ~(is_one | is_zero)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        return PermutationCheck(lam, False, None,
                            f"entry ({i}, {j}) = {p[i, j]:.3g} is neither 0 nor 1",
                            (i, j))
    rows = is_one.sum(axis=1)
    cols = is_one.sum(axis=0)
    if (rows != 1).any():
        i = int(np.flatnonzero(rows != 1)[0])
        return PermutationCheck(lam, False, None,
                            f"row {i} has {int(rows[i])} unit entries", (i, -1))
    if (cols != 1).any():
        j = int(np.flatnonzero(cols != 1)[0])
        return PermutationCheck(lam, False, None,
                            f"column {j} has {int(cols[j])} unit entries", (-1, j))
    return PermutationCheck(lam, True, np.argmax(is_one, axis=1))


def hadamard_generator_decomposition(lam: int, n: int) -> list[int]:
    """Bit positions set in ``lam``: P_lam is the product of those single-bit XOR maps."""
    if not 0 <= lam < n:
        raise IndexError(f"lambda {lam} out of range for size {n}")
    return [b for b in range(n.bit_length() - 1) if lam >> b & 1]


def apply_generators(v, bits):
    """Apply the single-bit XOR generators ``k -> k ^ (1 << b)`` in sequence."""
    v = np.asarray(v)
    idx = np.arange(v.shape[-1])
    for b in bits:
        v = v[..., idx ^ (1 << b)]
    return v
