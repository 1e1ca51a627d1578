"""Unitary Fourier and Hadamard transforms with instrumented fast paths.

Both families satisfy the two structural requirements of the fast
correlation method: every entry has magnitude 1/sqrt(N), and the scaled
columns sqrt(N) u_j form a group under element-wise multiplication.

Conventions
-----------
* Indices are 0-based throughout the Python API. Files and CLI output use
  1-based indices and convert at the boundary.
* Fourier: ``U[m, n] = exp(-2j*pi*m*n/N) / sqrt(N)``, so ``forward`` is the
  standard DFT scaled by 1/sqrt(N).
* Hadamard: Sylvester (natural binary) ordering,
  ``U[m, n] = (-1)**popcount(m & n) / sqrt(N)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cost_model import FOURIER, HADAMARD, KINDS, FlopCounter, log2_exact


def is_power_of_two(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def parity(a):
    """Parity of the popcount of each entry of a non-negative int array."""
    a = np.asarray(a, dtype=np.int64).copy()
    out = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        out ^= a & 1
        a >>= 1
    return out


@lru_cache(maxsize=64)
def _fft_plan(n: int, sign: int):
    lg = log2_exact(n)
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(lg):
        rev |= ((idx >> b) & 1) << (lg - 1 - b)
    twiddles = []
    half = 1
    while half < n:
        k = np.arange(half)
        twiddles.append(np.exp(sign * 2j * np.pi * k / (2 * half)))
        half *= 2
    rev.setflags(write=False)
    for w in twiddles:
        w.setflags(write=False)
    return rev, tuple(twiddles)


def fft_radix2(x, sign=-1, counter: FlopCounter | None = None):
    """Unnormalised radix-2 decimation-in-time FFT along the last axis.

    ``sign=-1`` is the forward DFT, ``sign=+1`` the unscaled inverse. Each of
    the log2 N stages performs N/2 twiddle multiplications and N complex
    additions, 5 N log2 N flops in total (trivial twiddles included).
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    rev, twiddles = _fft_plan(n, sign)
    batch = int(np.prod(x.shape[:-1], dtype=np.int64))
    y = x.reshape(batch, n)[:, rev]
    half = 1
    for w in twiddles:
        y = y.reshape(batch, n // (2 * half), 2, half)
        a = y[:, :, 0, :]
        b = y[:, :, 1, :] * w
        y = np.concatenate((a + b, a - b), axis=2)
        half *= 2
    if counter is not None:
        stages = len(twiddles)
        counter.complex_mults += batch * stages * (n // 2)
        counter.complex_adds += batch * stages * n
    return y.reshape(x.shape)


def fht(x, counter: FlopCounter | None = None):
    """Unnormalised fast Walsh-Hadamard transform, Sylvester order.

    Exactly N log2 N complex additions.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    lg = log2_exact(n)
    batch = int(np.prod(x.shape[:-1], dtype=np.int64))
    y = x.reshape(batch, n)
    half = 1
    while half < n:
        y = y.reshape(batch, n // (2 * half), 2, half)
        a = y[:, :, 0, :]
        b = y[:, :, 1, :]
        y = np.concatenate((a + b, a - b), axis=2)
        half *= 2
    if counter is not None:
        counter.complex_adds += batch * lg * n
    return y.reshape(x.shape)


@dataclass(frozen=True)
class StructuredUnitary:
    """A Fourier or Hadamard unitary matrix of size ``n``, never stored densely.

    Hadamard requires a power-of-two size. Fourier accepts any size; sizes
    that are not powers of two go through a dense O(N^2) product and are
    flagged by ``is_fast``.
    """

    kind: str
    n: int

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        n = int(self.n)
        if n < 1:
            raise ValueError("size must be positive")
        if kind == HADAMARD and not is_power_of_two(n):
            raise ValueError("Hadamard size must be a power of two")
        object.__setattr__(self, "n", n)

    @property
    def is_fast(self) -> bool:
        return is_power_of_two(self.n)

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.n)

    def _check(self, v):
        v = np.asarray(v, dtype=complex)
        if v.shape[-1] != self.n:
            raise ValueError(
                f"dimension mismatch: expected length {self.n}, got {v.shape[-1]}")
        return v

    def _transform(self, v, sign, counter):
        v = self._check(v)
        if self.kind == HADAMARD:
            out = fht(v, counter)
        elif self.is_fast:
            out = fft_radix2(v, sign, counter)
        else:
            out = _dense_dft(v, sign, counter)
        if counter is not None:
            counter.scaling_mults += 2 * v.size
        return out * self.scale

    def forward(self, v, counter: FlopCounter | None = None):
        """Return ``U @ v`` (applied along the last axis) in O(N log N)."""
        return self._transform(v, -1, counter)

    def adjoint(self, v, counter: FlopCounter | None = None):
        """Return ``U^H @ v``. For Hadamard this equals ``forward``."""
        return self._transform(v, +1, counter)

    def entries(self, rows, cols):
        """Closed-form submatrix ``U[rows][:, cols]``."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.ndim == 1 and cols.ndim == 1:
            rows, cols = rows[:, None], cols[None, :]
        if self.kind == FOURIER:
            phase = (rows * cols) % self.n
            return np.exp(-2j * np.pi * phase / self.n) * self.scale
        signs = 1 - 2 * parity(rows & cols)
        return signs.astype(complex) * self.scale

    def column(self, j: int):
        """The ``j``-th column (0-based) of U."""
        if not 0 <= j < self.n:
            raise IndexError(f"column index {j} out of range for size {self.n}")
        return self.entries(np.arange(self.n), np.int64(j))

    def product_index(self, i: int, j: int) -> int:
        """Index k with sqrt(N) u_i * sqrt(N) u_j == sqrt(N) u_k element-wise."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("column index out of range")
        if self.kind == FOURIER:
            return (i + j) % self.n
        return i ^ j

    def dense(self):
        """Dense N x N matrix built by pushing the identity through ``forward``."""
        return self.forward(np.eye(self.n, dtype=complex)).T

    def reference_dense(self):
        """Dense N x N matrix built from the closed-form entries (oracle)."""
        idx = np.arange(self.n)
        return self.entries(idx, idx)


def _dense_dft(v, sign, counter):
    n = v.shape[-1]
    idx = np.arange(n)
    mat = np.exp(sign * 2j * np.pi * ((idx[:, None] * idx[None, :]) % n) / n)
    if counter is not None:
        batch = v.size // n
        counter.complex_mults += batch * n * n
        counter.complex_adds += batch * n * (n - 1)
    return v @ mat.T


def fourier(n: int) -> StructuredUnitary:
    return StructuredUnitary(FOURIER, n)


def hadamard(n: int) -> StructuredUnitary:
    return StructuredUnitary(HADAMARD, n)
