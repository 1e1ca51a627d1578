import numpy as np
import pytest

from fastmp.cost_model import FlopCounter
from fastmp.structured_unitary import StructuredUnitary, fourier, hadamard
from fastmp.verification import (brute_force_product_index, check_closure,
                                 check_constant_modulus, check_first_column,
                                 check_unitarity)

from conftest import crandn, dft_oracle, sylvester_oracle

SMALL = [1, 2, 4, 8, 16, 32, 64]


def test_fourier_forward_of_first_basis_vector():
    out = fourier(4).forward([1, 0, 0, 0])
    np.testing.assert_allclose(out, 0.5 * np.ones(4), atol=1e-15)


def test_hadamard_forward_n2():
    out = hadamard(2).forward([1, 1])
    np.testing.assert_allclose(out, [np.sqrt(2), 0], atol=1e-15)


@pytest.mark.parametrize("n", [8, 6, 12])
def test_fourier_forward_matches_dense(rng, n):
    v = crandn(rng, n)
    np.testing.assert_allclose(fourier(n).forward(v), dft_oracle(n) @ v, atol=1e-12)


def test_fourier_forward_matches_numpy_fft(rng):
    v = crandn(rng, 1024)
    np.testing.assert_allclose(fourier(1024).forward(v), np.fft.fft(v) / 32, atol=1e-12)


@pytest.mark.parametrize("n", SMALL)
def test_hadamard_adjoint_equals_forward(rng, n):
    u = hadamard(n)
    v = crandn(rng, n)
    assert np.array_equal(u.adjoint(v), u.forward(v))
    np.testing.assert_allclose(u.forward(v), sylvester_oracle(n) @ v, atol=1e-12)


def test_fourier_adjoint_inverts_first_example():
    np.testing.assert_allclose(fourier(4).adjoint(0.5 * np.ones(4)), [1, 0, 0, 0],
                               atol=1e-15)


def test_fourier_adjoint_matches_dense(rng):
    v = crandn(rng, 16)
    np.testing.assert_allclose(fourier(16).adjoint(v), dft_oracle(16).conj().T @ v,
                               atol=1e-12)


def test_batched_transform(rng):
    u = fourier(32)
    v = crandn(rng, 3, 32)
    out = u.forward(v)
    for i in range(3):
        np.testing.assert_allclose(out[i], u.forward(v[i]), atol=1e-14)


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
def test_column_zero_is_constant(kind):
    u = StructuredUnitary(kind, 16)
    np.testing.assert_allclose(u.column(0), np.full(16, 0.25), atol=1e-15)


def test_hadamard_n4_column_1():
    np.testing.assert_allclose(hadamard(4).column(1), 0.5 * np.array([1, -1, 1, -1]))
    np.testing.assert_allclose(hadamard(4).column(1), sylvester_oracle(4)[:, 1])


def test_fourier_n4_column_2():
    np.testing.assert_allclose(fourier(4).column(2), 0.5 * np.array([1, -1, 1, -1]),
                               atol=1e-15)
    np.testing.assert_allclose(fourier(4).column(2), dft_oracle(4)[:, 2], atol=1e-15)


def test_column_out_of_range():
    with pytest.raises(IndexError):
        fourier(4).column(4)


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
def test_product_index_identity(kind):
    u = StructuredUnitary(kind, 32)
    assert all(u.product_index(0, j) == j for j in range(32))


def test_product_index_examples():
    # 1-based: Fourier (3, 7) -> 1; Hadamard (4, 6) -> 7 since 3 ^ 5 = 6
    assert fourier(8).product_index(2, 6) == 0
    assert hadamard(8).product_index(3, 5) == 6
    assert brute_force_product_index(dft_oracle(8), 2, 6) == 0
    assert brute_force_product_index(sylvester_oracle(8), 3, 5) == 6


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
@pytest.mark.parametrize("n", SMALL)
def test_product_index_matches_brute_force(kind, n):
    u = StructuredUnitary(kind, n)
    oracle = dft_oracle(n) if kind == "fourier" else sylvester_oracle(n)
    for i in range(n):
        for j in range(n):
            assert u.product_index(i, j) == brute_force_product_index(oracle, i, j)


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
@pytest.mark.parametrize("n", SMALL)
def test_dense_invariants(kind, n):
    u = StructuredUnitary(kind, n)
    mat = u.dense()
    oracle = dft_oracle(n) if kind == "fourier" else sylvester_oracle(n)
    np.testing.assert_allclose(mat, oracle, atol=1e-12)
    np.testing.assert_allclose(u.reference_dense(), oracle, atol=1e-12)
    for check in (check_unitarity, check_constant_modulus, check_first_column,
                  check_closure):
        ok, detail = check(u, mat)
        assert ok, detail


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
@pytest.mark.parametrize("n", [2, 256, 4096, 2 ** 16])
def test_round_trip(rng, kind, n):
    u = StructuredUnitary(kind, n)
    v = crandn(rng, n)
    back = u.adjoint(u.forward(v))
    assert np.linalg.norm(back - v) <= 1e-10 * np.linalg.norm(v)


def test_pure_tone():
    n = 64
    v = np.zeros(n)
    v[1] = 1
    np.testing.assert_allclose(np.abs(fourier(n).forward(v)), 1 / np.sqrt(n), atol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        fourier(8).forward(np.ones(4))
    with pytest.raises(ValueError):
        hadamard(8).adjoint(np.ones(16))


def test_invalid_construction():
    with pytest.raises(ValueError):
        hadamard(12)
    with pytest.raises(ValueError):
        StructuredUnitary("wavelet", 8)
    assert not fourier(12).is_fast


@pytest.mark.parametrize("n", [2, 64, 1024])
def test_transform_flop_counts(n):
    lg = n.bit_length() - 1
    c = FlopCounter()
    fourier(n).adjoint(np.zeros(n), c)
    assert c.complex_mults == n // 2 * lg and c.complex_adds == n * lg
    assert c.flops == 5 * n * lg
    c = FlopCounter()
    hadamard(n).forward(np.zeros(n), c)
    assert c.complex_adds == n * lg and c.flops == 2 * n * lg


def test_dense_fallback_flop_count():
    c = FlopCounter()
    fourier(6).forward(np.zeros(6), c)
    assert c.complex_mults == 36 and c.complex_adds == 30
