import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome for the end-of-run summary."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
        print(f"{line} ({detail})" if detail else line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(
            f"[{'PASS' if passed else 'FAIL'}] {number}. {title} -- {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def dft_oracle(n):
    """Unitary DFT written out entry by entry."""
    m = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    return np.exp(-2j * np.pi * m * k / n) / np.sqrt(n)


def sylvester_oracle(n):
    """Sylvester Hadamard matrix by the doubling recursion, scaled to be unitary."""
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(n)
