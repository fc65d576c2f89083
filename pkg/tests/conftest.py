import numpy as np
import pytest


def direct_dgt(f, g, a, M):
    """Brute-force double loop: c(m, n) = sum_l f(l) conj(g(l - n a)) e^{-2 pi i m (l - n a) / M}."""
    L = len(f)
    N = L // a
    l = np.arange(L)
    c = np.empty((M, N), dtype=complex)
    for n in range(N):
        shifted = np.conj(g[(l - n * a) % L])
        for m in range(M):
            c[m, n] = np.sum(f * shifted * np.exp(-2j * np.pi * m * (l - n * a) / M))
    return c


def direct_idgt(c, gd, a):
    M, N = c.shape
    L = N * a
    l = np.arange(L)
    f = np.zeros(L, dtype=complex)
    for n in range(N):
        for m in range(M):
            f += c[m, n] * gd[(l - n * a) % L] * np.exp(2j * np.pi * m * (l - n * a) / M)
    return f


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
