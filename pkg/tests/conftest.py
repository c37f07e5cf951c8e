"""Independent reference implementations used as test oracles.

These are written from the defining formulas with exact integer arithmetic
and dense loops, sharing no code with the package.
"""

import numpy as np
import pytest


def naive_members(n, j, k):
    """``{t : (k-1)/2^j < t/n <= k/2^j}``, cross-multiplied to stay exact."""
    t = np.arange(1, n + 1, dtype=object)
    return [int(v) for v in t if (k - 1) * n < v * 2**j <= k * n]


def naive_count(n, j, k):
    return len(naive_members(n, j, k))


def naive_index_set(n):
    out = []
    j = 0
    while 2**j <= 2 * n:
        for k in range(1, 2**j + 1):
            if naive_count(n, j + 1, 2 * k - 1) >= 1 and naive_count(n, j + 1, 2 * k) >= 1:
                out.append((j, k))
        j += 1
    return out


def naive_psi(n, j, k):
    """Dense ``psi_{j,k}`` from the normalisation formula."""
    left = naive_members(n, j + 1, 2 * k - 1)
    right = naive_members(n, j + 1, 2 * k)
    nl, nr = len(left), len(right)
    c = np.sqrt(n) / np.sqrt(1.0 / nl + 1.0 / nr)
    v = np.zeros(n)
    v[[t - 1 for t in left]] = c / nl
    v[[t - 1 for t in right]] = -c / nr
    return v


def naive_basis(n):
    """Rows: phi_0 then psi in scale-major, translation-minor order."""
    keys = naive_index_set(n)
    return keys, np.vstack([np.ones(n)] + [naive_psi(n, j, k) for j, k in keys])


def naive_analyze(y):
    y = np.asarray(y, dtype=float)
    keys, B = naive_basis(y.size)
    c = B @ y / y.size
    return keys, c[0], c[1:]


def naive_nw(x, y, x_eval, b, kind):
    if kind == "rectangular":
        kern = lambda u: 0.5 if abs(u) <= 1 else 0.0  # noqa: E731
    else:
        kern = lambda u: 0.75 * (1 - u * u) if abs(u) <= 1 else 0.0  # noqa: E731
    out = []
    for x0 in x_eval:
        num = den = 0.0
        for xt, yt in zip(x, y):
            w = kern((xt - x0) / b)
            num += w * yt
            den += w
        out.append(num / den)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
