"""Shared oracles.  These deliberately avoid the package's own code paths."""
import numpy as np
import pytest

ACCEPTANCE_LINES = []


def naive_objective(Q, c, w):
    """Scalar triple loop over Python numbers."""
    total = 0
    N = len(w)
    for i in range(N):
        for j in range(N):
            total += Q[i][j] * w[i] * w[j]
        total += c[i] * w[i]
    return total


def power_iteration_lambda_max(Q, rtol=1e-12, max_iter=2_000_000, seed=0):
    """Largest eigenvalue of a symmetric matrix by shifted power iteration.

    Shifting by the Frobenius norm makes every eigenvalue non-negative, so the
    largest algebraic eigenvalue becomes the dominant one.  Stops when the
    Rayleigh quotient changes by less than ``rtol`` (relative) between steps.
    """
    Q = np.asarray(Q, dtype=np.float64)
    N = Q.shape[0]
    shift = float(np.sqrt((Q * Q).sum()))
    B = Q + shift * np.eye(N)
    x = np.random.default_rng(seed).standard_normal(N)
    x /= np.linalg.norm(x)
    est = x @ B @ x
    for _ in range(max_iter):
        y = B @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return -shift
        x = y / ny
        new = x @ B @ x
        if abs(new - est) <= rtol * max(abs(new), 1.0):
            est = new
            break
        est = new
    return est - shift


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append(f"[{number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[1:3])):
            terminalreporter.write_line(line)
