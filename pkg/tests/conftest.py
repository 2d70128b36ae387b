import numpy as np
import pytest

from gmrf_ctigo import sparse as sps


def random_sparse(rng, m, n, density=0.2, diag_boost=0.0):
    M = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    if diag_boost:
        k = min(m, n)
        M[np.arange(k), np.arange(k)] += diag_boost
    return M


def random_spd(rng, n, density=0.3):
    B = random_sparse(rng, n, n, density)
    return B @ B.T + n * np.eye(n)


def full_rank_tall(rng, m, n, density=0.25):
    """Random m x n sparse matrix with full column rank and no empty column."""
    while True:
        M = random_sparse(rng, m, n, density)
        M[rng.integers(0, m, n), np.arange(n)] += rng.choice([-1.0, 1.0], n) * (1 + rng.random(n))
        if np.linalg.matrix_rank(M) == n:
            return M


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_q1_dense():
    Q = 5 * np.eye(9) - np.eye(9, k=1) - np.eye(9, k=-1)
    Q[0, 8] = Q[8, 0] = -1
    return Q


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in getattr(rep, "nodeid", "") and rep.when == "call":
                name = rep.nodeid.split("::")[-1]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL", rep.duration))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, dur in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}  ({dur:.2f}s)")


__all__ = ["random_sparse", "random_spd", "full_rank_tall", "sps"]
