import numpy as np
import pytest

from sgriccati.bench import random_game_problem
from sgriccati.problem import PeriodicMatrixFunction, Problem, constant_problem


def scalar_problem(a=-1.0, b1=1.0, b2=1.0, m=2.0, l1=0.0, l2=0.0, r11=-1.0, r12=0.0, r22=1.0,
                   noise=()):
    """Scalar game problem; ``noise`` is a list of (a_k, b1_k, b2_k) channels."""
    A = [[[a]]] + [[[c[0]]] for c in noise]
    B1 = [[[b1]]] + [[[c[1]]] for c in noise]
    B2 = [[[b2]]] + [[[c[2]]] for c in noise]
    return constant_problem(A, B1, B2, [[m]], [[l1]], [[l2]], [[r11]], [[r12]], [[r22]])


@pytest.fixture
def p1():
    """A0=-1, B01=B02=1, L=0, M=2, R=diag(-1,1), no noise; solution X=1."""
    return scalar_problem()


def periodic_scalar_problem():
    """a(t) = -1 + 0.5 sin(2 pi t), other data constant with the test-family structure."""
    a = PeriodicMatrixFunction.fourier([[-1.0]], [([[0.0]], [[0.5]])], 1.0)
    R11, R12, R22 = -4.5, 0.4, 5.5
    L1, L2 = 0.3, 0.6
    R = np.array([[R11, R12], [R12, R22]])
    L = np.array([[L1, L2]])
    M = 0.01 + 0.1 + (L @ np.linalg.solve(R, L.T))[0, 0]
    return Problem.from_matrices(
        [a, [[0.3]], [[0.2]]], [[[2.8]], [[0.005]], [[0.004]]], [[[7.2]], [[0.006]], [[0.003]]],
        [[M]], [[L1]], [[L2]], [[R11]], [[R12]], [[R22]], period=1.0)


@pytest.fixture(scope="session")
def random_problems():
    return {n: random_game_problem(n, 1000 + n) for n in range(1, 7)}


def random_stable_family(rng, n, r, margin=0.5):
    """Random (A0..Ar) with the extended Lyapunov operator shifted to be stable."""
    from sgriccati.lyapunov import ClosedLoopCoeffs, lyap_matrix
    A = [rng.standard_normal((n, n)) for _ in range(r + 1)]
    A[1:] = [0.5 * a for a in A[1:]]
    ab = np.max(np.linalg.eigvals(lyap_matrix(ClosedLoopCoeffs.constant(A))).real)
    A[0] = A[0] - 0.5 * (ab + margin) * np.eye(n)
    return A


def random_psd(rng, n, scale=1.0):
    g = rng.standard_normal((n, n))
    return scale * g @ g.T / n


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
