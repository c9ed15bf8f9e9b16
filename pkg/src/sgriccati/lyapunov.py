"""Extended Lyapunov operators, mean-square stability and Lyapunov solvers.

The operator is ``S -> A0'S + SA0 + sum_k Ak'SAk`` for a closed-loop family
``(A0, ..., Ar)``.  Time-invariant families are handled algebraically through
the n^2 x n^2 Kronecker representation; periodic families through the
one-period propagator of ``dS/dt + L*(t)S + Q(t) = 0`` computed by fixed-step
RK4 backward in time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from ._linalg import kron, sym, tr, unvec, vec
from .errors import IntegrationFailure, SingularSolve, UnstableSystem
from .problem import DEFAULT_NODES
from .solution import PeriodicSymSolution, half_grid

STABILITY_TOL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class ClosedLoopCoeffs:
    """A family (A0, ..., Ar) of n x n matrices, constant or periodic in t.

    ``func(t)`` returns the list of matrices at ``t`` (scalar or array).
    """

    func: Callable[[object], Sequence[np.ndarray]]
    n: int
    period: float | None = None

    @classmethod
    def constant(cls, mats) -> "ClosedLoopCoeffs":
        mats = [np.array(a, dtype=float, ndmin=2) for a in mats]
        return cls(lambda t: mats, mats[0].shape[0], None)

    @classmethod
    def periodic(cls, func, n, period) -> "ClosedLoopCoeffs":
        return cls(func, n, float(period))

    @classmethod
    def from_functions(cls, funcs, period=None) -> "ClosedLoopCoeffs":
        """From :class:`~sgriccati.problem.PeriodicMatrixFunction` objects."""
        funcs = list(funcs)
        if period is None:
            return cls.constant([f.at(0.0) for f in funcs])
        return cls(lambda t: [f.at(t) for f in funcs], funcs[0].shape[0], float(period))

    @property
    def time_invariant(self) -> bool:
        return self.period is None

    def at(self, t) -> list:
        return list(self.func(t))


def lyap_apply(coeffs: ClosedLoopCoeffs, t, S) -> np.ndarray:
    A = coeffs.at(t)
    out = tr(A[0]) @ S + S @ A[0]
    for a in A[1:]:
        out = out + tr(a) @ S @ a
    return out


def _lyap_matrix(A):
    n = A[0].shape[-1]
    eye = np.eye(n)
    a0t = tr(A[0])
    out = kron(eye, a0t) + kron(a0t, eye)
    for a in A[1:]:
        out = out + kron(tr(a), tr(a))
    return out


def lyap_matrix(coeffs: ClosedLoopCoeffs, t=0.0) -> np.ndarray:
    """Matrix acting on column-stacked vec(S) like the Lyapunov operator at t."""
    return _lyap_matrix([np.asarray(a, dtype=float) for a in coeffs.at(t)])


@dataclass(frozen=True)
class StabilityCertificate:
    mode: str
    margin: float
    stable: bool


@dataclass(frozen=True, eq=False)
class MonodromyMap:
    """Backward one-period propagator of the vectorized Lyapunov equation.

    Integrating ``dS/dt = -(L*(t)S + Q(t))`` from ``S(period) = S1`` back to
    ``t = 0`` gives ``vec S(0) = phi @ vec S1 + g``.
    """

    phi: np.ndarray
    g: np.ndarray
    period: float
    nodes: int

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.phi))))


def _source_stack(Q, ts, n):
    if Q is None:
        return np.zeros(ts.shape + (n, n))
    if hasattr(Q, "at"):
        q = Q.at(ts)
    elif callable(Q):
        q = Q(ts)
    else:
        q = np.asarray(Q, dtype=float)
    return np.broadcast_to(q, ts.shape + (n, n))


def _coeff_stacks(coeffs, ts):
    n = coeffs.n
    return [np.broadcast_to(np.asarray(a, dtype=float), ts.shape + (n, n))
            for a in coeffs.at(ts)]


def _rk4_backward(Lmats, qs, y, nodes, period, store=False):
    """Integrate dy/ds = L(t) y + q(t), s = period - t, from t = period to 0.

    ``Lmats`` and ``qs`` are sampled on the half grid (2N+1 points).  ``y`` is
    either a vector or a matrix whose columns are propagated together; for a
    matrix state the source is applied to the last column only.
    """
    h = period / nodes
    mat_state = y.ndim == 2

    def f(j, y):
        out = Lmats[j] @ y
        if mat_state:
            out[:, -1] += qs[j]
        else:
            out = out + qs[j]
        return out

    out = [None] * (nodes + 1) if store else None
    if store:
        out[nodes] = y
    for i in range(nodes, 0, -1):
        j1, jm, j0 = 2 * i, 2 * i - 1, 2 * i - 2
        k1 = f(j1, y)
        k2 = f(jm, y + 0.5 * h * k1)
        k3 = f(jm, y + 0.5 * h * k2)
        k4 = f(j0, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationFailure(f"non-finite state at step {i} of {nodes}")
        if store:
            out[i - 1] = y
    return (y, out) if store else y


def monodromy(coeffs: ClosedLoopCoeffs, grid_steps: int = DEFAULT_NODES, Q=None) -> MonodromyMap:
    """One-period propagator and particular integral by fixed-step RK4."""
    if coeffs.period is None:
        raise ValueError("monodromy needs periodic coefficients")
    if grid_steps < 16:
        raise ValueError("grid_steps must be at least 16")
    n = coeffs.n
    ts = half_grid(coeffs.period, grid_steps)
    Lmats = _lyap_matrix(_coeff_stacks(coeffs, ts))
    qs = vec(_source_stack(Q, ts, n))
    y0 = np.zeros((n * n, n * n + 1))
    y0[:, :-1] = np.eye(n * n)
    y = _rk4_backward(Lmats, qs, y0, grid_steps, coeffs.period)
    return MonodromyMap(y[:, :-1], y[:, -1], coeffs.period, grid_steps)


def ems_stable(coeffs: ClosedLoopCoeffs, grid_steps: int = DEFAULT_NODES) -> StabilityCertificate:
    """Exponential mean-square stability of the family.

    Time-invariant: spectral abscissa of the Lyapunov matrix.  Periodic:
    log of the monodromy spectral radius divided by the period.
    """
    if coeffs.period is None:
        ev = np.linalg.eigvals(lyap_matrix(coeffs))
        margin = float(np.max(ev.real))
        return StabilityCertificate("time-invariant", margin, margin < -STABILITY_TOL)
    mono = monodromy(coeffs, grid_steps)
    rho = mono.spectral_radius
    margin = float(np.log(rho) / coeffs.period) if rho > 0 else -np.inf
    return StabilityCertificate("periodic", margin, rho < 1.0 - STABILITY_TOL)


def _lu_solve_checked(a, b, what):
    lu, piv = sla.lu_factor(a, check_finite=False)
    d = np.abs(np.diag(lu))
    if not np.all(np.isfinite(lu)) or d.min() <= 1e-14 * d.max():
        raise SingularSolve(f"{what} is rank deficient")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def solve_lyapunov_ti(coeffs: ClosedLoopCoeffs, Q, check_stability: bool = True) -> np.ndarray:
    """Solve ``L*(X) + Q = 0`` for constant coefficients."""
    Q = np.asarray(Q, dtype=float)
    n = coeffs.n
    Lm = lyap_matrix(coeffs)
    if check_stability:
        margin = float(np.max(np.linalg.eigvals(Lm).real))
        if not margin < -STABILITY_TOL:
            raise UnstableSystem(f"spectral abscissa {margin:.3g} is not negative")
    x = _lu_solve_checked(Lm, -vec(Q), "Lyapunov matrix")
    return sym(unvec(x, n))


def solve_lyapunov_periodic(coeffs: ClosedLoopCoeffs, Q, nodes: int = DEFAULT_NODES
                            ) -> PeriodicSymSolution:
    """The period-periodic solution of ``dX/dt + L*(t)X + Q(t) = 0``.

    ``Q`` is a matrix, a callable of ``t`` or anything with an ``at`` method.
    Values and exact right-hand-side derivatives are stored at the N+1 nodes.
    """
    if coeffs.period is None:
        raise ValueError("use solve_lyapunov_ti for time-invariant coefficients")
    n = coeffs.n
    period = coeffs.period
    ts = half_grid(period, nodes)
    A = _coeff_stacks(coeffs, ts)
    Lmats = _lyap_matrix(A)
    qs = vec(_source_stack(Q, ts, n))
    y0 = np.zeros((n * n, n * n + 1))
    y0[:, :-1] = np.eye(n * n)
    y = _rk4_backward(Lmats, qs, y0, nodes, period)
    phi, g = y[:, :-1], y[:, -1]
    rho = float(np.max(np.abs(np.linalg.eigvals(phi))))
    if not rho < 1.0 - STABILITY_TOL:
        raise UnstableSystem(f"monodromy spectral radius {rho:.6g} >= 1")
    I_phi = np.eye(n * n) - phi
    if np.linalg.cond(I_phi) > COND_LIMIT:
        raise SingularSolve("I - monodromy is ill-conditioned")
    x_end = np.linalg.solve(I_phi, g)
    _, xs = _rk4_backward(Lmats, qs, x_end, nodes, period, store=True)
    X = sym(unvec(np.array(xs), n))
    node_A = [a[::2] for a in A]
    dX = -(tr(node_A[0]) @ X + X @ node_A[0])
    for a in node_A[1:]:
        dX = dX - tr(a) @ X @ a
    dX = dX - _source_stack(Q, ts[::2], n)
    return PeriodicSymSolution.grid(X, dX, period)


def solve_lyapunov(coeffs: ClosedLoopCoeffs, Q, nodes: int = DEFAULT_NODES,
                   check_stability: bool = True) -> PeriodicSymSolution:
    """Dispatch to the algebraic or periodic solver."""
    if coeffs.period is None:
        Qc = Q.at(0.0) if hasattr(Q, "at") else (Q(0.0) if callable(Q) else Q)
        return PeriodicSymSolution.constant(solve_lyapunov_ti(coeffs, Qc, check_stability))
    return solve_lyapunov_periodic(coeffs, Q, nodes)
