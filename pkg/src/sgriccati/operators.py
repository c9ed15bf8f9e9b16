"""The Riccati operator, feedback gains and their structural identities.

Every function is pointwise in time: ``t`` may be a scalar or an array, and
matrix arguments may carry matching leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import checked_solve, fro, sym, tr
from .errors import SingularBlock, SingularWeight
from .problem import DEFAULT_NODES, Coeffs, Problem, _weighted_R, require_domain


# --------------------------------------------------------------------------
# generic LQ-type Riccati expression

def lyap_terms(A, X):
    """A0'X + XA0 + sum_k Ak'XAk."""
    out = tr(A[0]) @ X + X @ A[0]
    for a in A[1:]:
        out = out + tr(a) @ X @ a
    return out


def lq_riccati(A, B, M, L, R, X):
    """Riccati expression for drift family A, input family B, cost (M, L, R).

    Returns ``lyap_terms(A, X) + M - S' (R + sum Bk'XBk)^{-1} S`` with
    ``S = B0'X + sum Bk'XAk + L'``.
    """
    S = tr(B[0]) @ X + tr(L)
    Rx = R
    for a, b in zip(A[1:], B[1:]):
        S = S + tr(b) @ X @ a
        Rx = Rx + tr(b) @ X @ b
    gain = checked_solve(sym(Rx), S, SingularWeight, "R(t,X)")
    return sym(lyap_terms(A, X) + M - tr(S) @ gain)


def _S(c: Coeffs, X):
    S = tr(c.B[0]) @ X + tr(c.L)
    for a, b in zip(c.A[1:], c.B[1:]):
        S = S + tr(b) @ X @ a
    return S


def _F(c: Coeffs, X):
    return -checked_solve(_weighted_R(c, X), _S(c, X), SingularWeight, "R(t,X)")


def closed_loop(c: Coeffs, gain):
    """[Ak + Bk gain for k = 0..r]."""
    return [a + b @ gain for a, b in zip(c.A, c.B)]


# --------------------------------------------------------------------------
# gains and the Riccati operator

def feedback_gain(p: Problem, t, X) -> np.ndarray:
    """F(t,X) = -R(t,X)^{-1} (B0'X + sum Bk'XAk + L')."""
    return _F(p.at(t), np.asarray(X, dtype=float))


def normalized_gain(p: Problem, t, X) -> np.ndarray:
    c = p.at(t)
    X = np.asarray(X, dtype=float)
    return _F(c, X) - _F(c, np.zeros_like(X))


def riccati_operator(p: Problem, t, X, check_domain: bool = True) -> np.ndarray:
    """The game Riccati operator G(t, X), defined where the sign conditions hold."""
    X = np.asarray(X, dtype=float)
    if check_domain:
        require_domain(p, t, X, "riccati_operator")
    c = p.at(t)
    return lq_riccati(c.A, c.B, c.M, c.L, c.R, X)


@dataclass(frozen=True)
class GRDEResidualField:
    times: np.ndarray
    values: np.ndarray

    @property
    def sup_norm(self) -> float:
        return float(np.max(fro(self.values)))


def residual_field(p: Problem, X, nodes: int = DEFAULT_NODES,
                   check_domain: bool = True) -> GRDEResidualField:
    """dX/dt + G(t, X(t)) at every verification node."""
    if X.is_constant:
        ts = p.grid_times(nodes)
        Xs = np.broadcast_to(X.samples, ts.shape + X.samples.shape)
        dX = np.zeros_like(Xs)
    else:
        ts = X.node_times()[:-1]
        Xs = X.node_values()
        dX = X.node_derivatives()
    if p.period is None:
        ts = np.zeros(Xs.shape[0])
    G = riccati_operator(p, ts if p.period is not None else 0.0, Xs, check_domain)
    return GRDEResidualField(ts, sym(dX + G))


# --------------------------------------------------------------------------
# increments and identities

def increment_N(p: Problem, t, X, Z) -> np.ndarray:
    """N(t,X,Z) = B0'Z + sum_k Bk'Z (Ak + Bk F(t,X))."""
    c = p.at(t)
    return _increment_N(c, _F(c, np.asarray(X, dtype=float)), np.asarray(Z, dtype=float))


def _increment_N(c: Coeffs, F, Z):
    out = tr(c.B[0]) @ Z
    for a, b in zip(c.A[1:], c.B[1:]):
        out = out + tr(b) @ Z @ (a + b @ F)
    return out


def gain_increment_identity(p: Problem, t, X, Z) -> float:
    """|| F(X+Z) - F(X) + R(X+Z)^{-1} N(X,Z) ||_F, maximized over ``t``."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    require_domain(p, t, X, "gain_increment_identity")
    require_domain(p, t, X + Z, "gain_increment_identity")
    c = p.at(t)
    FX = _F(c, X)
    rhs = FX - checked_solve(_weighted_R(c, X + Z), _increment_N(c, FX, Z), SingularWeight)
    return float(np.max(fro(_F(c, X + Z) - rhs)))


def completion_identity(p: Problem, t, X, Theta) -> float:
    """Defect of G(t,X) rewritten by completing the square around ``Theta``."""
    X = np.asarray(X, dtype=float)
    require_domain(p, t, X, "completion_identity")
    c = p.at(t)
    F = _F(c, X)
    cl = closed_loop(c, Theta)
    expansion = (lyap_terms(cl, X) + c.M + tr(Theta) @ c.R @ Theta
                 + tr(Theta) @ tr(c.L) + c.L @ Theta
                 - tr(F - Theta) @ _weighted_R(c, X) @ (F - Theta))
    G = lq_riccati(c.A, c.B, c.M, c.L, c.R, X)
    return float(np.max(fro(G - expansion)))


def decomposition_identity(p: Problem, t, X, Z) -> float:
    """Defect of G(X+Z) = G(X) + L_F(X)(Z) - N' R(X+Z)^{-1} N."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    require_domain(p, t, X, "decomposition_identity")
    require_domain(p, t, X + Z, "decomposition_identity")
    c = p.at(t)
    F = _F(c, X)
    N = _increment_N(c, F, Z)
    rhs = (lq_riccati(c.A, c.B, c.M, c.L, c.R, X) + lyap_terms(closed_loop(c, F), Z)
           - tr(N) @ checked_solve(_weighted_R(c, X + Z), N, SingularWeight))
    return float(np.max(fro(lq_riccati(c.A, c.B, c.M, c.L, c.R, X + Z) - rhs)))


def v_coefficient(p: Problem, t, X_h, Z_prev, F_prev) -> np.ndarray:
    """Player-1 part of the previous increment, projected through R22(t, X_h).

    ``(I, -R12(X_h) R22(X_h)^{-1}) [B0'Z + sum Bk'Z(Ak + Bk F_prev)]``.
    """
    c = p.at(t)
    return _v(c, np.asarray(X_h, dtype=float), np.asarray(Z_prev, dtype=float), F_prev)


def _v(c: Coeffs, X_h, Z_prev, F_prev):
    m1 = c.m1
    N = _increment_N(c, F_prev, Z_prev)
    Rx = _weighted_R(c, X_h)
    R12 = Rx[..., :m1, m1:]
    return N[..., :m1, :] - R12 @ checked_solve(Rx[..., m1:, m1:], N[..., m1:, :],
                                                SingularBlock, "R22(t,X)")


# --------------------------------------------------------------------------
# auxiliary (K, W) problem

def composite_gain_J(p: Problem, t, X, K, W) -> np.ndarray:
    """J = [[I, 0], [W, 0]] Fhat(t,X) + [0; K]."""
    Fh1 = normalized_gain(p, t, X)[..., :p.dims.m1, :]
    return np.concatenate([Fh1, W @ Fh1 + K], axis=-2)


def aux_gains_from_solution(p: Problem, t, X):
    """Player-2 best-response gains (K, W) at X in the shifted coordinates.

    ``W = -R22(X)^{-1} R21(X)`` and
    ``K = -R22(X)^{-1} (B02'X + sum Bk2'X (Ak + Bk F(t,0)))``.
    """
    c = p.at(t)
    X = np.asarray(X, dtype=float)
    m1 = c.m1
    Rx = _weighted_R(c, X)
    R22x = Rx[..., m1:, m1:]
    F0 = _F(c, np.zeros_like(X))
    rhs = tr(c.B2[0]) @ X
    for a, b, b2 in zip(c.A[1:], c.B[1:], c.B2[1:]):
        rhs = rhs + tr(b2) @ X @ (a + b @ F0)
    K = -checked_solve(R22x, rhs, SingularBlock, "R22(t,X)")
    W = -checked_solve(R22x, Rx[..., m1:, :m1], SingularBlock, "R22(t,X)")
    return K, W


def aux_coefficients(p: Problem, t, K, W):
    """Coefficients (A_kK, B_kW, M_K, L_KW, R_W) of the embedded one-player problem."""
    c = p.at(t)
    m1 = c.m1
    F0 = _F(c, np.zeros((p.dims.n, p.dims.n)))
    A_K = [a + b @ F0 + b2 @ K for a, b, b2 in zip(c.A, c.B, c.B2)]
    B_W = [b1 + b2 @ W for b1, b2 in zip(c.B1, c.B2)]
    R11, R12, R22 = c.R[..., :m1, :m1], c.R[..., :m1, m1:], c.R[..., m1:, m1:]
    M0 = c.M - c.L @ checked_solve(c.R, tr(c.L), SingularWeight, "R(t)")
    M_K = sym(M0 + tr(K) @ R22 @ K)
    L_KW = tr(K) @ tr(R12) + tr(K) @ R22 @ W
    R_W = sym(R11 + R12 @ W + tr(W) @ tr(R12) + tr(W) @ R22 @ W)
    return A_K, B_W, M_K, L_KW, R_W


def aux_residual(p: Problem, K, W, Y, nodes: int = DEFAULT_NODES) -> float:
    """Sup-node residual of the (K, W) Riccati equation evaluated at ``Y``.

    ``K`` and ``W`` are arrays (constant gains) or callables of ``t``.
    """
    if Y.is_constant:
        ts = p.grid_times(nodes) if p.period is not None else np.zeros(1)
        Ys = np.broadcast_to(Y.samples, ts.shape + Y.samples.shape)
        dY = np.zeros_like(Ys)
    else:
        ts = Y.node_times()[:-1]
        Ys, dY = Y.node_values(), Y.node_derivatives()
    tq = ts if p.period is not None else 0.0
    Kt = K(tq) if callable(K) else np.asarray(K, dtype=float)
    Wt = W(tq) if callable(W) else np.asarray(W, dtype=float)
    A_K, B_W, M_K, L_KW, R_W = aux_coefficients(p, tq, Kt, Wt)
    res = dY + lq_riccati(A_K, B_W, M_K, L_KW, R_W, Ys)
    return float(np.max(fro(res)))
