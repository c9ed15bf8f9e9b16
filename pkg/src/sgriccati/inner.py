"""Riccati subproblems with a definite-sign quadratic term.

Each outer round solves, for its periodic stabilizing solution Z,

    dZ/dt + L*_D(t)(Z) + Q(t)
        - N2(Z)' [W(t) + sum_k Bk2'Z Bk2]^{-1} N2(Z) = 0,
    N2(Z) = B02'Z + sum_k Bk2'Z Dk,

where D is the closed-loop drift of the current outer iterate, W the player-2
weight and Q a positive semidefinite source.  The solver is Newton-Kleinman:
one Lyapunov solve per step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from ._linalg import DEF_RTOL, checked_solve, fro, min_eig, sym, tr
from .errors import DriftUnstable, MaxInnerIterations, SingularBlock, SourceNotPSD
from .lyapunov import ClosedLoopCoeffs, ems_stable, solve_lyapunov
from .operators import _F, _v, lq_riccati
from .problem import DEFAULT_NODES, Problem, _schur, _weighted_R, require_domain
from .solution import PeriodicSymSolution, half_grid

log = logging.getLogger(__name__)


def _memo(fn):
    """Cache ``fn(t)`` for the most recent time argument."""
    last = {}

    def wrapped(t):
        key = np.asarray(t, dtype=float)
        key = (key.shape, key.tobytes())
        if last.get("key") != key:
            last["key"] = key
            last["val"] = fn(t)
        return last["val"]
    return wrapped


@dataclass(frozen=True, eq=False)
class DefiniteRiccatiSpec:
    """Data of one inner problem.  Every field is a function of ``t``."""

    drift: ClosedLoopCoeffs
    inputs: Callable
    weight: Callable
    source: Callable
    m2: int

    @classmethod
    def constant(cls, drift, inputs, weight, source) -> "DefiniteRiccatiSpec":
        """Time-invariant problem from matrices (drift and inputs are lists over k)."""
        inputs = [np.array(b, dtype=float, ndmin=2) for b in inputs]
        weight = np.array(weight, dtype=float, ndmin=2)
        source = sym(np.array(source, dtype=float, ndmin=2))
        return cls(ClosedLoopCoeffs.constant(drift), lambda t: inputs, lambda t: weight,
                   lambda t: source, inputs[0].shape[1])

    @property
    def n(self) -> int:
        return self.drift.n

    @property
    def period(self):
        return self.drift.period


@dataclass(frozen=True)
class InnerOptions:
    tol: float = 1e-12
    max_iter: int = 100
    # "updated": weight R22(t, X + Z); "display": R22(t) + sum Bk2'Z Bk2
    weight_mode: str = "updated"
    # "auto" falls back to a frozen-time CARE gain when zero is not stabilizing
    initial_gain: str = "auto"
    check_closed_loop: bool = True


@dataclass(frozen=True, eq=False)
class InnerResult:
    Z: PeriodicSymSolution
    gain: Callable
    inner_iterations: int
    final_newton_defect: float
    defects: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    initial_gain: str = "zero"
    stability_margin: float = float("nan")


# --------------------------------------------------------------------------
# building the subproblems

def _eval_times(p: Problem, nodes: int):
    return 0.0 if p.period is None else half_grid(p.period, nodes)


def build_initial_spec(p: Problem) -> DefiniteRiccatiSpec:
    """Round-zero problem: drift Ak + Bk F(t,0), source M - L R^{-1} L'."""
    n, m1 = p.dims.n, p.dims.m1

    @_memo
    def data(t):
        c = p.at(t)
        F0 = _F(c, np.zeros((n, n)))
        drift = [a + b @ F0 for a, b in zip(c.A, c.B)]
        Q = sym(c.M + c.L @ F0)
        return drift, c.B2, c.R[..., m1:, m1:], Q

    return DefiniteRiccatiSpec(
        drift=_drift_coeffs(p, data),
        inputs=lambda t: data(t)[1],
        weight=lambda t: data(t)[2],
        source=lambda t: data(t)[3],
        m2=p.dims.m2,
    )


def build_inner_spec(p: Problem, X_h: PeriodicSymSolution, Z_prev: PeriodicSymSolution,
                     X_prev: PeriodicSymSolution, source: str = "v",
                     weight_mode: str = "updated", nodes: int = DEFAULT_NODES
                     ) -> DefiniteRiccatiSpec:
    """Problem for round h >= 1 around the accumulated iterate ``X_h``.

    ``source="v"`` uses ``-V' R22#(t,X_h)^{-1} V`` with V built from the
    previous increment ``Z_prev`` and the previous gain F(t, X_prev).
    ``source="defect"`` uses ``dX_h/dt + G(t, X_h)`` directly; both agree when
    the previous round was solved exactly.
    """
    if source not in ("v", "defect"):
        raise ValueError(f"unknown source form {source!r}")
    m1 = p.dims.m1
    require_domain(p, _eval_times(p, nodes), X_h.at(_eval_times(p, nodes)), "build_inner_spec")

    @_memo
    def data(t):
        c = p.at(t)
        X = X_h.at(t)
        F = _F(c, X)
        drift = [a + b @ F for a, b in zip(c.A, c.B)]
        Rx = _weighted_R(c, X)
        W = Rx[..., m1:, m1:] if weight_mode == "updated" else c.R[..., m1:, m1:]
        if source == "v":
            V = _v(c, X, Z_prev.at(t), _F(c, X_prev.at(t)))
            _, Rs = _schur(Rx, m1)
            Q = -tr(V) @ checked_solve(Rs, V, SingularBlock, "R22#(t,X)")
        else:
            Q = X_h.derivative(t) + lq_riccati(c.A, c.B, c.M, c.L, c.R, X)
        return drift, c.B2, W, sym(Q)

    return DefiniteRiccatiSpec(
        drift=_drift_coeffs(p, data),
        inputs=lambda t: data(t)[1],
        weight=lambda t: data(t)[2],
        source=lambda t: data(t)[3],
        m2=p.dims.m2,
    )


def _drift_coeffs(p: Problem, data) -> ClosedLoopCoeffs:
    if p.period is None:
        return ClosedLoopCoeffs.constant(data(0.0)[0])
    return ClosedLoopCoeffs.periodic(lambda t: data(t)[0], p.dims.n, p.period)


# --------------------------------------------------------------------------
# Newton-Kleinman

def _gain_from(spec: DefiniteRiccatiSpec, Z_at, weight_mode_base: Callable, t):
    D = spec.drift.at(t)
    B2 = spec.inputs(t)
    Z = Z_at(t)
    Wz = weight_mode_base(t)
    rhs = tr(B2[0]) @ Z
    for d, b in zip(D[1:], B2[1:]):
        Wz = Wz + tr(b) @ Z @ b
        rhs = rhs + tr(b) @ Z @ d
    return -checked_solve(sym(Wz), rhs, SingularBlock, "R22(t,X+Z)")


def _closed(spec, gain):
    if spec.period is None:
        T = gain(0.0)
        return ClosedLoopCoeffs.constant(
            [d + b @ T for d, b in zip(spec.drift.at(0.0), spec.inputs(0.0))])
    return ClosedLoopCoeffs.periodic(
        lambda t: [d + b @ gain(t) for d, b in zip(spec.drift.at(t), spec.inputs(t))],
        spec.n, spec.period)


def inner_residual(spec: DefiniteRiccatiSpec, Z: PeriodicSymSolution) -> float:
    """Sup-node residual of the inner Riccati equation at ``Z``."""
    ts = 0.0 if spec.period is None else Z.node_times()[:-1]
    Zs = Z.at(ts)
    dZ = 0.0 if spec.period is None else Z.node_derivatives()
    D = spec.drift.at(ts)
    B2 = spec.inputs(ts)
    zero_L = np.zeros(Zs.shape[:-1] + (spec.m2,))
    res = dZ + lq_riccati(D, B2, spec.source(ts), zero_L, spec.weight(ts), Zs)
    return float(np.max(fro(res)))


def _care_gains(spec, ts, rho):
    D0 = np.broadcast_to(spec.drift.at(ts)[0], np.shape(ts) + (spec.n, spec.n))
    B02 = np.broadcast_to(spec.inputs(ts)[0], np.shape(ts) + (spec.n, spec.m2))
    W = np.broadcast_to(spec.weight(ts), np.shape(ts) + (spec.m2, spec.m2))
    Q = np.broadcast_to(spec.source(ts), np.shape(ts) + (spec.n, spec.n))
    flat = lambda a: a.reshape((-1,) + a.shape[-2:])  # noqa: E731
    out = []
    for d, b, w, q in zip(flat(D0), flat(B02), flat(W), flat(Q)):
        P = sla.solve_continuous_are(d, b, q + np.eye(spec.n), rho * w)
        out.append(-np.linalg.solve(rho * w, b.T @ P))
    return np.array(out).reshape(np.shape(ts) + (spec.m2, spec.n))


def _initial_gain(spec: DefiniteRiccatiSpec, opts: InnerOptions, nodes: int):
    zero = np.zeros((spec.m2, spec.n))
    cert = ems_stable(spec.drift, nodes)
    if cert.stable:
        return (lambda t: zero), "zero"
    if opts.initial_gain != "auto":
        raise DriftUnstable(f"zero initial gain not stabilizing (margin {cert.margin:.3g})")
    ts = 0.0 if spec.period is None else half_grid(spec.period, nodes)
    for rho in (1.0, 1e-2, 1e-4, 1e-6):
        try:
            T = _care_gains(spec, ts, rho)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if spec.period is None:
            gain = (lambda T: lambda t: T)(T)
        else:
            h = spec.period / (2 * nodes)
            gain = (lambda T: lambda t: T[np.rint(np.mod(np.asarray(t), spec.period) / h)
                                          .astype(int)])(T)
        if ems_stable(_closed(spec, gain), nodes).stable:
            log.debug("initial gain from frozen-time CARE, rho=%g", rho)
            return gain, f"care(rho={rho:g})"
    raise DriftUnstable(f"no stabilizing initial gain found (drift margin {cert.margin:.3g})")


def solve_definite_riccati(spec: DefiniteRiccatiSpec, opts: InnerOptions | None = None,
                           nodes: int = DEFAULT_NODES, initial_gain=None) -> InnerResult:
    """Stabilizing periodic solution by Newton-Kleinman iteration."""
    opts = opts or InnerOptions()
    ts = 0.0 if spec.period is None else half_grid(spec.period, nodes)
    Q = spec.source(ts)
    q_min = float(np.min(min_eig(Q)))
    q_scale = float(np.max(fro(Q)))
    if q_min < -DEF_RTOL * (1.0 + q_scale):
        raise SourceNotPSD(f"inner source has eigenvalue {q_min:.3g}")
    if initial_gain is None:
        gain, how = _initial_gain(spec, opts, nodes)
    else:
        gain, how = initial_gain, "given"
    weight = spec.weight
    Z_old = None
    defects, iterates = [], []
    for j in range(1, opts.max_iter + 1):
        g = gain
        source = (lambda g: lambda t: spec.source(t) + tr(g(t)) @ weight(t) @ g(t))(g)
        Z = solve_lyapunov(_closed(spec, g), source, nodes, check_stability=False)
        iterates.append(Z)
        gain = _hold(spec, (lambda Z: lambda t: _gain_from(spec, Z.at, weight, t))(Z), nodes)
        defect = inner_residual(spec, Z)
        defects.append(defect)
        z_norm = Z.sup_norm()
        scale = 1.0 + q_scale + z_norm
        if defect <= opts.tol * scale:
            break
        if Z_old is not None:
            step = float(np.max(fro(Z.node_values() - Z_old.node_values())))
            if step <= opts.tol * (1.0 + z_norm):
                break
        Z_old = Z
    else:
        raise MaxInnerIterations(f"Newton-Kleinman did not converge in {opts.max_iter} steps")
    margin = float("nan")
    if opts.check_closed_loop:
        cert = ems_stable(_closed(spec, gain), nodes)
        margin = cert.margin
        if not cert.stable:
            log.warning("inner closed loop not stable (margin %.3g)", margin)
    return InnerResult(Z, gain, j, defects[-1], defects, iterates, how, margin)


def _hold(spec, gain, nodes):
    """Freeze a gain into a constant (time-invariant) or memoized callable."""
    if spec.period is None:
        T = gain(0.0)
        return lambda t: T
    return _memo(gain)
