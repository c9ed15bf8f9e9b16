"""Problem data, periodic coefficients and the sign-condition predicates.

A :class:`Problem` holds every coefficient of the game Riccati equation

    dX/dt + A0'X + XA0 + sum_k Ak'XAk + M
        - (XB0 + sum_k Ak'XBk + L)(R + sum_k Bk'XBk)^{-1}(B0'X + sum_k Bk'XAk + L') = 0

with the inputs split into a maximizing player (block 1) and a minimizing
player (block 2).  ``Problem.at(t)`` returns a :class:`Coeffs` snapshot whose
arrays carry the leading shape of ``t``, so every operator in the package can
work on a single time or on a whole grid at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._linalg import DEF_RTOL, checked_solve, fro, max_eig, min_eig, sym, tr
from .errors import DomainViolation, SingularBlock

SYM_TOL = 1e-12
DEFAULT_NODES = 256


@dataclass(frozen=True)
class Dims:
    n: int
    m1: int
    m2: int
    r: int

    def __post_init__(self):
        if self.n < 1 or self.m1 < 1 or self.m2 < 1 or self.r < 0:
            raise ValueError(f"invalid dimensions {self}")

    @property
    def m(self) -> int:
        return self.m1 + self.m2


@dataclass(frozen=True, eq=False)
class PeriodicMatrixFunction:
    """A constant matrix or a truncated Fourier series in t.

    ``harmonics[j-1] = (C_j, S_j)`` contributes
    ``C_j cos(2 pi j t / period) + S_j sin(2 pi j t / period)``.
    """

    mean: np.ndarray
    harmonics: tuple = ()
    period: float | None = None

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, ndmin=2)
        object.__setattr__(self, "mean", mean)
        hs = tuple((np.array(c, dtype=float, ndmin=2), np.array(s, dtype=float, ndmin=2))
                   for c, s in self.harmonics)
        object.__setattr__(self, "harmonics", hs)
        for c, s in hs:
            if c.shape != mean.shape or s.shape != mean.shape:
                raise ValueError("harmonic shapes differ from the mean")
        if hs and (self.period is None or not self.period > 0):
            raise ValueError("a Fourier coefficient needs a positive period")
        if not np.all(np.isfinite(mean)) or any(
                not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))) for c, s in hs):
            raise ValueError("non-finite coefficient entries")

    @classmethod
    def constant(cls, value) -> "PeriodicMatrixFunction":
        return cls(np.array(value, dtype=float, ndmin=2))

    @classmethod
    def fourier(cls, mean, harmonics, period) -> "PeriodicMatrixFunction":
        return cls(np.array(mean, dtype=float, ndmin=2), tuple(harmonics), float(period))

    @property
    def shape(self):
        return self.mean.shape

    @property
    def is_constant(self) -> bool:
        return not self.harmonics

    def at(self, t) -> np.ndarray:
        """Value at ``t`` (scalar or array).  Constants carry no time axis."""
        if self.is_constant:
            return self.mean
        t = np.asarray(t, dtype=float)
        # fmod keeps value(t) == value(t + period) whenever t + period is exact
        phase = 2.0 * np.pi * np.fmod(t, self.period) / self.period
        out = np.broadcast_to(self.mean, t.shape + self.mean.shape).copy()
        for j, (c, s) in enumerate(self.harmonics, start=1):
            out += np.cos(j * phase)[..., None, None] * c + np.sin(j * phase)[..., None, None] * s
        return out


def as_pmf(value) -> PeriodicMatrixFunction:
    if isinstance(value, PeriodicMatrixFunction):
        return value
    return PeriodicMatrixFunction.constant(value)


@dataclass(frozen=True)
class Coeffs:
    """All coefficients frozen at one time (or stacked over a time array)."""

    A: list
    B: list
    B1: list
    B2: list
    M: np.ndarray
    L: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    R: np.ndarray
    m1: int

    @property
    def r(self) -> int:
        return len(self.A) - 1


@dataclass(frozen=True, eq=False)
class Problem:
    dims: Dims
    A: tuple
    B1: tuple
    B2: tuple
    M: PeriodicMatrixFunction
    L1: PeriodicMatrixFunction
    L2: PeriodicMatrixFunction
    R11: PeriodicMatrixFunction
    R12: PeriodicMatrixFunction
    R22: PeriodicMatrixFunction
    period: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("A", "B1", "B2"):
            object.__setattr__(self, name, tuple(as_pmf(v) for v in getattr(self, name)))
        for name in ("M", "L1", "L2", "R11", "R12", "R22"):
            object.__setattr__(self, name, as_pmf(getattr(self, name)))
        if self.period is not None:
            object.__setattr__(self, "period", float(self.period))

    @classmethod
    def from_matrices(cls, A, B1, B2, M, L1, L2, R11, R12, R22, period=None) -> "Problem":
        """Build a problem from (constant or periodic) coefficient values."""
        A = [as_pmf(a) for a in A]
        B1 = [as_pmf(b) for b in B1]
        B2 = [as_pmf(b) for b in B2]
        n = A[0].shape[0]
        dims = Dims(n=n, m1=B1[0].shape[1], m2=B2[0].shape[1], r=len(A) - 1)
        return cls(dims, tuple(A), tuple(B1), tuple(B2), M, L1, L2, R11, R12, R22, period)

    def coefficients(self) -> dict:
        return {"A": self.A, "B1": self.B1, "B2": self.B2, "M": self.M, "L1": self.L1,
                "L2": self.L2, "R11": self.R11, "R12": self.R12, "R22": self.R22}

    def _all(self):
        for name, v in self.coefficients().items():
            if isinstance(v, tuple):
                for k, f in enumerate(v):
                    yield f"{name}[{k}]", f
            else:
                yield name, v

    @property
    def time_invariant(self) -> bool:
        return self.period is None

    def grid_times(self, nodes: int = DEFAULT_NODES) -> np.ndarray:
        """Verification nodes: 0 for time-invariant problems, else N nodes per period."""
        if self.period is None:
            return np.zeros(1)
        return np.arange(nodes) * (self.period / nodes)

    def at(self, t=0.0) -> Coeffs:
        if self.period is None:
            c = self._cache.get("ti")
            if c is None:
                c = self._snapshot(0.0)
                self._cache["ti"] = c
            return c
        return self._snapshot(t)

    def _snapshot(self, t) -> Coeffs:
        A = [f.at(t) for f in self.A]
        B1 = [f.at(t) for f in self.B1]
        B2 = [f.at(t) for f in self.B2]
        B = [_hcat(b1, b2) for b1, b2 in zip(B1, B2)]
        L1, L2 = self.L1.at(t), self.L2.at(t)
        R11, R12, R22 = self.R11.at(t), self.R12.at(t), self.R22.at(t)
        top = _hcat(R11, R12)
        bottom = _hcat(tr(R12), R22)
        lead = np.broadcast_shapes(top.shape[:-2], bottom.shape[:-2])
        R = np.concatenate([np.broadcast_to(top, lead + top.shape[-2:]),
                            np.broadcast_to(bottom, lead + bottom.shape[-2:])], axis=-2)
        return Coeffs(A=A, B=B, B1=B1, B2=B2, M=self.M.at(t), L=_hcat(L1, L2), L1=L1, L2=L2,
                      R=R, m1=self.dims.m1)


def _hcat(a, b):
    lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    return np.concatenate([np.broadcast_to(a, lead + a.shape[-2:]),
                           np.broadcast_to(b, lead + b.shape[-2:])], axis=-1)


# --------------------------------------------------------------------------
# validation

def validate_problem(p: Problem, nodes: int = DEFAULT_NODES) -> list[str]:
    """Return every violated structural invariant; an empty list means OK."""
    out = []
    d = p.dims
    r1 = d.r + 1
    for name, seq in (("A", p.A), ("B1", p.B1), ("B2", p.B2)):
        if len(seq) != r1:
            out.append(f"{name} has {len(seq)} entries, expected r+1={r1}")
    expected = {"M": (d.n, d.n), "L1": (d.n, d.m1), "L2": (d.n, d.m2),
                "R11": (d.m1, d.m1), "R12": (d.m1, d.m2), "R22": (d.m2, d.m2)}
    for k, f in enumerate(p.A):
        expected[f"A[{k}]"] = (d.n, d.n)
    for k, f in enumerate(p.B1):
        expected[f"B1[{k}]"] = (d.n, d.m1)
    for k, f in enumerate(p.B2):
        expected[f"B2[{k}]"] = (d.n, d.m2)
    shape_ok = True
    for name, f in p._all():
        if f.shape != expected[name]:
            out.append(f"{name} has shape {f.shape}, expected {expected[name]}")
            shape_ok = False
        if not f.is_constant:
            if p.period is None:
                out.append(f"{name} is periodic but the problem is time-invariant")
            elif not math.isclose(f.period, p.period, rel_tol=0, abs_tol=1e-14 * p.period):
                out.append(f"{name} period {f.period} differs from problem period {p.period}")
    if p.period is not None and not p.period > 0:
        out.append(f"period must be positive, got {p.period}")
    if not shape_ok or out:
        return out
    for i, t in enumerate(p.grid_times(nodes)):
        c = p.at(t)
        R11 = c.R[..., :d.m1, :d.m1]
        R22 = c.R[..., d.m1:, d.m1:]
        for name, mat in (("M", c.M), ("R11", R11), ("R22", R22)):
            skew = np.max(np.abs(mat - tr(mat)))
            if skew > SYM_TOL * (1.0 + np.max(np.abs(mat))):
                out.append(f"{name} asymmetric at t={t:g} (skew {skew:.3g})")
        if not min_eig(R22) > DEF_RTOL * (1.0 + fro(R22)):
            out.append(f"R22 not positive definite at t={t:g}")
        if p.period is None:
            break
    return out


# --------------------------------------------------------------------------
# weights and sign conditions

def weighted_R(p: Problem, t, X) -> np.ndarray:
    """R(t) + sum_k Bk(t)' X Bk(t)."""
    return _weighted_R(p.at(t), X)


def _weighted_R(c: Coeffs, X):
    W = c.R
    for b in c.B[1:]:
        W = W + tr(b) @ X @ b
    return sym(W)


def _schur(Rx, m1):
    R11 = Rx[..., :m1, :m1]
    R12 = Rx[..., :m1, m1:]
    R22 = Rx[..., m1:, m1:]
    R22_inv_R21 = checked_solve(R22, tr(R12), SingularBlock, "R22(t,X)")
    return sym(R22), sym(R11 - R12 @ R22_inv_R21)


def schur_blocks(p: Problem, t, X):
    """Return (R22(t,X), its Schur complement R11 - R12 R22^{-1} R21)."""
    return _schur(weighted_R(p, t, X), p.dims.m1)


@dataclass(frozen=True)
class SignConditionReport:
    lambda_min_R22: float
    lambda_max_Rsharp: float
    in_domain: bool
    diagnostic: str = ""


def dom_G_membership(p: Problem, X, nodes: int = DEFAULT_NODES) -> SignConditionReport:
    """Check R22(t,X) succ 0 and R22#(t,X) prec 0 at every verification node.

    ``X`` is a :class:`~sgriccati.solution.PeriodicSymSolution` or a matrix.
    """
    ts = p.grid_times(nodes) if p.period is not None else 0.0
    Xs = X.at(ts) if hasattr(X, "at") else np.asarray(X, dtype=float)
    try:
        R22, Rs = schur_blocks(p, ts, Xs)
    except SingularBlock as e:
        return SignConditionReport(float("nan"), float("nan"), False, str(e))
    lo = float(np.min(min_eig(R22)))
    hi = float(np.max(max_eig(Rs)))
    ok = bool(np.all(min_eig(R22) > DEF_RTOL * (1 + fro(R22)))
              and np.all(max_eig(Rs) < -DEF_RTOL * (1 + fro(Rs))))
    return SignConditionReport(lo, hi, ok)


def require_domain(p: Problem, t, X, where=""):
    """Raise :class:`DomainViolation` if the sign conditions fail anywhere in ``t``."""
    try:
        R22, Rs = schur_blocks(p, t, X)
    except SingularBlock as e:
        raise DomainViolation(f"{where}: {e}") from e
    if not (np.all(min_eig(R22) > DEF_RTOL * (1 + fro(R22)))
            and np.all(max_eig(Rs) < -DEF_RTOL * (1 + fro(Rs)))):
        raise DomainViolation(
            f"{where}: sign conditions fail (min eig R22 {np.min(min_eig(R22)):.3g}, "
            f"max eig R22# {np.max(max_eig(Rs)):.3g})")


# --------------------------------------------------------------------------
# dissipation matrix

def dissipation_matrix(p: Problem, t, X, dXdt=None) -> np.ndarray:
    """The (n+m) x (n+m) block matrix [[dX/dt + A-terms + M, S'], [S, R(t,X)]]."""
    c = p.at(t)
    X = np.asarray(X, dtype=float)
    top = tr(c.A[0]) @ X + X @ c.A[0]
    for a in c.A[1:]:
        top = top + tr(a) @ X @ a
    top = top + c.M
    if dXdt is not None:
        top = top + dXdt
    S = tr(c.B[0]) @ X + tr(c.L)
    for a, b in zip(c.A[1:], c.B[1:]):
        S = S + tr(b) @ X @ a
    Rx = _weighted_R(c, X)
    lead = np.broadcast_shapes(top.shape[:-2], S.shape[:-2], Rx.shape[:-2])
    upper = np.concatenate([np.broadcast_to(top, lead + top.shape[-2:]),
                            np.broadcast_to(tr(S), lead + tr(S).shape[-2:])], axis=-1)
    lower = np.concatenate([np.broadcast_to(S, lead + S.shape[-2:]),
                            np.broadcast_to(Rx, lead + Rx.shape[-2:])], axis=-1)
    return sym(np.concatenate([upper, lower], axis=-2))


def gamma_membership(p: Problem, X, nodes: int = DEFAULT_NODES) -> bool:
    """Whether the dissipation matrix is PSD and R(t,X) succ 0 on the grid."""
    ts = p.grid_times(nodes) if p.period is not None else 0.0
    if hasattr(X, "at"):
        Xs, dX = X.at(ts), X.derivative(ts)
    else:
        Xs, dX = np.asarray(X, dtype=float), None
    lam = dissipation_matrix(p, ts, Xs, dX)
    n = p.dims.n
    scale = 1.0 + fro(lam)
    Rx = lam[..., n:, n:]
    return bool(np.all(min_eig(lam) >= -DEF_RTOL * scale)
                and np.all(min_eig(Rx) > DEF_RTOL * (1 + fro(Rx))))


__all__ = [
    "Dims", "PeriodicMatrixFunction", "Problem", "Coeffs", "SignConditionReport",
    "validate_problem", "weighted_R", "schur_blocks", "dom_G_membership",
    "dissipation_matrix", "gamma_membership", "require_domain", "as_pmf",
]


def constant_problem(A: Sequence, B1: Sequence, B2: Sequence, M, L1, L2, R11, R12, R22) -> Problem:
    """Shorthand for a time-invariant problem."""
    return Problem.from_matrices(A, B1, B2, M, L1, L2, R11, R12, R22, period=None)
