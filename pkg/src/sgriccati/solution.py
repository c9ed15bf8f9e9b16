"""Symmetric-matrix-valued periodic functions on the shared time grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import fro, min_eig, sym


def node_times(period: float, nodes: int) -> np.ndarray:
    """The N+1 grid nodes 0, h, ..., period."""
    return np.arange(nodes + 1) * (period / nodes)


def half_grid(period: float, nodes: int) -> np.ndarray:
    """Nodes and midpoints, i.e. every time a fixed-step RK4 pass touches."""
    return np.arange(2 * nodes + 1) * (period / (2 * nodes))


@dataclass(frozen=True, eq=False)
class PeriodicSymSolution:
    """A constant symmetric matrix, or samples and derivatives on N+1 nodes.

    Grid solutions are evaluated between nodes by cubic Hermite
    interpolation, which matches the fourth-order accuracy of the integrator
    that produced them.  ``samples[N]`` is the same array as ``samples[0]``.
    """

    samples: np.ndarray
    derivatives: np.ndarray | None = None
    period: float | None = None

    @classmethod
    def constant(cls, X) -> "PeriodicSymSolution":
        X = sym(np.array(X, dtype=float, ndmin=2))
        return cls(X, np.zeros_like(X), None)

    @classmethod
    def grid(cls, samples, derivatives, period) -> "PeriodicSymSolution":
        s = sym(np.array(samples, dtype=float))
        s[-1] = s[0]
        d = None
        if derivatives is not None:
            d = sym(np.array(derivatives, dtype=float))
            d[-1] = d[0]
        return cls(s, d, float(period))

    @property
    def is_constant(self) -> bool:
        return self.period is None

    @property
    def kind(self) -> str:
        return "constant" if self.is_constant else "grid"

    @property
    def n(self) -> int:
        return self.samples.shape[-1]

    @property
    def nodes(self) -> int:
        return 1 if self.is_constant else self.samples.shape[0] - 1

    @property
    def step(self) -> float:
        return self.period / self.nodes

    def node_times(self) -> np.ndarray:
        if self.is_constant:
            return np.zeros(1)
        return node_times(self.period, self.nodes)

    def node_values(self) -> np.ndarray:
        """Values at the N distinct nodes (the duplicate end node dropped)."""
        return self.samples[None] if self.is_constant else self.samples[:-1]

    def node_derivatives(self) -> np.ndarray:
        if self.is_constant:
            return np.zeros_like(self.samples)[None]
        if self.derivatives is None:
            return self._fd_derivatives()
        return self.derivatives[:-1]

    def _fd_derivatives(self):
        # fourth-order central differences on the periodic grid
        y = self.samples[:-1]
        h = self.step
        return (-np.roll(y, -2, 0) + 8 * np.roll(y, -1, 0) - 8 * np.roll(y, 1, 0)
                + np.roll(y, 2, 0)) / (12 * h)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        phase = np.mod(t, self.period)
        h = self.step
        idx = np.minimum(np.floor(phase / h).astype(int), self.nodes - 1)
        s = (phase - idx * h) / h
        return idx, s[..., None, None], h

    def _derivs(self):
        if self.derivatives is None:
            d = self._fd_derivatives()
            return np.concatenate([d, d[:1]], axis=0)
        return self.derivatives

    def at(self, t) -> np.ndarray:
        if self.is_constant:
            return self.samples
        idx, s, h = self._locate(t)
        y0, y1 = self.samples[idx], self.samples[idx + 1]
        d = self._derivs()
        d0, d1 = d[idx], d[idx + 1]
        s2, s3 = s * s, s * s * s
        return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0
                + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1)

    def derivative(self, t) -> np.ndarray:
        if self.is_constant:
            return np.zeros_like(self.samples)
        idx, s, h = self._locate(t)
        y0, y1 = self.samples[idx], self.samples[idx + 1]
        d = self._derivs()
        d0, d1 = d[idx], d[idx + 1]
        s2 = s * s
        return ((6 * s2 - 6 * s) * (y0 - y1) / h + (3 * s2 - 4 * s + 1) * d0
                + (3 * s2 - 2 * s) * d1)

    def sup_norm(self) -> float:
        return float(np.max(fro(self.node_values())))

    def min_eig(self) -> float:
        return float(np.min(min_eig(self.node_values())))

    def __add__(self, other: "PeriodicSymSolution") -> "PeriodicSymSolution":
        if self.is_constant and other.is_constant:
            return PeriodicSymSolution.constant(self.samples + other.samples)
        if self.is_constant:
            return other + self
        if other.is_constant:
            return PeriodicSymSolution.grid(self.samples + other.samples,
                                            self._derivs(), self.period)
        if other.nodes != self.nodes or other.period != self.period:
            raise ValueError("grid solutions live on different grids")
        return PeriodicSymSolution.grid(self.samples + other.samples,
                                        self._derivs() + other._derivs(), self.period)

    def __neg__(self) -> "PeriodicSymSolution":
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, alpha: float) -> "PeriodicSymSolution":
        if self.is_constant:
            return PeriodicSymSolution.constant(alpha * self.samples)
        d = None if self.derivatives is None else alpha * self.derivatives
        return PeriodicSymSolution.grid(alpha * self.samples, d, self.period)


def zeros_like_problem(n: int, period: float | None, nodes: int) -> PeriodicSymSolution:
    if period is None:
        return PeriodicSymSolution.constant(np.zeros((n, n)))
    z = np.zeros((nodes + 1, n, n))
    return PeriodicSymSolution.grid(z, z.copy(), period)
