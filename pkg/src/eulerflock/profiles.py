"""Piecewise-constant periodic profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveVolume


@dataclass(frozen=True)
class LagrangianProfile:
    """Piecewise-constant ``(u, v)`` on the mass torus ``[0, period)``.

    Piece ``k`` covers ``[starts[k], starts[k+1])`` and the last piece wraps
    around to ``starts[0] + period``.
    """

    starts: np.ndarray
    u: np.ndarray
    v: np.ndarray
    period: float

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=float)
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "period", float(self.period))
        if not (starts.ndim == u.ndim == v.ndim == 1 and len(starts) == len(u) == len(v) > 0):
            raise ValueError("starts, u and v must be 1-d arrays of equal, non-zero length")
        if np.any(np.diff(starts) < 0) or starts[0] < 0 or starts[-1] >= self.period:
            raise ValueError("starts must be non-decreasing in [0, period)")
        if not np.all(u > 0):
            raise NonPositiveVolume("specific volume must be positive on every piece")

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.append(self.starts, self.starts[0] + self.period))

    def integrals(self) -> tuple[float, float]:
        """``(int u dy, int v dy)`` over one period."""
        w = self.lengths
        return float(np.dot(w, self.u)), float(np.dot(w, self.v))

    def tv(self) -> tuple[float, float]:
        """Periodic total variation of ``ln u`` and of ``v``."""
        lu = np.log(self.u)
        return (
            float(np.abs(np.diff(np.append(lu, lu[0]))).sum()),
            float(np.abs(np.diff(np.append(self.v, self.v[0]))).sum()),
        )

    def q(self, alpha: float) -> float:
        """Size of the data: ``TV(ln u)/2 + TV(v)/(2 alpha)``."""
        tl, tv = self.tv()
        return 0.5 * tl + tv / (2.0 * alpha)

    def __call__(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at mass positions ``y`` (reduced modulo the period)."""
        y = np.mod(np.asarray(y, dtype=float), self.period)
        k = np.searchsorted(self.starts, y, side="right") - 1
        k = np.where(k < 0, len(self.starts) - 1, k)
        return self.u[k], self.v[k]


def uniform_profile(u: np.ndarray, v: np.ndarray, period: float) -> LagrangianProfile:
    n = len(u)
    return LagrangianProfile(np.arange(n) * (period / n), u, v, period)


def constant_profile(u: float, v: float, period: float) -> LagrangianProfile:
    return LagrangianProfile(np.zeros(1), np.array([u]), np.array([v]), period)


def n_cells(nu: int, period: float) -> int:
    """Cell count ``ceil(nu * period)`` used for projections."""
    return max(1, int(math.ceil(nu * period - 1e-9)))
