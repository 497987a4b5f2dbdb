"""Constants of the a-priori estimates, all functions of the data size ``q``."""

from __future__ import annotations

import math


def c_cancel(q: float) -> float:
    """Cancellation coefficient ``(cosh q - 1) / (cosh q + 1)``."""
    ch = math.cosh(q)
    return (ch - 1.0) / (ch + 1.0)


def xi_max(q: float) -> float:
    """Largest admissible shock weight ``1 / c_cancel(q)`` (infinite at q = 0)."""
    c = c_cancel(q)
    return math.inf if c == 0.0 else 1.0 / c


def c1_lower(q: float) -> float:
    """Lower reflection coefficient at a time step: ``1 / (1 + cosh q)``."""
    return 1.0 / (1.0 + math.cosh(q))


def c1_upper(q: float, eps_minus: float) -> float:
    """Upper reflection coefficient: 1/2 for rarefactions, cosh(q)/2 for shocks."""
    return 0.5 if eps_minus > 0.0 else 0.5 * math.cosh(q)


def c1_minus(q: float) -> float:
    return 0.5 * math.cosh(q)


def trace_c1(q: float) -> float:
    """Initial-data constant of the vertical-trace bound."""
    return 0.5 * (3.0 + math.cosh(q)) * q


def trace_c2(q: float) -> float:
    """Time-step constant of the vertical-trace bound."""
    return c1_minus(q) + 0.5


def momentum_drift(alpha: float, q: float) -> float:
    """Rate constant ``2 alpha q cosh q`` bounding the drift of the momentum integral."""
    return 2.0 * alpha * q * math.cosh(q)


def mass_drift(q: float) -> float:
    """Constant ``2 q exp(2q)`` bounding the drift of the volume integral."""
    return 2.0 * q * math.exp(2.0 * q)
