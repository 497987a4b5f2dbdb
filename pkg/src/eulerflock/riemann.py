"""Wave curves and the exact Riemann solver for the isothermal p-system.

The homogeneous Lagrangian system is

    u_t - v_y = 0,    v_t + (alpha**2 / u)_y = 0,

with characteristic speeds ``-alpha/u`` (family 1) and ``+alpha/u``
(family 2).  Every wave is labelled by a signed strength ``eps``: positive
for rarefactions, negative for shocks.  Both families share the velocity
parametrization ``v = v_l + 2 alpha h(eps)`` with ``h(eps) = eps`` for
``eps >= 0`` and ``sinh(eps)`` otherwise, while ``u`` changes by the factor
``exp(+2 eps)`` across a 1-wave and ``exp(-2 eps)`` across a 2-wave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

from .errors import InvalidThreshold, NoConvergence, NonPositiveVolume, NotAShock

# strengths below this are returned as exact zeros by solve_riemann
STRENGTH_CLAMP = 1e-14


class WaveFamily(IntEnum):
    FAMILY1 = 1
    FAMILY2 = 2

    @property
    def other(self) -> "WaveFamily":
        return WaveFamily.FAMILY2 if self is WaveFamily.FAMILY1 else WaveFamily.FAMILY1


class State(NamedTuple):
    """Constant Lagrangian state: specific volume ``u`` and velocity ``v``."""

    u: float
    v: float


@dataclass(frozen=True)
class PressureLaw:
    """Linear pressure ``p(rho) = alpha**2 rho``, i.e. ``alpha**2 / u``."""

    alpha: float

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    def pressure(self, u: float) -> float:
        return self.alpha * self.alpha / u

    def char_speed(self, family: int, u: float) -> float:
        return -self.alpha / u if family == 1 else self.alpha / u


class RiemannFan(NamedTuple):
    eps1: float
    eps2: float
    middle: State


def strength_fn(eps: float) -> float:
    """Return ``h(eps)``: the identity for ``eps >= 0`` and ``sinh`` below."""
    return eps if eps >= 0.0 else math.sinh(eps)


def _dstrength(eps: float) -> float:
    return 1.0 if eps >= 0.0 else math.cosh(eps)


def wave_curve(family: int, left: State, eps: float, law: PressureLaw) -> State:
    """State reached from ``left`` across a ``family`` wave of strength ``eps``."""
    h = eps if eps >= 0.0 else math.sinh(eps)
    if family == 1:
        u = left.u * math.exp(2.0 * eps)
    else:
        u = left.u * math.exp(-2.0 * eps)
    return State(u, left.v + 2.0 * law.alpha * h)


def strength_bound(left: State, right: State, law: PressureLaw) -> float:
    """Upper bound on ``|eps1| + |eps2|`` for the Riemann problem (left, right)."""
    return max(
        0.5 * abs(math.log(right.u / left.u)),
        abs(right.v - left.v) / (2.0 * law.alpha),
    )


def _clamp(eps: float) -> float:
    return 0.0 if abs(eps) < STRENGTH_CLAMP else eps


def _root(d: float, delta: float, tol: float, max_iter: int) -> float:
    """Root of ``h(x) + h(x + d) = delta``.

    The left side is strictly increasing with slope at least 2 wherever both
    terms are on one branch, so the root is bracketed by the branch points
    ``min(0, -d)`` and ``max(0, -d)`` whenever it is not given in closed form
    by one of the two pure branches.
    """
    lo = min(0.0, -d)
    hi = max(0.0, -d)
    f_lo = strength_fn(lo) + strength_fn(lo + d) - delta
    if f_lo >= 0.0:
        # both waves are shocks: 2 sinh(x + d/2) cosh(d/2) = delta
        return math.asinh(delta / (2.0 * math.cosh(0.5 * d))) - 0.5 * d
    f_hi = strength_fn(hi) + strength_fn(hi + d) - delta
    if f_hi <= 0.0:
        # both waves are rarefactions: 2x + d = delta
        return 0.5 * (delta - d)
    # one shock, one rarefaction: safeguarded Newton inside [lo, hi]
    x = lo - f_lo * (hi - lo) / (f_hi - f_lo)
    for _ in range(max_iter):
        f = strength_fn(x) + strength_fn(x + d) - delta
        if abs(f) <= tol:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        step = f / (_dstrength(x) + _dstrength(x + d))
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4e-16 * max(abs(lo), abs(hi)):
            return x_new
        x = x_new
    raise NoConvergence(
        f"Riemann iteration did not reach tol={tol:g} within {max_iter} steps "
        f"(d={d!r}, delta={delta!r})"
    )


def solve_riemann(
    left: State,
    right: State,
    law: PressureLaw,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> RiemannFan:
    """Solve the homogeneous Riemann problem between ``left`` and ``right``.

    Returns the strengths of the 1-wave and the 2-wave together with the
    middle state ``wave_curve(1, left, eps1)``.  Strengths smaller than
    ``STRENGTH_CLAMP`` in magnitude come back as exact zeros.

    Raises
    ------
    NonPositiveVolume
        If either state has ``u <= 0``.
    NoConvergence
        If the mixed-branch Newton iteration exceeds ``max_iter``.
    """
    if not (left.u > 0.0 and right.u > 0.0):
        raise NonPositiveVolume(f"non-positive specific volume in {left!r}, {right!r}")
    d = 0.5 * math.log(left.u / right.u)
    delta = (right.v - left.v) / (2.0 * law.alpha)
    eps1 = _root(d, delta, tol, max_iter)
    eps2 = _clamp(eps1 + d)
    eps1 = _clamp(eps1)
    if eps1 == 0.0:
        middle = left
    elif eps2 == 0.0:
        middle = right
    else:
        middle = wave_curve(1, left, eps1, law)
    return RiemannFan(eps1, eps2, middle)


def shock_speed(family: int, u_l: float, u_r: float, law: PressureLaw) -> float:
    """Rankine-Hugoniot speed of a ``family`` shock joining ``u_l`` to ``u_r``."""
    if family == 1:
        if not u_r < u_l:
            raise NotAShock(f"1-shock needs u_r < u_l, got u_l={u_l!r}, u_r={u_r!r}")
        return -law.alpha / math.sqrt(u_l * u_r)
    if not u_r > u_l:
        raise NotAShock(f"2-shock needs u_r > u_l, got u_l={u_l!r}, u_r={u_r!r}")
    return law.alpha / math.sqrt(u_l * u_r)


def rarefaction_front_speed(family: int, right: State, law: PressureLaw) -> float:
    """Speed of a rarefaction front: the characteristic speed of its right state."""
    return -law.alpha / right.u if family == 1 else law.alpha / right.u


def split_rarefaction(eps: float, eta: float) -> list[float]:
    """Split a rarefaction of strength ``eps`` into ``floor(eps/eta) + 1`` fronts.

    All pieces are ``eps/N`` except the last, which absorbs the rounding
    remainder so that the pieces sum to ``eps``.
    """
    if not eta > 0.0:
        raise InvalidThreshold(f"rarefaction threshold must be positive, got {eta!r}")
    if not eps > 0.0:
        raise ValueError(f"only rarefactions (eps > 0) are split, got {eps!r}")
    n = int(math.floor(eps / eta)) + 1
    while True:
        piece = eps / n
        last = eps - piece * (n - 1)
        if piece < eta and last < eta:
            break
        n += 1
    pieces = [piece] * n
    pieces[-1] = last
    return pieces
