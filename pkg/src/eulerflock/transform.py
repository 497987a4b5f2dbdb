"""Eulerian and Lagrangian descriptions of the same periodic flow.

Eulerian data ``(rho, vv)`` on a circle of length ``ell`` is first moved to
the frame in which the total momentum vanishes (``vv -> vv - vbar`` with
``vbar = M1 / M``) and then mapped to mass coordinates ``y = chi(x)``, the
cumulative mass, where ``u = 1 / rho`` and ``v = vv - vbar``.  The inverse
map integrates ``u`` in ``y`` and undoes the Galilean shift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import DegenerateJump, NonPositiveDensity
from .profiles import LagrangianProfile, n_cells
from .riemann import PressureLaw

Profile1D = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EulerianProfile:
    """Piecewise-constant density and velocity on ``[0, period)``.

    Piece ``k`` covers ``[starts[k], starts[k+1])``; the last piece wraps
    around to ``starts[0] + period``.  ``vbar`` is the Galilean shift that
    was removed from the velocity of the Lagrangian data this profile came
    from (zero for raw input data).
    """

    starts: np.ndarray
    rho: np.ndarray
    vv: np.ndarray
    period: float
    vbar: float = 0.0

    def __post_init__(self) -> None:
        starts = np.asarray(self.starts, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        vv = np.asarray(self.vv, dtype=float)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "vv", vv)
        object.__setattr__(self, "period", float(self.period))
        if not (starts.ndim == rho.ndim == vv.ndim == 1 and len(starts) == len(rho) == len(vv) > 0):
            raise ValueError("starts, rho and vv must be 1-d arrays of equal, non-zero length")
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period!r}")
        if np.any(np.diff(starts) <= 0) or starts[0] < 0 or starts[-1] >= self.period:
            raise ValueError("starts must be strictly increasing in [0, period)")
        if not np.all(rho > 0):
            raise NonPositiveDensity("density must be positive on every piece")

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.append(self.starts, self.starts[0] + self.period))

    @property
    def mass(self) -> float:
        return float(np.dot(self.lengths, self.rho))

    @property
    def momentum(self) -> float:
        return float(np.dot(self.lengths, self.rho * self.vv))

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.mod(np.asarray(x, dtype=float), self.period)
        k = np.searchsorted(self.starts, x, side="right") - 1
        k = np.where(k < 0, len(self.starts) - 1, k)
        return self.rho[k], self.vv[k]


@dataclass(frozen=True)
class MassMap:
    """Cumulative mass ``chi(x) = int_0^x rho`` of a piecewise-constant density.

    ``xs`` are the break points in ``[0, ell]`` (first 0, last ``ell``) and
    ``breakpoints`` the values of ``chi`` there, so ``breakpoints[-1]`` is
    the total mass.
    """

    xs: np.ndarray
    breakpoints: np.ndarray

    @classmethod
    def of(cls, profile: EulerianProfile) -> "MassMap":
        cuts = profile.starts
        xs = np.unique(np.concatenate(([0.0], cuts, [profile.period])))
        mids = 0.5 * (xs[:-1] + xs[1:])
        rho, _ = profile(mids)
        chi = np.concatenate(([0.0], np.cumsum(rho * np.diff(xs))))
        return cls(xs, chi)

    @property
    def total(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.xs, self.breakpoints)

    def inverse(self, y) -> np.ndarray:
        return np.interp(y, self.breakpoints, self.xs)

    def lipschitz(self) -> tuple[float, float]:
        """Smallest and largest slope, i.e. ``(inf rho, sup rho)``."""
        s = np.diff(self.breakpoints) / np.diff(self.xs)
        return float(s.min()), float(s.max())


class LagrangianData(NamedTuple):
    profile: LagrangianProfile
    vbar: float
    M: float
    ell: float


def eulerian_to_lagrangian(profile: EulerianProfile) -> LagrangianData:
    """Mass-coordinate data with zero mean velocity.

    Returns the profile ``(u, v)`` on ``[0, M)``, the removed shift
    ``vbar = int rho vv dx / M``, the mass ``M`` and the length ``ell``.
    Break points are the images of the Eulerian break points under the mass
    map.  The velocity mean is removed twice so that ``int v dy`` vanishes
    to roundoff.
    """
    chi = MassMap.of(profile)
    M = chi.total
    masses = profile.lengths * profile.rho
    vbar = float(np.dot(masses, profile.vv)) / M
    v = profile.vv - vbar
    v = v - float(np.dot(masses, v)) / M
    ys = chi(profile.starts)
    ys = np.where(ys >= M, 0.0, ys)
    order = np.argsort(ys, kind="stable")
    lag = LagrangianProfile(ys[order], (1.0 / profile.rho)[order], v[order], M)
    return LagrangianData(lag, vbar, M, profile.period)


def lagrangian_to_eulerian(tape, vbar: float = 0.0, t: float = 0.0) -> EulerianProfile:
    """Eulerian profile of a tape (or Lagrangian profile) in the original frame.

    Piece ``k`` of mass length ``dy_k`` becomes an interval of length
    ``u_k dy_k`` starting at ``x(y) = int_0^y u``; the period is
    ``ell(t) = int u dy``.  Finally every point is moved to
    ``x + vbar t`` modulo ``ell(t)`` and ``vbar`` is added back to the
    velocity.
    """
    prof = tape if isinstance(tape, LagrangianProfile) else tape.profile()
    ys = prof.starts
    u = prof.u
    v = prof.v
    if ys[0] > 0.0:
        # a piece wraps through y = 0: split it there
        ys = np.concatenate(([0.0], ys))
        u = np.concatenate(([u[-1]], u))
        v = np.concatenate(([v[-1]], v))
    dy = np.diff(np.append(ys, prof.period))
    keep = dy > 0
    u, v, dy = u[keep], v[keep], dy[keep]
    xl = u * dy
    ell = float(xl.sum())
    xs = np.concatenate(([0.0], np.cumsum(xl)[:-1]))
    if vbar != 0.0 and t != 0.0:
        xs = np.mod(xs + vbar * t, ell)
        xs = np.where(xs >= ell, 0.0, xs)
        order = np.argsort(xs, kind="stable")
        xs, u, v = xs[order], u[order], v[order]
    return _merge(xs, 1.0 / u, v + vbar, ell, vbar)


def _merge(xs, rho, vv, ell, vbar) -> EulerianProfile:
    """Drop repeated start points (zero-length pieces) and equal neighbours."""
    keep = np.append(np.diff(xs) > 0, True)
    xs, rho, vv = xs[keep], rho[keep], vv[keep]
    if len(xs) > 1:
        same = np.append(False, (rho[1:] == rho[:-1]) & (vv[1:] == vv[:-1]))
        xs, rho, vv = xs[~same], rho[~same], vv[~same]
    return EulerianProfile(xs, rho, vv, ell, vbar)


def rh_residual_eulerian(tape, front, law: PressureLaw, vbar: float = 0.0) -> tuple[float, float]:
    """Residuals of the two Eulerian Rankine-Hugoniot quotients at a front.

    ``front`` is a :class:`~eulerflock.engine.Front` or its position in
    ``tape.fronts()``.  The Eulerian speed of the front is
    ``v_l + vbar + u_l mu``; the residuals are its differences from
    ``[m] / [rho]`` and ``[m^2/rho + p] / [m]`` with ``m = rho vv``.

    Raises
    ------
    DegenerateJump
        If the jump in ``rho`` or in ``m`` vanishes.
    """
    if isinstance(front, (int, np.integer)):
        front = tape.fronts()[int(front)]
    (ul, vl), (ur, vr) = front.left, front.right
    rl, rr = 1.0 / ul, 1.0 / ur
    wl, wr = vl + vbar, vr + vbar
    ml, mr = rl * wl, rr * wr
    drho = rr - rl
    dm = mr - ml
    if abs(drho) <= 1e-14 * max(rl, rr) or abs(dm) <= 1e-14 * (abs(ml) + abs(mr) + law.alpha * max(rl, rr)):
        raise DegenerateJump(f"vanishing jump at front {front.index}: drho={drho!r}, dm={dm!r}")
    a2 = law.alpha * law.alpha
    xdot = wl + ul * front.speed
    s_mass = dm / drho
    s_mom = ((mr * mr / rr + a2 * rr) - (ml * ml / rl + a2 * rl)) / dm
    return xdot - s_mass, xdot - s_mom


def project_lagrangian(u_fn: Profile1D, v_fn: Profile1D, period: float, nu: int,
                       center: bool = True) -> LagrangianProfile:
    """Midpoint samples of ``(u, v)`` on ``ceil(nu * period)`` equal cells.

    With ``center`` the sampled ``v`` has its mean removed so that
    ``int v dy = 0`` for the projected data.
    """
    n = n_cells(nu, period)
    dy = period / n
    mids = (np.arange(n) + 0.5) * dy
    u = np.asarray(u_fn(mids), dtype=float) * np.ones(n)
    v = np.asarray(v_fn(mids), dtype=float) * np.ones(n)
    if center:
        v = v - v.mean()
    return LagrangianProfile(np.arange(n) * dy, u, v, period)


def project_eulerian(rho_fn: Profile1D, vv_fn: Profile1D, ell: float, n: int) -> EulerianProfile:
    """Midpoint samples of ``(rho, vv)`` on ``n`` equal cells of ``[0, ell)``."""
    dx = ell / n
    mids = (np.arange(n) + 0.5) * dx
    rho = np.asarray(rho_fn(mids), dtype=float) * np.ones(n)
    vv = np.asarray(vv_fn(mids), dtype=float) * np.ones(n)
    return EulerianProfile(np.arange(n) * dx, rho, vv, ell)


def bi_lipschitz_ok(profile: EulerianProfile, lag: Union[LagrangianProfile, None] = None,
                    rtol: float = 1e-12) -> bool:
    """Check ``inf u |dy| <= |dx| <= sup u |dy|`` on all break-point pairs."""
    chi = MassMap.of(profile)
    dx = np.diff(chi.xs)
    dy = np.diff(chi.breakpoints)
    u = dx / dy
    lo, hi = u.min(), u.max()
    if lag is not None:
        lo, hi = min(lo, lag.u.min()), max(hi, lag.u.max())
    X = chi.xs[:, None] - chi.xs[None, :]
    Y = chi.breakpoints[:, None] - chi.breakpoints[None, :]
    return bool(np.all(np.abs(X) >= lo * np.abs(Y) * (1 - rtol))
                and np.all(np.abs(X) <= hi * np.abs(Y) * (1 + rtol) + 1e-300))


__all__ = [
    "EulerianProfile", "MassMap", "LagrangianData", "eulerian_to_lagrangian",
    "lagrangian_to_eulerian", "rh_residual_eulerian", "project_lagrangian",
    "project_eulerian", "bi_lipschitz_ok",
]
