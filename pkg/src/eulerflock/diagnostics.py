"""Functionals and a-priori estimates evaluated on tapes and run logs.

Everything here reads a tape (or the event log a diagnosed run leaves
behind) and never modifies it.  The log columns are those of
``eulerflock._kernel``: time, event kind, then ``L``, ``L_xi``,
``TV ln u``, ``TV v``, ``U``, ``V``, ``inf u``, ``sup u``, the front count
and the closure error (NaN where it was not computed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernel as K
from .engine import Front, RunParams, Tape
from .errors import InvalidWeight, NonPositiveDensity, NotAShock
from .estimates import c_cancel, c1_minus, mass_drift, momentum_drift, trace_c1, trace_c2, xi_max
from .riemann import PressureLaw

EVENT_KINDS = ("initial", "collision", "step_before", "step_after", "final")
LOG_COLUMNS = ("t", "event_kind", "L", "L_xi", "tv_ln_u", "tv_v", "U", "V", "inf_u", "sup_u",
               "n_fronts", "closure")


@dataclass(frozen=True)
class EntropyPair:
    """Entropy ``v^2/2 - alpha^2 ln u`` with flux ``alpha^2 v / u``."""

    alpha: float

    def eta(self, u, v):
        return 0.5 * v * v - self.alpha ** 2 * np.log(u)

    def flux(self, u, v):
        return self.alpha ** 2 * v / u

    def hessian(self, u: float) -> np.ndarray:
        return np.array([[self.alpha ** 2 / (u * u), 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    L: float
    L_xi: float
    xi: float
    tv_ln_u: float
    tv_v: float
    U: float
    V: float
    inf_u: float
    sup_u: float
    n_fronts: int

    @classmethod
    def of(cls, tape: Tape, xi: Optional[float] = None) -> "DiagnosticsRecord":
        xi = tape.xi if xi is None else xi
        eps = _strengths(tape)
        f = tape.functionals()
        return cls(tape.time, _l1(eps), _lxi(eps, xi), xi, f["tv_ln_u"], f["tv_v"], f["U"], f["V"],
                   f["inf_u"], f["sup_u"], tape.n)


@dataclass(frozen=True)
class TraceRecord:
    Y: float
    W: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.W <= self.bound


@dataclass(frozen=True)
class EntropyReport:
    production: float
    lax_margin: float

    @property
    def admissible(self) -> bool:
        return self.production >= -1e-12

    @property
    def lax_ok(self) -> bool:
        return self.lax_margin > 0.0


@dataclass(frozen=True)
class SupInfReport:
    inf_u: float
    sup_u: float
    ratio: float
    bound: float

    @property
    def violated(self) -> bool:
        return self.ratio > self.bound * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def _strengths(obj) -> np.ndarray:
    if isinstance(obj, Tape):
        ring = obj._ring()
        return obj.buf.F[ring, K.EPS].copy() if ring else np.zeros(0)
    return np.array([f.eps if isinstance(f, Front) else float(f) for f in obj])


def _l1(eps: np.ndarray) -> float:
    return float(np.abs(eps).sum())


def _lxi(eps: np.ndarray, xi: float) -> float:
    return float(eps[eps > 0].sum() - xi * eps[eps < 0].sum())


def linear_functional(tape: Union[Tape, Iterable]) -> float:
    """Sum of ``|eps|`` over all fronts."""
    return _l1(_strengths(tape))


def weighted_functional(tape: Union[Tape, Iterable], xi: float) -> float:
    """Rarefactions count once, shocks ``xi`` times."""
    if not xi >= 1.0:
        raise InvalidWeight(f"shock weight must be >= 1, got {xi!r}")
    return _lxi(_strengths(tape), xi)


def conserved_integrals(tape: Tape) -> tuple[float, float]:
    """``(int u dy, int v dy)`` over the torus."""
    return tape.profile().integrals()


def q_of_initial_data(rho0, vv0=None, law: Optional[PressureLaw] = None,
                      alpha: Optional[float] = None) -> float:
    """Size ``TV(ln rho)/2 + TV(vv)/(2 alpha)`` of periodic piecewise-constant data.

    ``rho0`` and ``vv0`` are the piece values in periodic order, so the jump
    from the last piece back to the first counts.  An object with ``rho``
    and ``vv`` attributes (an Eulerian profile) may be passed alone.
    """
    if vv0 is None and hasattr(rho0, "rho"):
        rho0, vv0 = rho0.rho, rho0.vv
    a = law.alpha if law is not None else alpha
    if a is None:
        raise ValueError("a pressure law or alpha is required")
    rho = np.atleast_1d(np.asarray(rho0, dtype=float))
    vv = np.atleast_1d(np.asarray(vv0, dtype=float))
    if not np.all(rho > 0):
        raise NonPositiveDensity("density must be positive")
    lr = np.log(rho)
    tl = np.abs(np.diff(np.append(lr, lr[0]))).sum()
    tv = np.abs(np.diff(np.append(vv, vv[0]))).sum()
    return float(0.5 * tl + tv / (2.0 * a))


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

def entropy_production(left, right, speed: float, law: PressureLaw) -> float:
    """``speed [eta] - [flux]`` for the jump ``left -> right``; non-negative if admissible."""
    pair = EntropyPair(law.alpha)
    d_eta = pair.eta(right[0], right[1]) - pair.eta(left[0], left[1])
    d_q = pair.flux(right[0], right[1]) - pair.flux(left[0], left[1])
    return float(speed * d_eta - d_q)


def lax_margin(family: int, left, right, speed: float, law: PressureLaw) -> float:
    """Smallest gap in the Lax inequalities ``lambda(left) > speed > lambda(right)``."""
    a = law.alpha
    if family == 1:
        return min(-a / left[0] - speed, speed + a / right[0])
    return min(a / left[0] - speed, speed - a / right[0])


def entropy_check(front: Front, law: PressureLaw) -> EntropyReport:
    """Entropy production and Lax margin of a shock front.

    Raises
    ------
    NotAShock
        If the front is a rarefaction.
    """
    if not front.eps < 0.0:
        raise NotAShock(f"front {front.index} has eps = {front.eps!r} >= 0")
    return EntropyReport(
        entropy_production(front.left, front.right, front.speed, law),
        lax_margin(int(front.family), front.left, front.right, front.speed, law),
    )


def sup_inf_report(tape: Tape, q: float) -> SupInfReport:
    prof = tape.profile()
    lo, hi = float(prof.u.min()), float(prof.u.max())
    return SupInfReport(lo, hi, hi / lo, math.exp(2.0 * q))


# ---------------------------------------------------------------------------
# vertical traces
# ---------------------------------------------------------------------------

def zeta(t, T: float, lam: float, period: float):
    """``floor(2 lam (T - t) / period) + 1``."""
    return np.floor(2.0 * lam * (T - np.asarray(t, dtype=float)) / period) + 1.0


def _zeta_primitive(s: np.ndarray, c: float) -> np.ndarray:
    """``int_0^s (floor(c r) + 1) dr`` for ``s >= 0``."""
    m = np.floor(c * s)
    return s + (m * (m - 1.0) / 2.0) / c + m * (s - m / c)


def integral_L_zeta(times: np.ndarray, L: np.ndarray, T: float, lam: float,
                    period: float) -> float:
    """Exact ``int_0^T L zeta dt`` for ``L`` constant after each sample time.

    ``L[k]`` is the value on ``[times[k], times[k+1])``; samples must be
    sorted and start at 0.
    """
    t = np.append(np.clip(times, 0.0, T), T)
    c = 2.0 * lam / period
    G = _zeta_primitive(T - t, c)
    return float(np.dot(L, G[:-1] - G[1:]))


def trace_bound(q: float, M: float, T: float, lam: float, period: float,
                times: np.ndarray, L: np.ndarray) -> float:
    """``C1~(q) zeta(0) + M C2~(q) int_0^T L zeta dt``."""
    z0 = float(zeta(0.0, T, lam, period))
    return trace_c1(q) * z0 + M * trace_c2(q) * integral_L_zeta(times, L, T, lam, period)


def vertical_trace(tape: Tape, params: RunParams, q: Optional[float] = None) -> list[TraceRecord]:
    """Trace sums at the probes of a diagnosed run, with their bounds.

    ``W`` is the total strength of the fronts that crossed the probe
    (counting every passage through the periodic boundary).  The bound uses
    ``lambda* = alpha / u_inf`` with ``u_inf`` the smallest volume seen in the
    log and integrates ``L zeta`` exactly over the logged event times.
    """
    q = tape.q if q is None else q
    log = tape.log
    if len(log) == 0:
        raise ValueError("the tape has no diagnostics log")
    lam = params.law.alpha / float(log[:, K.L_INF].min())
    b = trace_bound(q, params.M, params.T, lam, tape.period, log[:, K.L_T], log[:, K.L_L])
    W = tape.trace_totals()
    return [TraceRecord(float(y), float(w), b) for y, w in zip(tape.buf.PW[0], W)]


class TraceObserver:
    """Pure-Python crossing counter for use as an ``advance`` observer.

    Every front is remembered by uid with its birth point, birth time and
    speed; when a uid disappears its path is walked and the probe
    positions it passed are counted.  Slow, meant for small runs and for
    cross-checking the compiled trace sums.
    """

    def __init__(self, tape: Tape, Ys: Sequence[float]):
        self.Ys = np.asarray(Ys, dtype=float)
        self.W = np.zeros(len(self.Ys))
        self.period = tape.period
        self._alive: dict = {}
        self._refresh(tape)

    def _refresh(self, tape: Tape) -> None:
        F, I = tape.buf.F, tape.buf.I
        now = {}
        for i in tape._ring():
            uid = int(I[i, K.UID])
            now[uid] = self._alive.get(
                uid, (float(F[i, K.X0]), float(F[i, K.T0]), float(F[i, K.SPD]), abs(float(F[i, K.EPS]))))
        for uid, rec in self._alive.items():
            if uid not in now:
                self._add(rec, tape.time)
        self._alive = now

    def _add(self, rec, t: float) -> None:
        x0, t0, spd, a = rec
        x1 = x0 + spd * (t - t0)
        lo, hi = min(x0, x1), max(x0, x1)
        P = self.period
        for k, Y in enumerate(self.Ys):
            # probe images Y + jP inside the swept interval (right end for rightward motion)
            j0 = math.floor((lo - Y) / P) - 1
            n = 0
            for j in range(j0, j0 + int((hi - lo) / P) + 3):
                z = Y + j * P
                if x1 > x0 and lo < z <= hi or x1 < x0 and lo <= z < hi:
                    n += 1
            self.W[k] += n * a

    def __call__(self, kind: str, tape: Tape, record) -> None:
        if kind != "step_before":
            self._refresh(tape)

    def totals(self, tape: Tape) -> np.ndarray:
        """Sums so far plus the partial paths of the fronts alive now."""
        saved = self.W.copy()
        for rec in self._alive.values():
            self._add(rec, tape.time)
        out, self.W = self.W, saved
        return out


# ---------------------------------------------------------------------------
# post-hoc checks over a run log
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogChecks:
    """Worst margins over a log; every entry must be <= 0 (up to the stated tolerance)."""

    dL_collision: float         # max L(after) - L(before) over collisions
    L_minus_q: float            # max L(t) - q
    identity_tv_ln_u: float     # max |TV ln u / 2 - L|
    tv_v_excess: float          # max TV v - 2 alpha cosh(q) L
    sup_inf_excess: float       # max sup u - inf u e^{2q} (1 + 1e-12)
    mass_drift_excess: float    # max |U - U(0)| - 2q e^{2q} eta t sup u
    lxi_over_bound: float       # max L_xi - xi L(0+)
    closure: float              # max logged closure error
    n_rows: int


def check_log(log: np.ndarray, q: float, law: PressureLaw, eta: float,
              xi: Optional[float] = None) -> LogChecks:
    t = log[:, K.L_T]
    kind = log[:, K.L_KIND]
    L = log[:, K.L_L]
    coll = np.nonzero(kind == K.KIND_COLLISION)[0]
    dL = float((L[coll] - L[coll - 1]).max()) if len(coll) else -math.inf
    tvl = log[:, K.L_TVLNU]
    tvv = log[:, K.L_TVV]
    inf_u = log[:, K.L_INF]
    sup_u = log[:, K.L_SUP]
    U = log[:, K.L_U]
    run_sup = np.maximum.accumulate(sup_u)
    drift = np.abs(U - U[0]) - mass_drift(q) * eta * t * run_sup
    xi = xi_max(q) if xi is None else xi
    lxi_bound = xi * L[0] if np.isfinite(xi) else math.inf
    clo = log[:, K.L_CLOSURE]
    clo = clo[~np.isnan(clo)]
    return LogChecks(
        dL,
        float(L.max() - q),
        float(np.abs(0.5 * tvl - L).max()),
        float((tvv - 2.0 * law.alpha * math.cosh(q) * L).max()),
        float((sup_u - inf_u * math.exp(2.0 * q) * (1.0 + 1e-12)).max()),
        float(drift.max()),
        float(log[:, K.L_LXI].max() - lxi_bound),
        float(clo.max()) if len(clo) else 0.0,
        len(log),
    )


def momentum_envelope(log: np.ndarray, params: RunParams, q: float) -> float:
    """Largest ``|V(t^n+)| - (1 - M dt)^n |V(0+)| - (2 alpha q cosh q / M) eta``.

    Evaluated at every logged post-step row; negative means the envelope holds.
    """
    kind = log[:, K.L_KIND]
    rows = np.nonzero(kind == K.KIND_STEP_AFTER)[0]
    if len(rows) == 0:
        return -math.inf
    V0 = abs(log[0, K.L_V])
    n = np.arange(1, len(rows) + 1)
    factor = 1.0 - params.M * params.dt
    if params.M > 0:
        extra = momentum_drift(params.law.alpha, q) / params.M * params.eta
    else:
        extra = math.inf
    env = factor ** n * V0 + extra
    return float((np.abs(log[rows, K.L_V]) - env).max())


def manifest_constants(q: float, alpha: float = 1.0) -> dict:
    """Constants of the estimates for data of size ``q``."""
    c = c_cancel(q)
    return {
        "q": q,
        "c_cancel": c,
        "xi": xi_max(q),
        "c1": 1.0 / (1.0 + math.cosh(q)),
        "C1_plus": 0.5,
        "C1_minus": c1_minus(q),
        "trace_C1": trace_c1(q),
        "trace_C2": trace_c2(q),
        "momentum_drift": momentum_drift(alpha, q),
        "mass_drift": mass_drift(q),
        "sup_over_inf": math.exp(2.0 * q),
    }


def series(log: np.ndarray) -> dict:
    """Log columns by name."""
    return {name: log[:, k] for k, name in enumerate(LOG_COLUMNS)}
