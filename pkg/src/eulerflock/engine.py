"""Event-driven front tracking on the mass torus with fractional-step damping.

The solution is a circular list of fronts.  Each front stores the position
it had at its birth and moves linearly, so advancing time costs nothing.
Positions are *lifted*: walking the ring from the head the positions are
non-decreasing and the last one never exceeds ``head + period``.  Pending
collisions of adjacent fronts sit in a binary heap and are validated lazily.
At every ``t^n = n dt`` all velocities are damped by ``1 - M dt``, every
front is re-solved into a transmitted and a reflected front, and the queue
is rebuilt.

The event loop is compiled (see ``_kernel``); this module wraps it with the
:class:`Tape` container and the public operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernel as K
from .errors import (
    ConstraintViolation,
    EventOverflow,
    InteractionError,
    NoConvergence,
    NonPositiveVolume,
    NotCoLocated,
)
from .estimates import c1_minus, xi_max
from .profiles import LagrangianProfile
from .riemann import PressureLaw, State, WaveFamily

# relative tolerance used to decide that a time level t^n lies inside [0, T]
_STEP_RTOL = 1e-12

_ERRORS = {
    K.ERR_VOLUME: NonPositiveVolume,
    K.ERR_CONVERGENCE: NoConvergence,
    K.ERR_INTERACTION: InteractionError,
    K.ERR_NOT_COLOCATED: NotCoLocated,
    K.ERR_OVERFLOW: EventOverflow,
    K.ERR_DAMPING: ConstraintViolation,
}

_MESSAGES = {
    K.ERR_VOLUME: "non-positive specific volume",
    K.ERR_CONVERGENCE: "Riemann iteration did not converge",
    K.ERR_INTERACTION: "crossing fronts changed strength",
    K.ERR_NOT_COLOCATED: "interacting fronts are not at the same position",
    K.ERR_OVERFLOW: "event count exceeded the configured cap",
    K.ERR_DAMPING: "M*dt must be < 1",
}

MONITOR_FIELDS = (
    "dL_collision", "dLxi_collision", "dL_step", "dL_clamp", "sum_rule",
    "bracket_lo", "bracket_hi", "V_scale", "dLxi_step", "entropy_min", "lax_min",
    "creation_residual", "closure", "rarefaction_over_eta", "dropped",
    "dLxi_step_after", "V_clamp", "n_closure_checks", "n_shocks", "max_fronts",
    "running_sum_drift",
)


@dataclass
class RunParams:
    """Parameters of one front-tracking run.

    ``M`` is the damping coefficient of the source term ``-M v``.  For the
    alignment model it equals the total mass, i.e. the period of the tape.
    """

    nu: int
    dt: float
    eta: float
    T: float
    M: float
    law: PressureLaw
    eps_drop: float = 1e-14
    max_events: int = 50_000_000

    def n_steps(self) -> int:
        """Number of damping times ``t^n = n dt`` with ``n >= 1`` and ``t^n <= T``."""
        return int(math.floor(self.T / self.dt * (1.0 + _STEP_RTOL)))

    def check(self, q: float) -> None:
        """Raise ConstraintViolation unless ``M dt < 1`` and ``C1^-(q) M dt q <= eta``."""
        if not self.dt > 0.0:
            raise ConstraintViolation(f"dt must be positive, got {self.dt!r}")
        if not self.eta > 0.0:
            raise ConstraintViolation(f"eta must be positive, got {self.eta!r}")
        if not self.M * self.dt < 1.0:
            raise ConstraintViolation(f"M*dt = {self.M * self.dt!r} must be < 1")
        lhs = c1_minus(q) * self.M * self.dt * q
        if not lhs <= self.eta:
            raise ConstraintViolation(
                f"C1^-(q)*M*dt*q = {lhs!r} exceeds eta = {self.eta!r} (q = {q!r})"
            )


@dataclass(frozen=True)
class Front:
    """Snapshot of one front.  ``index`` identifies it within its tape."""

    index: int
    pos: float
    family: WaveFamily
    eps: float
    speed: float
    left: State
    right: State
    uid: int

    @property
    def is_shock(self) -> bool:
        return self.eps < 0.0


@dataclass(frozen=True)
class Event:
    kind: str                   # "collision" or "time_step"
    when: float
    pair: Optional[tuple[int, int]] = None
    step: Optional[int] = None


@dataclass(frozen=True)
class InteractionRecord:
    t: float
    x: float
    incoming: tuple[Front, Front]
    eps1: float
    eps2: float
    n_created: int
    oversize: int

    @property
    def same_family(self) -> bool:
        return self.incoming[0].family == self.incoming[1].family

    @property
    def delta_L(self) -> float:
        a, b = self.incoming
        return abs(self.eps1) + abs(self.eps2) - abs(a.eps) - abs(b.eps)

    @property
    def reflected(self) -> float:
        """Outgoing strength of the other family (0 for a crossing)."""
        if not self.same_family:
            return 0.0
        return self.eps2 if self.incoming[0].family == 1 else self.eps1

    def delta_L_xi(self, xi: float) -> float:
        def w(e):
            return -xi * e if e < 0 else e
        a, b = self.incoming
        return w(self.eps1) + w(self.eps2) - w(a.eps) - w(b.eps)


@dataclass(frozen=True)
class StepReport:
    """Summary of one damping time.

    ``fans[k] = (family, eps_minus, eps_plus, eps_refl)`` is the exact
    re-solve of the damped jump of the k-th front in position order.
    ``*_nominal`` values describe the tape made of all those fans and
    ``*_after`` the tape once reflected waves below ``eps_drop`` are removed.
    """

    n: int
    t: float
    factor: float
    L_before: float
    L_nominal: float
    L_after: float
    L_xi_before: float
    L_xi_nominal: float
    L_xi_after: float
    V_before: float
    V_damped: float
    V_after: float
    dropped: float
    fans: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TapeStats:
    collisions: int
    crossings: int
    time_steps: int
    fronts_created: int
    oversize_rarefactions: int
    events: int


class Tape:
    """Circular ordered list of fronts, or one constant state when empty."""

    def __init__(self, period: float, law: PressureLaw, const_state: Optional[State] = None,
                 capacity: int = 256):
        self.period = float(period)
        self.law = law
        self.q = 0.0
        self.xi = 1.0
        self.buf = K.allocate(capacity, 4 * capacity)
        S = self.buf.S
        S[K.S_PERIOD] = self.period
        S[K.S_ALPHA] = law.alpha
        S[K.S_XI] = 1.0
        S[K.S_ETA] = math.inf
        if const_state is not None:
            S[K.S_CU], S[K.S_CV] = const_state
        self.last_report: Optional[StepReport] = None
        self.last_interaction: Optional[InteractionRecord] = None

    @classmethod
    def from_fronts(cls, period: float, law: PressureLaw, fronts: Sequence, t: float = 0.0) -> "Tape":
        """Tape holding the given fronts, for scheduling and interaction tests.

        ``fronts`` are ``(pos, family, eps, left, right)`` or
        ``(pos, family, eps, left, right, speed)`` tuples with positions in
        ``[0, period)``.  Speeds default to the shock or rarefaction speed of
        the states; no consistency between neighbours is enforced.
        """
        items = sorted(fronts, key=lambda f: f[0])
        tape = cls(period, law, capacity=max(64, 2 * len(items)))
        b = tape.buf
        F, I, S, Si = b.F, b.I, b.S, b.Si
        S[K.S_TIME] = t
        rows = []
        for item in items:
            pos, fam, e, left, right = item[:5]
            fam = int(fam)
            if len(item) > 5:
                spd = float(item[5])
            elif e > 0.0:
                spd = law.char_speed(fam, right[0])
            else:
                s = law.alpha / math.sqrt(left[0] * right[0])
                spd = -s if fam == 1 else s
            nf = Si[K.I_NFREE] - 1
            i = int(I[nf, K.FREE])
            Si[K.I_NFREE] = nf
            F[i, K.EPS] = e
            F[i, K.LU], F[i, K.LV] = left
            F[i, K.RU], F[i, K.RV] = right
            F[i, K.SPD] = spd
            F[i, K.X0] = pos
            F[i, K.T0] = t
            F[i, K.TVL] = abs(math.log(right[0] / left[0]))
            I[i, K.FAM] = fam
            I[i, K.ALIVE] = 1
            I[i, K.UID] = Si[K.I_UID]
            Si[K.I_UID] += 1
            rows.append(i)
        n = len(rows)
        for k, i in enumerate(rows):
            I[i, K.NXT] = rows[(k + 1) % n]
            I[i, K.PRV] = rows[(k - 1) % n]
        Si[K.I_HEAD] = rows[0] if rows else -1
        Si[K.I_N] = n
        if not rows:
            S[K.S_CU], S[K.S_CV] = 1.0, 0.0
        K.rebuild_queue(b)
        return tape

    # -- configuration -------------------------------------------------------
    def configure(self, params: RunParams) -> None:
        S = self.buf.S
        S[K.S_DT] = params.dt
        S[K.S_ETA] = params.eta
        S[K.S_MDAMP] = params.M
        S[K.S_DROP] = params.eps_drop

    def set_q(self, q: float) -> None:
        """Record the data size used by the step bracket and the shock weight."""
        self.q = float(q)
        self.xi = min(xi_max(q), 1e300)
        self.buf.S[K.S_Q] = self.q
        self.buf.S[K.S_XI] = self.xi

    def enable_diagnostics(self, probes: Sequence[float] = (), closure_every_event: bool = False,
                           log_capacity: int = 4096) -> None:
        """Record a diagnostics row at every event and track worst-case checks."""
        probes = np.asarray(probes, dtype=float)
        self.buf = self.buf._replace(
            PW=np.vstack([probes, np.zeros(len(probes))]),
            log=np.zeros((max(log_capacity, 8), K.NLOG)),
        )
        self.buf.S[K.MON0:] = K.MON_INIT
        Si = self.buf.Si
        Si[K.I_DIAG] = 1
        Si[K.I_CLOSURE_EVERY] = int(bool(closure_every_event))
        Si[K.I_LOGN] = 0
        K.log_row(self.buf, K.KIND_INITIAL, True)

    # -- capacity --------------------------------------------------------------
    def _grow(self, code: int) -> None:
        b = self.buf
        if code == K.NEED_FRONTS:
            cap = b.F.shape[0]
            new = 2 * cap
            F = np.zeros((new, K.NF))
            I = np.zeros((new, K.NI), dtype=np.int64)
            F[:cap] = b.F
            I[:cap] = b.I
            nf = b.Si[K.I_NFREE]
            I[nf:nf + new - cap, K.FREE] = np.arange(new - 1, cap - 1, -1)
            b.Si[K.I_NFREE] = nf + new - cap
            self.buf = b._replace(F=F, I=I, scratch=np.zeros(new, dtype=np.int64))
        elif code == K.NEED_HEAP:
            hcap = b.H.shape[0]
            new = max(2 * hcap, 4 * b.F.shape[0])
            H = np.zeros((new, K.NH))
            H[:hcap] = b.H
            self.buf = b._replace(H=H)
        elif code == K.NEED_LOG:
            fans = b.fans
            if fans.shape[0] < b.Si[K.I_N] + 1:
                fans = np.zeros((2 * (b.Si[K.I_N] + 1), 4))
            log = b.log
            if b.Si[K.I_DIAG] and b.Si[K.I_LOGN] + 3 > log.shape[0]:
                log = np.zeros((2 * log.shape[0], K.NLOG))
                log[: b.log.shape[0]] = b.log
            self.buf = b._replace(fans=fans, log=log)
        else:  # pragma: no cover
            raise AssertionError(code)

    def _call(self, fn, *args) -> None:
        while True:
            st = fn(self.buf, *args)
            if st == K.OK:
                return
            if st > 0:
                self._grow(st)
                continue
            raise _ERRORS[st](f"{_MESSAGES[st]} (t={self.time!r})")

    # -- scalar views -----------------------------------------------------------
    @property
    def time(self) -> float:
        return float(self.buf.S[K.S_TIME])

    @time.setter
    def time(self, t: float) -> None:
        self.buf.S[K.S_TIME] = t

    @property
    def n(self) -> int:
        return int(self.buf.Si[K.I_N])

    def __len__(self) -> int:
        return self.n

    @property
    def step_index(self) -> int:
        return int(self.buf.Si[K.I_STEP])

    @property
    def const_state(self) -> Optional[State]:
        if self.n:
            return None
        S = self.buf.S
        return State(float(S[K.S_CU]), float(S[K.S_CV]))

    @property
    def stats(self) -> TapeStats:
        Si = self.buf.Si
        return TapeStats(int(Si[K.I_COLL]), int(Si[K.I_CROSS]), int(Si[K.I_STEPS]),
                         int(Si[K.I_CREATED]), int(Si[K.I_OVERSIZE]), int(Si[K.I_NEVENTS]))

    # -- inspection -------------------------------------------------------------
    def _ring(self) -> list[int]:
        I = self.buf.I
        out = []
        f = int(self.buf.Si[K.I_HEAD])
        for _ in range(self.n):
            out.append(f)
            f = int(I[f, K.NXT])
        return out

    def _front(self, i: int, pos: float) -> Front:
        F, I = self.buf.F, self.buf.I
        return Front(
            i, pos, WaveFamily(int(I[i, K.FAM])), float(F[i, K.EPS]), float(F[i, K.SPD]),
            State(float(F[i, K.LU]), float(F[i, K.LV])),
            State(float(F[i, K.RU]), float(F[i, K.RV])), int(I[i, K.UID]),
        )

    def front(self, i: int) -> Front:
        return self._front(i, float(K.xpos(self.buf.F, i, self.time) % self.period))

    def fronts(self) -> list[Front]:
        """Fronts sorted by position in ``[0, period)``."""
        ring = self._ring()
        if not ring:
            return []
        F = self.buf.F
        t, P = self.time, self.period
        x0 = K.xpos(F, ring[0], t)
        y0 = x0 % P
        ys, rot = [], len(ring)
        for k, i in enumerate(ring):
            y = y0 + (K.xpos(F, i, t) - x0)
            if y >= P:
                rot = min(rot, k)
                y = max(y - P, 0.0)
            ys.append(y)
        order = list(range(rot, len(ring))) + list(range(rot))
        out, last = [], 0.0
        for k in order:
            last = max(last, ys[k])
            out.append(self._front(ring[k], last))
        return out

    @property
    def anchor(self) -> State:
        """State on the arc crossing ``y = 0``."""
        if self.n == 0:
            return self.const_state
        return self.fronts()[0].left

    def states(self) -> list[State]:
        """Constant states on the arcs, starting with the anchor."""
        fr = self.fronts()
        if not fr:
            return [self.const_state]
        return [fr[0].left] + [f.right for f in fr[:-1]]

    def profile(self) -> LagrangianProfile:
        """The tape as a piecewise-constant profile without zero-length pieces."""
        fr = self.fronts()
        if not fr:
            s = self.const_state
            return LagrangianProfile(np.zeros(1), [s.u], [s.v], self.period)
        starts = np.array([0.0] + [f.pos for f in fr])
        u = np.array([fr[0].left.u] + [f.right.u for f in fr])
        v = np.array([fr[0].left.v] + [f.right.v for f in fr])
        keep = np.append(np.diff(starts) > 0, True)
        return LagrangianProfile(starts[keep], u[keep], v[keep], self.period)

    def functionals(self) -> dict:
        L, Lxi, tvl, tvv, U, V, inf_u, sup_u = K.scan(self.buf)
        return dict(L=L, L_xi=Lxi, tv_ln_u=tvl, tv_v=tvv, U=U, V=V,
                    inf_u=inf_u, sup_u=sup_u, n_fronts=self.n)

    def closure_error(self) -> float:
        """Largest deviation between stored states and the composition of all jumps."""
        return float(K.closure(self.buf))

    # -- diagnostics access -----------------------------------------------------
    @property
    def log(self) -> np.ndarray:
        return self.buf.log[: self.buf.Si[K.I_LOGN]]

    @property
    def monitor(self) -> dict:
        m = self.buf.S[K.MON0:]
        return {k: float(m[i]) for i, k in enumerate(MONITOR_FIELDS)}

    def trace_totals(self) -> np.ndarray:
        """Probe sums including the partial lifetimes of the fronts alive now."""
        b = self.buf
        saved = b.PW[1].copy()
        if len(saved) == 0:
            return saved
        for i in self._ring():
            K.trace_death(b, i, self.time)
        W = b.PW[1].copy()
        b.PW[1] = saved
        return W

    def copy(self) -> "Tape":
        new = Tape.__new__(Tape)
        new.__dict__.update(self.__dict__)
        new.buf = K.Buffers(*(a.copy() for a in self.buf))
        return new


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def build_initial_tape(profile: LagrangianProfile, params: RunParams,
                       q: Optional[float] = None) -> Tape:
    """Tape of a piecewise-constant profile.

    A Riemann problem is solved at every jump (including the wrap jump) and
    rarefactions are split into fans of fronts weaker than ``eta``.  The run
    constraints are validated against ``q``, by default the size of the
    profile itself.
    """
    law = params.law
    if q is None:
        q = profile.q(law.alpha)
    params.check(q)
    starts, cells = [], []
    for s, u, v in zip(profile.starts, profile.u, profile.v):
        c = (float(u), float(v))
        if cells and c == cells[-1]:
            continue
        if starts and s == starts[-1]:
            cells[-1] = c
            continue
        starts.append(float(s))
        cells.append(c)
    if len(cells) > 1 and cells[0] == cells[-1]:
        starts.pop(0)
        cells.pop(0)
    tape = Tape(profile.period, law, capacity=max(64, 4 * len(cells)))
    tape.configure(params)
    tape.set_q(q)
    if len(cells) == 1:
        tape.buf.S[K.S_CU], tape.buf.S[K.S_CV] = cells[0]
        return tape
    arr = np.array(cells)
    tape._call(K.build, np.array(starts), arr[:, 0].copy(), arr[:, 1].copy())
    return tape


def next_event(tape: Tape, params: RunParams) -> Event:
    """Earliest pending event: a collision of adjacent fronts or the next damping time."""
    tape.configure(params)
    kind, when, a, b = K.peek(tape.buf, math.inf, np.iinfo(np.int64).max // 2)
    if kind == K.EV_COLLISION:
        return Event("collision", float(when), pair=(int(a), int(b)))
    return Event("time_step", float(when), step=tape.step_index + 1)


def _resolve(tape: Tape, a: int, b: int, pop: bool) -> InteractionRecord:
    incoming = (tape.front(a), tape.front(b))
    tape._call(K.collide, a, b, pop)
    S, Si = tape.buf.S, tape.buf.Si
    return InteractionRecord(
        tape.time, float(S[K.S_LAST_X]), incoming, float(S[K.S_LAST_E1]),
        float(S[K.S_LAST_E2]), int(Si[K.I_LAST_NEW]), int(Si[K.I_LAST_OVER]),
    )


def resolve_interaction(tape: Tape, i: int, j: int) -> Tape:
    """Replace adjacent, co-located fronts ``i, j`` by the fan of their outer states.

    Fronts of different families cross with unchanged strengths (verified;
    InteractionError otherwise).  The record is kept in ``tape.last_interaction``.
    """
    I = tape.buf.I
    if not (I[i, K.ALIVE] and I[j, K.ALIVE] and I[i, K.NXT] == j):
        raise NotCoLocated(f"fronts {i} and {j} are not adjacent")
    tape.last_interaction = _resolve(tape, i, j, False)
    return tape


def _report(tape: Tape) -> StepReport:
    S, Si = tape.buf.S, tape.buf.Si
    nf = int(Si[K.I_STEP_NF])
    return StepReport(
        tape.step_index, tape.time, 1.0 - S[K.S_MDAMP] * S[K.S_DT],
        float(S[K.S_STEP_LB]), float(S[K.S_STEP_LN]), float(S[K.S_STEP_LA]),
        float(S[K.S_STEP_LXB]), float(S[K.S_STEP_LXN]), float(S[K.S_STEP_LXA]),
        float(S[K.S_STEP_VB]), float(S[K.S_STEP_VD]), float(S[K.S_STEP_VA]),
        float(S[K.S_STEP_DROP]), tape.buf.fans[:nf].copy(),
    )


def apply_time_step(tape: Tape, params: RunParams) -> Tape:
    """Damp every velocity by ``1 - M dt`` and re-solve every front.

    Each damped jump is solved exactly into a transmitted and a reflected
    front.  Reflected waves weaker than ``eps_drop`` are then removed in one
    sweep from the anchor: the removed jump is carried into the next Riemann
    problem and the last problem closes onto the anchor, so the tape remains
    an exact composition of wave curves.  The summary is kept in
    ``tape.last_report``.
    """
    tape.configure(params)
    if not params.M * params.dt < 1.0:
        raise ConstraintViolation(f"M*dt = {params.M * params.dt!r} must be < 1")
    tape._call(K.time_step)
    tape.last_report = _report(tape)
    return tape


Observer = Callable[[str, Tape, object], None]


def advance(tape: Tape, params: RunParams, observers: Sequence[Observer] = ()) -> Tape:
    """Process events in time order until ``params.T`` and return the tape.

    Observers are called as ``obs(kind, tape, record)`` after every
    collision (record: :class:`InteractionRecord`), before every damping
    step (``"step_before"``, record: the step index) and after it
    (``"step_after"``, record: :class:`StepReport`).  Without observers the
    whole loop runs compiled.
    """
    tape.configure(params)
    T = params.T
    nsteps = params.n_steps()
    diag = bool(tape.buf.Si[K.I_DIAG])
    if not observers:
        tape._call(K.run, T, nsteps, params.max_events)
    else:
        while True:
            if diag and tape.buf.Si[K.I_LOGN] + 3 > tape.buf.log.shape[0]:
                tape._grow(K.NEED_LOG)
            kind, when, a, b = K.peek(tape.buf, T, nsteps)
            if kind == K.EV_NONE:
                break
            if kind == K.EV_COLLISION:
                old = tape.time
                tape.time = when
                try:
                    rec = _resolve(tape, int(a), int(b), True)
                except Exception:
                    tape.time = old
                    raise
                if diag:
                    K.log_row(tape.buf, K.KIND_COLLISION, False)
                for obs in observers:
                    obs("collision", tape, rec)
            else:
                tape.time = when
                for obs in observers:
                    obs("step_before", tape, tape.step_index + 1)
                if diag:
                    K.log_row(tape.buf, K.KIND_STEP_BEFORE, True)
                tape._call(K.time_step)
                if diag:
                    K.log_row(tape.buf, K.KIND_STEP_AFTER, True)
                rep = _report(tape)
                tape.last_report = rep
                for obs in observers:
                    obs("step_after", tape, rep)
            tape.buf.Si[K.I_NEVENTS] += 1
            if tape.buf.Si[K.I_NEVENTS] > params.max_events:
                raise EventOverflow(f"more than {params.max_events} events before T={T!r}")
        if tape.time < T:
            tape.time = T
    if diag:
        if tape.buf.Si[K.I_LOGN] + 3 > tape.buf.log.shape[0]:
            tape._grow(K.NEED_LOG)
        K.log_row(tape.buf, K.KIND_FINAL, True)
    return tape
