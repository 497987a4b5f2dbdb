"""Command-line front end: scenario files, runs, comparisons and Riemann fans.

A scenario is a flat UTF-8 text file of ``key = value`` lines (``#`` starts
a comment).  Lists are comma separated.  Recognised keys::

    alpha               sound speed (required)
    period_ell          length of the circle, Eulerian data
    period_M            total mass, Lagrangian data
    nu                  resolution (required)
    eta, dt             rarefaction threshold and damping step
    T                   final time (required)
    damping_M           damping coefficient (default: the total mass)
    initial.frame       eulerian | lagrangian (default lagrangian)
    initial.kind        constant | sine | piecewise | random_bv (required)
    initial.*           profile parameters, see :func:`initial_profile`
    snapshots           output times (default: T)
    probes              trace positions in mass coordinates
    eps_drop            drop threshold for reflected waves (default 1e-3)
    seed                random seed for random_bv data
    diagnostics_every   keep every k-th collision row of the log (default 1)
    closure_every_event check the torus closure at every event (default 0)
    compare.nus         front-tracking ladder for ``compare`` (default 25,50,100)
    compare.fv_cells    cells of the finite-volume reference (default 4000)
    compare.cfl         CFL number of the reference (default 0.9)
    compare.fv_period   period of the reference grid (default: the total mass)

When ``eta`` is missing it is ``1/nu``; when ``dt`` is missing it is
``min(1/nu, eta / (C1^-(q) M q))``; given only ``dt``, ``eta`` is
``max(1/nu, C1^-(q) M dt q)``.

Exit codes: 0 success, 2 configuration error, 3 constraint violation or
period mismatch, 4 solver error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernel as K
from .diagnostics import (EVENT_KINDS, check_log, manifest_constants, momentum_envelope,
                          q_of_initial_data, vertical_trace)
from .engine import RunParams, Tape, advance, build_initial_tape
from .errors import (ConfigError, ConstraintViolation, FrontTrackingError, NonPositiveDensity,
                     NonPositiveVolume, PeriodMismatch)
from .estimates import c1_minus
from .profiles import LagrangianProfile, n_cells
from .reference_fv import Grid, fv_run, l1_components
from .riemann import PressureLaw, State, WaveFamily, shock_speed, solve_riemann, strength_bound
from .transform import EulerianProfile, eulerian_to_lagrangian, lagrangian_to_eulerian

EXIT_OK, EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_SOLVER = 0, 2, 3, 4

DEFAULT_EPS_DROP = 1e-3

_GLOBAL_KEYS = {
    "alpha", "period_ell", "period_M", "nu", "dt", "eta", "T", "damping_M", "snapshots",
    "probes", "eps_drop", "seed", "diagnostics_every", "closure_every_event",
    "compare.nus", "compare.fv_cells", "compare.cfl", "compare.fv_period",
}
_INITIAL_KEYS = {
    "frame", "kind", "u", "v", "rho", "vv", "starts", "base", "amp", "vamp", "mode", "q", "cells",
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines into a dict of strings."""
    out: dict = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        if key.startswith("initial."):
            if key[len("initial."):] not in _INITIAL_KEYS:
                raise ConfigError(f"line {n}: unknown key {key!r}")
        elif key not in _GLOBAL_KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = value
    return out


def _get(cfg: dict, key: str, default=None, required: bool = False) -> Optional[str]:
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return cfg[key]


def _float(cfg: dict, key: str, default=None, required: bool = False) -> Optional[float]:
    s = _get(cfg, key, None, required)
    if s is None:
        return default
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {s!r}") from None


def _int(cfg: dict, key: str, default=None, required: bool = False) -> Optional[int]:
    x = _float(cfg, key, None, required)
    if x is None:
        return default
    if x != int(x):
        raise ConfigError(f"key {key!r}: not an integer: {cfg[key]!r}")
    return int(x)


def _floats(cfg: dict, key: str, default=None) -> Optional[np.ndarray]:
    s = _get(cfg, key)
    if s is None:
        return default
    try:
        return np.array([float(p) for p in s.split(",") if p.strip()])
    except ValueError:
        raise ConfigError(f"key {key!r}: not a list of numbers: {s!r}") from None


@dataclass
class Scenario:
    """A parsed scenario: initial data in mass coordinates plus run settings."""

    law: PressureLaw
    params: RunParams
    profile: LagrangianProfile
    q: float
    frame: str
    vbar: float
    ell: float
    snapshots: list
    probes: np.ndarray
    seed: int = 0
    diagnostics_every: int = 1
    closure_every_event: bool = False
    cfg: dict = field(default_factory=dict, repr=False)
    u_fn: Optional[object] = field(default=None, repr=False)
    v_fn: Optional[object] = field(default=None, repr=False)


def _sine(base: float, amp: float, vamp: float, mode: float, period: float):
    k = 2.0 * math.pi * mode / period
    return (lambda y: base + amp * np.sin(k * np.asarray(y))), (lambda y: vamp * np.sin(k * np.asarray(y)))


def initial_profile(cfg: dict, nu: int, alpha: float, seed: int):
    """Initial data on the frame's period.

    Returns ``(frame, starts, first, second, period, u_fn, v_fn)`` where
    ``first`` is ``u`` (Lagrangian) or ``rho`` (Eulerian) and ``second`` the
    velocity.  Kinds:

    ``constant``
        ``initial.u``/``initial.rho`` and ``initial.v``/``initial.vv``.
    ``sine``
        ``base + amp sin(2 pi mode y / P)`` and ``vamp sin(2 pi mode y / P)``
        sampled at the midpoints of ``ceil(nu P)`` cells.
    ``piecewise``
        Inline table: values ``initial.u``/``initial.rho``, velocities
        ``initial.v``/``initial.vv`` and optional ``initial.starts``
        (default: equal cells).
    ``random_bv``
        ``initial.cells`` (default ``nu P``) random pieces scaled to size
        ``initial.q``, drawn with ``seed``.
    """
    frame = _get(cfg, "initial.frame", "lagrangian")
    if frame not in ("lagrangian", "eulerian"):
        raise ConfigError(f"key 'initial.frame': expected eulerian or lagrangian, got {frame!r}")
    pkey = "period_M" if frame == "lagrangian" else "period_ell"
    period = _float(cfg, pkey, required=True)
    if not period > 0:
        raise ConfigError(f"key {pkey!r}: must be positive")
    k1, k2 = ("initial.u", "initial.v") if frame == "lagrangian" else ("initial.rho", "initial.vv")
    kind = _get(cfg, "initial.kind", required=True)
    u_fn = v_fn = None
    if kind == "constant":
        first = np.array([_float(cfg, k1, required=True)])
        second = np.array([_float(cfg, k2, 0.0)])
        starts = np.zeros(1)
    elif kind == "sine":
        u_fn, v_fn = _sine(_float(cfg, "initial.base", 1.0), _float(cfg, "initial.amp", 0.2),
                           _float(cfg, "initial.vamp", 0.1), _float(cfg, "initial.mode", 1.0), period)
        n = n_cells(nu, period)
        mids = (np.arange(n) + 0.5) * (period / n)
        starts = np.arange(n) * (period / n)
        first, second = u_fn(mids), v_fn(mids)
    elif kind == "piecewise":
        first = _floats(cfg, k1)
        if first is None:
            raise ConfigError(f"missing required key {k1!r}")
        second = _floats(cfg, k2, np.zeros(len(first)))
        starts = _floats(cfg, "initial.starts", np.arange(len(first)) * (period / len(first)))
        if not len(first) == len(second) == len(starts):
            raise ConfigError(f"keys {k1!r}, {k2!r} and 'initial.starts' must have equal length")
    elif kind == "random_bv":
        n = _int(cfg, "initial.cells", n_cells(nu, period))
        qt = _float(cfg, "initial.q", required=True)
        rng = np.random.default_rng(seed)
        lu = rng.normal(size=n)
        w = rng.normal(size=n)
        share = rng.uniform(0.2, 0.8)
        tl = np.abs(np.diff(np.append(lu, lu[0]))).sum()
        tw = np.abs(np.diff(np.append(w, w[0]))).sum()
        lu = lu * (2.0 * qt * share / tl) if tl > 0 else lu * 0.0
        w = w * (2.0 * alpha * qt * (1.0 - share) / tw) if tw > 0 else w * 0.0
        starts = np.arange(n) * (period / n)
        first = np.exp(lu) if frame == "lagrangian" else np.exp(-lu)
        second = w
    else:
        raise ConfigError(f"key 'initial.kind': unknown kind {kind!r}")
    if not np.all(first > 0):
        raise ConfigError(f"key {k1!r}: values must be positive")
    return frame, starts, first, second, period, u_fn, v_fn


def load_scenario(cfg: dict) -> Scenario:
    """Build a :class:`Scenario` from parsed config; raises ConfigError or ConstraintViolation."""
    alpha = _float(cfg, "alpha", required=True)
    if not alpha > 0:
        raise ConfigError("key 'alpha': must be positive")
    law = PressureLaw(alpha)
    nu = _int(cfg, "nu", required=True)
    if nu < 1:
        raise ConfigError("key 'nu': must be >= 1")
    T = _float(cfg, "T", required=True)
    if not T > 0:
        raise ConfigError("key 'T': must be positive")
    seed = _int(cfg, "seed", 0)
    frame, starts, first, second, period, u_fn, v_fn = initial_profile(cfg, nu, alpha, seed)
    try:
        if frame == "eulerian":
            eul = EulerianProfile(starts, first, second, period)
            q = q_of_initial_data(eul.rho, eul.vv, law)
            lag = eulerian_to_lagrangian(eul)
            prof, vbar, ell = lag.profile, lag.vbar, period
        else:
            lag0 = LagrangianProfile(starts, first, second, period)
            w = lag0.lengths
            vbar = float(np.dot(w, lag0.v)) / period
            v = lag0.v - vbar
            v = v - float(np.dot(w, v)) / period
            prof = LagrangianProfile(lag0.starts, lag0.u, v, period)
            q = prof.q(alpha)
            ell = float(np.dot(w, lag0.u))
    except (ValueError, NonPositiveDensity, NonPositiveVolume) as exc:
        raise ConfigError(f"invalid initial data: {exc}") from None
    M = prof.period
    Mdamp = _float(cfg, "damping_M", M)
    eta = _float(cfg, "eta")
    dt = _float(cfg, "dt")
    if eta is None and dt is None:
        eta = 1.0 / nu
    if dt is None:
        cq = c1_minus(q) * Mdamp * q
        dt = 1.0 / nu if cq == 0 else min(1.0 / nu, eta / cq)
    if eta is None:
        eta = max(1.0 / nu, c1_minus(q) * Mdamp * dt * q)
    params = RunParams(nu, dt, eta, T, Mdamp, law, eps_drop=_float(cfg, "eps_drop", DEFAULT_EPS_DROP))
    snaps = _floats(cfg, "snapshots", np.array([T]))
    if np.any(snaps < 0) or np.any(snaps > T):
        raise ConfigError("key 'snapshots': times must lie in [0, T]")
    probes = _floats(cfg, "probes", np.zeros(0))
    every = _int(cfg, "diagnostics_every", 1)
    if every < 1:
        raise ConfigError("key 'diagnostics_every': must be >= 1")
    params.check(q)
    return Scenario(law, params, prof, q, frame, vbar, ell, sorted(float(s) for s in snaps),
                    probes, seed, every, bool(_int(cfg, "closure_every_event", 0)), cfg, u_fn, v_fn)


def read_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return load_scenario(parse_config(text))


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def snapshot_csv(tape: Tape, sc: Scenario) -> str:
    """Snapshot text in the scenario's frame."""
    if sc.frame == "eulerian":
        prof = lagrangian_to_eulerian(tape, sc.vbar, tape.time)
        a, b = prof.rho, prof.vv
    else:
        prof = tape.profile()
        a, b = prof.u, prof.v + sc.vbar
    lines = [f"# t={_fmt(tape.time)} frame={sc.frame} period={_fmt(prof.period)}"]
    lines += [f"{_fmt(s)},{_fmt(x)},{_fmt(y)}" for s, x, y in zip(prof.starts, a, b)]
    return "\n".join(lines) + "\n"


def diagnostics_csv(log: np.ndarray, every: int = 1) -> str:
    kind = log[:, K.L_KIND].astype(int)
    keep = np.ones(len(log), dtype=bool)
    if every > 1:
        coll = np.nonzero(kind == K.KIND_COLLISION)[0]
        keep[coll] = False
        keep[coll[every - 1::every]] = True
    cols = (K.L_L, K.L_LXI, K.L_TVLNU, K.L_TVV, K.L_U, K.L_V, K.L_INF, K.L_SUP)
    lines = ["t,event_kind,L,L_xi,tv_ln_u,tv_v,U,V,inf_u,sup_u,n_fronts"]
    for r in np.nonzero(keep)[0]:
        row = log[r]
        vals = ",".join(_fmt(row[c]) for c in cols)
        lines.append(f"{_fmt(row[K.L_T])},{EVENT_KINDS[kind[r]]},{vals},{int(row[K.L_N])}")
    return "\n".join(lines) + "\n"


def manifest_text(entries: dict) -> str:
    out = []
    for k, v in entries.items():
        if isinstance(v, float):
            v = _fmt(v)
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


def _manifest(sc: Scenario, tape: Tape) -> dict:
    p = sc.params
    lhs = c1_minus(sc.q) * p.M * p.dt * sc.q
    ent = {
        "frame": sc.frame,
        "alpha": p.law.alpha,
        "total_mass": sc.profile.period,
        "length": sc.ell,
        "vbar": sc.vbar,
        "nu": p.nu,
        "dt": p.dt,
        "eta": p.eta,
        "T": p.T,
        "damping_M": p.M,
        "eps_drop": p.eps_drop,
        "seed": sc.seed,
    }
    ent.update(manifest_constants(sc.q, p.law.alpha))
    ent["constraint_M_dt"] = p.M * p.dt
    ent["constraint_C1_minus_M_dt_q"] = lhs
    ent["constraint_ok"] = int(p.M * p.dt < 1.0 and lhs <= p.eta)
    log = tape.log
    u0 = sc.profile.u
    ent["u_inf_initial"] = float(u0.min())
    ent["u_sup_initial"] = float(u0.max())
    ent["u_inf_min"] = float(log[:, K.L_INF].min())
    ent["u_sup_max"] = float(log[:, K.L_SUP].max())
    ent["sup_over_inf_max"] = float((log[:, K.L_SUP] / log[:, K.L_INF]).max())
    st = tape.stats
    ent["collisions"] = st.collisions
    ent["crossings"] = st.crossings
    ent["time_steps"] = st.time_steps
    ent["fronts_created"] = st.fronts_created
    ent["fronts_final"] = tape.n
    ent["log_rows"] = len(log)
    chk = check_log(log, sc.q, p.law, p.eta)
    for name in ("dL_collision", "L_minus_q", "identity_tv_ln_u", "tv_v_excess",
                 "sup_inf_excess", "mass_drift_excess", "closure"):
        ent[f"check_{name}"] = float(getattr(chk, name))
    ent["check_momentum_envelope"] = momentum_envelope(log, p, sc.q)
    for k, v in tape.monitor.items():
        ent[f"monitor_{k}"] = v
    return ent


def run_scenario(sc: Scenario) -> tuple[Tape, list]:
    """Run with diagnostics; returns the final tape and ``(t, snapshot text)`` pairs."""
    p = sc.params
    tape = build_initial_tape(sc.profile, p, sc.q)
    tape.enable_diagnostics(probes=sc.probes, closure_every_event=sc.closure_every_event)
    snaps = []
    for ts in sc.snapshots:
        if ts > tape.time:
            advance(tape, replace(p, T=ts))
        snaps.append((ts, snapshot_csv(tape, sc)))
    if tape.time < p.T:
        advance(tape, p)
    return tape, snaps


def _out_dir(config: str, out: Optional[str], suffix: str) -> Path:
    d = Path(out) if out else Path(config).with_suffix(suffix)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_run(config: str, out: Optional[str] = None) -> int:
    sc = read_scenario(config)
    tape, snaps = run_scenario(sc)
    d = _out_dir(config, out, ".out")
    for k, (_, text) in enumerate(snaps):
        (d / f"snapshot_{k:03d}.csv").write_text(text, encoding="utf-8")
    (d / "diagnostics.csv").write_text(diagnostics_csv(tape.log, sc.diagnostics_every), encoding="utf-8")
    lines = ["Y,W,bound"]
    if len(sc.probes):
        lines += [f"{_fmt(r.Y)},{_fmt(r.W)},{_fmt(r.bound)}" for r in vertical_trace(tape, sc.params, sc.q)]
    (d / "traces.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (d / "manifest.txt").write_text(manifest_text(_manifest(sc, tape)), encoding="utf-8")
    print(f"wrote {d}")
    return EXIT_OK


def cmd_compare(config: str, out: Optional[str] = None) -> int:
    """Front tracking on a resolution ladder against a fine finite-volume run."""
    cfg = parse_config(Path(config).read_text(encoding="utf-8"))
    base = load_scenario(cfg)
    nus = [int(n) for n in _floats(cfg, "compare.nus", np.array([25, 50, 100]))]
    cells = _int(cfg, "compare.fv_cells", 4000)
    cfl = _float(cfg, "compare.cfl", 0.9)
    fv_period = _float(cfg, "compare.fv_period", base.profile.period)
    if not math.isclose(fv_period, base.profile.period, rel_tol=1e-12):
        raise PeriodMismatch(f"reference period {fv_period!r} differs from the total mass "
                             f"{base.profile.period!r}")
    if base.u_fn is not None and base.frame == "lagrangian":
        u_fn, v_fn = base.u_fn, base.v_fn
    else:
        # piecewise data: sample the (finest available) mass-coordinate profile
        u_fn = lambda y: base.profile(y)[0]  # noqa: E731
        v_fn = lambda y: base.profile(y)[1]  # noqa: E731
    grid0 = Grid.sample(u_fn, v_fn, fv_period, cells, center=True)
    rows = ["nu,t,l1_u,l1_v,l1"]
    for nu in nus:
        c = dict(cfg, nu=str(nu))
        c.pop("eta", None)
        c.pop("dt", None)
        sc = load_scenario(c)
        p = sc.params
        grid = grid0
        tape = build_initial_tape(sc.profile, p, sc.q)
        for ts in sc.snapshots:
            if ts > tape.time:
                advance(tape, replace(p, T=ts))
            grid = fv_run(grid, p.law, ts, cfl, p.M, p.dt)
            du, dv = l1_components(tape.profile(), grid)
            rows.append(f"{nu},{_fmt(ts)},{_fmt(du)},{_fmt(dv)},{_fmt(du + dv)}")
    text = "\n".join(rows) + "\n"
    d = _out_dir(config, out, ".compare")
    (d / "compare.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_riemann(ul: float, vl: float, ur: float, vr: float, alpha: float = 1.0) -> int:
    if not (ul > 0 and ur > 0):
        print("error: u values must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if not alpha > 0:
        print("error: alpha must be positive", file=sys.stderr)
        return EXIT_CONFIG
    law = PressureLaw(alpha)
    left, right = State(ul, vl), State(ur, vr)
    fan = solve_riemann(left, right, law)
    m = fan.middle
    print(f"eps1 = {_fmt(fan.eps1)}")
    print(f"eps2 = {_fmt(fan.eps2)}")
    print(f"middle = {_fmt(m.u)},{_fmt(m.v)}")
    for fam, e, a, b in ((WaveFamily.FAMILY1, fan.eps1, left, m), (WaveFamily.FAMILY2, fan.eps2, m, right)):
        if e == 0.0:
            print(f"wave{int(fam)} = none")
        elif e < 0.0:
            print(f"wave{int(fam)} = shock speed={_fmt(shock_speed(fam, a.u, b.u, law))}")
        else:
            print(f"wave{int(fam)} = rarefaction speeds={_fmt(law.char_speed(fam, a.u))}"
                  f"..{_fmt(law.char_speed(fam, b.u))}")
    total = abs(fan.eps1) + abs(fan.eps2)
    bound = strength_bound(left, right, law)
    ok = total <= bound * (1.0 + 1e-12) + 1e-15
    print(f"bound |eps1|+|eps2| = {_fmt(total)} <= {_fmt(bound)} : {'ok' if ok else 'VIOLATED'}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eulerflock", description="Front tracking for damped isothermal flow.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario and write snapshots, diagnostics and a manifest")
    r.add_argument("config")
    r.add_argument("--out")
    c = sub.add_parser("compare", help="compare a front-tracking ladder with a finite-volume reference")
    c.add_argument("config")
    c.add_argument("--out")
    s = sub.add_parser("riemann", help="solve one Riemann problem")
    for name in ("ul", "vl", "ur", "vr"):
        s.add_argument(name, type=float)
    s.add_argument("alpha", type=float, nargs="?", default=1.0)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "riemann":
            return cmd_riemann(args.ul, args.vl, args.ur, args.vr, args.alpha)
        if args.cmd == "run":
            return cmd_run(args.config, args.out)
        return cmd_compare(args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConstraintViolation, PeriodMismatch) as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except FrontTrackingError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
