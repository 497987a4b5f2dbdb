import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from eulerflock import _kernel as K
from eulerflock.diagnostics import (
    DiagnosticsRecord,
    EntropyPair,
    TraceObserver,
    check_log,
    conserved_integrals,
    entropy_check,
    entropy_production,
    integral_L_zeta,
    lax_margin,
    linear_functional,
    manifest_constants,
    momentum_envelope,
    q_of_initial_data,
    sup_inf_report,
    vertical_trace,
    weighted_functional,
    zeta,
)
from eulerflock.engine import Front, RunParams, Tape, advance, build_initial_tape
from eulerflock.errors import InvalidWeight, NonPositiveDensity, NotAShock
from eulerflock.estimates import c1_minus, c_cancel, xi_max
from eulerflock.profiles import LagrangianProfile, constant_profile, uniform_profile
from eulerflock.riemann import PressureLaw, State, WaveFamily, shock_speed, wave_curve

LAW = PressureLaw(1.0)


def run(prof, T=1.0, dt=0.05, eta=0.1, M=1.0, probes=(), drop=1e-3, closure=False):
    q = prof.q(1.0)
    eta = max(eta, c1_minus(q) * M * dt * q * (1 + 1e-9))
    p = RunParams(10, dt, eta, T, M, LAW, eps_drop=drop)
    tape = build_initial_tape(prof, p, q)
    tape.enable_diagnostics(probes=probes, closure_every_event=closure)
    advance(tape, p)
    return tape, p, q


class TestQ:
    def test_constant(self):
        assert q_of_initial_data([1.0], [0.0], LAW) == 0.0

    def test_two_valued_density(self):
        assert q_of_initial_data([1.0, 2.0], [0.0, 0.0], LAW) == pytest.approx(math.log(2), abs=1e-15)
        assert q_of_initial_data([1.0, 2.0], [0.0, 0.0], LAW) == pytest.approx(0.6931472, abs=1e-7)

    def test_two_valued_velocity(self):
        assert q_of_initial_data([1.0, 1.0], [0.0, 1.0], PressureLaw(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_non_positive_density(self):
        with pytest.raises(NonPositiveDensity):
            q_of_initial_data([1.0, 0.0], [0.0, 0.0], LAW)

    @given(st.lists(st.floats(0.1, 10), min_size=1, max_size=20), st.floats(0.5, 3))
    def test_matches_lagrangian_size(self, rho, alpha):
        vv = np.cos(np.arange(len(rho)))
        q = q_of_initial_data(rho, vv, PressureLaw(alpha))
        prof = uniform_profile(1.0 / np.array(rho), vv, 1.0)
        assert q == pytest.approx(prof.q(alpha), rel=1e-12, abs=1e-15)


class TestFunctionals:
    def test_empty(self):
        assert linear_functional([]) == 0.0
        assert linear_functional(Tape(1.0, LAW, State(1, 0))) == 0.0

    def test_direct_sum(self):
        assert linear_functional([0.1, -0.2, 0.05]) == pytest.approx(0.35, abs=1e-15)

    def test_weighted(self):
        assert weighted_functional([0.1, -0.2, 0.05], 2.0) == pytest.approx(0.55, abs=1e-15)
        with pytest.raises(InvalidWeight):
            weighted_functional([0.1], 0.5)

    @given(st.lists(st.floats(-1, 1), max_size=30), st.floats(1, 50))
    def test_weighted_bounds(self, eps, xi):
        L = linear_functional(eps)
        assert weighted_functional(eps, 1.0) == pytest.approx(L, abs=1e-12)
        assert L - 1e-12 <= weighted_functional(eps, xi) <= xi * L + 1e-9

    def test_conserved_integrals(self):
        tape = build_initial_tape(constant_profile(2.0, 0.5, 1.0), RunParams(10, 0.01, 1.0, 1.0, 1.0, LAW))
        assert conserved_integrals(tape) == (2.0, 0.5)

    def test_record_matches_scan(self):
        _, u, v = oracles.random_bv(2, 0.5, 8)
        tape, _, _ = run(uniform_profile(u, v, 1.0), T=0.5)
        rec = DiagnosticsRecord.of(tape)
        assert rec.L == pytest.approx(tape.log[-1, K.L_L], abs=1e-13)
        assert rec.U == pytest.approx(tape.log[-1, K.L_U], abs=1e-13)
        assert rec.n_fronts == tape.n
        assert rec.xi == pytest.approx(min(xi_max(tape.q), 1e300))


class TestEntropy:
    def test_pair(self):
        pair = EntropyPair(2.0)
        assert pair.eta(1.0, 3.0) == pytest.approx(4.5)
        assert pair.flux(2.0, 1.0) == pytest.approx(2.0)
        # convex entropy
        assert np.all(np.linalg.eigvalsh(pair.hessian(0.7)) > 0)

    def _shock(self, ur=0.5):
        left = State(1.0, 0.0)
        e = 0.5 * math.log(ur)
        right = wave_curve(1, left, e, LAW)
        mu = shock_speed(1, left.u, right.u, LAW)
        return Front(0, 0.0, WaveFamily.FAMILY1, e, mu, left, right, 0), left, right, mu

    def test_compressive_shock_dissipates(self):
        f, left, right, mu = self._shock()
        rep = entropy_check(f, LAW)
        assert rep.production > 0 and rep.admissible and rep.lax_ok
        assert rep.production == pytest.approx(oracles.entropy_production(*left, *right, mu, 1.0), rel=1e-12)

    def test_reversed_jump(self):
        f, left, right, mu = self._shock()
        assert entropy_production(right, left, mu, LAW) < 0
        assert lax_margin(1, right, left, mu, LAW) < 0

    def test_rarefaction_is_not_a_shock(self):
        left = State(1.0, 0.0)
        right = wave_curve(1, left, 0.1, LAW)
        f = Front(0, 0.0, WaveFamily.FAMILY1, 0.1, -1.0 / right.u, left, right, 0)
        with pytest.raises(NotAShock):
            entropy_check(f, LAW)

    def test_cubic_order(self):
        vals = []
        for e in (-1e-3, -1e-4):
            f, *_ = self._shock(ur=math.exp(2 * e))
            vals.append(entropy_check(f, LAW).production)
        assert all(v > 0 for v in vals)
        # production ~ C |eps|^3: a tenfold smaller shock produces 1000x less
        assert vals[0] / vals[1] == pytest.approx(1000.0, rel=1e-2)

    @given(st.floats(0.1, 10), st.floats(-5, 5), st.floats(-2, -1e-3), st.sampled_from([1, 2]))
    def test_every_shock_admissible(self, u, v, e, fam):
        left = State(u, v)
        right = wave_curve(fam, left, e, LAW)
        mu = shock_speed(fam, u, right.u, LAW)
        f = Front(0, 0.0, WaveFamily(fam), e, mu, left, right, 0)
        rep = entropy_check(f, LAW)
        assert rep.production >= -1e-12 * (1 + abs(v) ** 2)
        assert rep.lax_margin > 0


class TestSupInf:
    def test_constant(self):
        tape = build_initial_tape(constant_profile(1.3, 0.0, 1.0), RunParams(10, 0.01, 1.0, 1.0, 1.0, LAW))
        r = sup_inf_report(tape, 0.0)
        assert r.ratio == 1.0 and not r.violated

    def test_two_valued(self):
        prof = LagrangianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0)
        tape = build_initial_tape(prof, RunParams(10, 0.01, 1.0, 1.0, 1.0, LAW))
        r = sup_inf_report(tape, math.log(2))
        assert r.ratio == pytest.approx(2.0) and r.bound == pytest.approx(4.0) and not r.violated

    @settings(max_examples=15)
    @given(st.integers(0, 1000), st.floats(0.05, 1.5))
    def test_runs_never_violate(self, seed, qt):
        _, u, v = oracles.random_bv(seed, qt, 10)
        tape, p, q = run(uniform_profile(u, v, 1.0), T=0.5)
        chk = check_log(tape.log, q, LAW, p.eta)
        assert chk.sup_inf_excess <= 0
        assert chk.L_minus_q <= 1e-12
        assert chk.identity_tv_ln_u <= 1e-10
        assert chk.tv_v_excess <= 1e-10


class TestVerticalTrace:
    def test_constant(self):
        tape, p, q = run(constant_profile(1.0, 0.0, 1.0), probes=[0.3])
        (rec,) = vertical_trace(tape, p, q)
        # zero data size gives a zero bound, attained
        assert rec.W == 0.0 and rec.bound == 0.0 and rec.ok

    def test_single_crossing(self):
        A = State(1.0, 0.0)
        B = wave_curve(2, A, 0.1, LAW)
        tape = Tape.from_fronts(1.0, LAW, [(0.2, 2, 0.1, A, B), (0.9, 1, 0.0, B, A, 0.0)])
        p = RunParams(10, 10.0, 1.0, 0.3, 0.0, LAW)
        tape.enable_diagnostics(probes=[0.4, 0.7])
        advance(tape, p)
        # speed alpha/u_r = 1/e^{-0.2}: reaches 0.4 but not 0.7 within T = 0.3
        W = tape.trace_totals()
        assert W == pytest.approx([0.1, 0.0], abs=1e-15)

    def test_zeta_integral(self):
        # zeta steps down from 3 to 1 over [0, T]: compare with dense quadrature
        T, lam, P = 1.0, 1.3, 1.0
        times = np.array([0.0, 0.2, 0.55, 0.9])
        L = np.array([1.0, 0.8, 0.7, 0.65])
        exact = integral_L_zeta(times, L, T, lam, P)
        t = (np.arange(400_000) + 0.5) / 400_000 * T
        Lt = L[np.searchsorted(times, t, side="right") - 1]
        assert exact == pytest.approx(float(np.mean(Lt * zeta(t, T, lam, P)) * T), rel=1e-5)

    @settings(max_examples=6)
    @given(st.integers(0, 1000), st.floats(0.1, 1.0))
    def test_observer_agrees_with_kernel(self, seed, qt):
        _, u, v = oracles.random_bv(seed, qt, 6)
        prof = uniform_profile(u, v, 1.0)
        q = prof.q(1.0)
        p = RunParams(10, 0.1, max(0.2, c1_minus(q) * 0.1 * q * 1.01), 0.6, 1.0, LAW, eps_drop=1e-3)
        Ys = [0.05, 0.5, 0.77]
        tape = build_initial_tape(prof, p, q)
        tape.enable_diagnostics(probes=Ys)
        obs = TraceObserver(tape, Ys)
        advance(tape, p, observers=[obs])
        np.testing.assert_allclose(obs.totals(tape), tape.trace_totals(), rtol=1e-12, atol=1e-15)

    def test_random_bv_bound(self):
        _, u, v = oracles.random_bv(11, 0.8, 50)
        prof = uniform_profile(u, v, 1.0)
        q = prof.q(1.0)
        p = RunParams(50, 0.01, max(1 / 50, c1_minus(q) * 0.01 * q * 1.0001), 2.0, 1.0, LAW, eps_drop=1e-3)
        tape = build_initial_tape(prof, p, q)
        tape.enable_diagnostics(probes=np.linspace(0, 1, 8, endpoint=False) + 0.01)
        advance(tape, p)
        for r in vertical_trace(tape, p, q):
            assert r.ok


class TestLogChecks:
    def test_momentum_envelope(self):
        _, u, v = oracles.random_bv(4, 0.6, 10)
        tape, p, q = run(uniform_profile(u, v, 1.0), T=1.0)
        assert momentum_envelope(tape.log, p, q) <= 1e-10

    def test_manifest_constants(self):
        m = manifest_constants(1.0)
        assert m["xi"] == pytest.approx(1 / c_cancel(1.0))
        assert m["c1"] <= m["C1_plus"] <= m["C1_minus"]
