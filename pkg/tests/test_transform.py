import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from eulerflock.engine import RunParams, advance, build_initial_tape
from eulerflock.errors import DegenerateJump, NonPositiveDensity
from eulerflock.estimates import c1_minus
from eulerflock.profiles import LagrangianProfile, constant_profile, uniform_profile
from eulerflock.riemann import PressureLaw, State, WaveFamily, rarefaction_front_speed, shock_speed, wave_curve
from eulerflock.engine import Front
from eulerflock.transform import (
    EulerianProfile,
    MassMap,
    bi_lipschitz_ok,
    eulerian_to_lagrangian,
    lagrangian_to_eulerian,
    project_eulerian,
    project_lagrangian,
    rh_residual_eulerian,
)

LAW = PressureLaw(1.0)


@st.composite
def eulerian_profiles(draw, max_pieces=8):
    n = draw(st.integers(1, max_pieces))
    ell = draw(st.floats(0.5, 3.0))
    cuts = sorted(set(draw(st.lists(st.integers(0, 999), min_size=n, max_size=n))))
    starts = np.array(cuts) / 1000.0 * ell
    if starts[0] != 0.0 and draw(st.booleans()):
        starts[0] = 0.0
    k = len(starts)
    rho = np.array(draw(st.lists(st.floats(0.1, 5.0), min_size=k, max_size=k)))
    vv = np.array(draw(st.lists(st.floats(-3.0, 3.0), min_size=k, max_size=k)))
    return EulerianProfile(starts, rho, vv, ell)


class TestEulerianToLagrangian:
    def test_unit(self):
        d = eulerian_to_lagrangian(EulerianProfile([0.0], [1.0], [0.0], 1.0))
        assert d.M == 1.0 and d.vbar == 0.0 and d.ell == 1.0
        assert d.profile.u.tolist() == [1.0] and d.profile.v.tolist() == [0.0]
        assert d.profile.period == 1.0

    def test_constant_shift_absorbed(self):
        d = eulerian_to_lagrangian(EulerianProfile([0.0], [2.0], [3.0], 1.0))
        assert d.M == 2.0 and d.vbar == 3.0
        assert d.profile.u.tolist() == [0.5] and d.profile.v.tolist() == [0.0]
        assert d.profile.period == 2.0

    def test_two_pieces(self):
        d = eulerian_to_lagrangian(EulerianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0))
        assert d.M == pytest.approx(1.5, abs=1e-15)
        assert d.profile.starts == pytest.approx([0.0, 0.5], abs=1e-15)
        assert d.profile.u == pytest.approx([1.0, 0.5], abs=1e-15)

    def test_non_positive_density(self):
        with pytest.raises(NonPositiveDensity):
            EulerianProfile([0.0, 0.5], [1.0, 0.0], [0.0, 0.0], 1.0)

    @given(eulerian_profiles())
    def test_properties(self, prof):
        d = eulerian_to_lagrangian(prof)
        lag = d.profile
        U, V = lag.integrals()
        assert abs(V) <= 1e-12 * d.M
        assert U == pytest.approx(prof.period, rel=1e-12)
        assert np.all(lag.u > 0)
        assert d.vbar == pytest.approx(prof.momentum / prof.mass, rel=1e-12, abs=1e-12)


class TestLagrangianToEulerian:
    def test_identity(self):
        e = lagrangian_to_eulerian(constant_profile(1.0, 0.0, 1.0))
        assert e.period == 1.0 and e.rho.tolist() == [1.0] and e.vv.tolist() == [0.0]

    def test_two_pieces(self):
        e = lagrangian_to_eulerian(LagrangianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0))
        assert e.period == 1.5
        assert e.lengths.tolist() == [0.5, 1.0]
        assert e.rho.tolist() == [1.0, 0.5]

    @given(eulerian_profiles())
    def test_round_trip(self, prof):
        d = eulerian_to_lagrangian(prof)
        back = lagrangian_to_eulerian(d.profile, d.vbar, 0.0)
        assert back.period == pytest.approx(prof.period, rel=1e-12)
        assert back.mass == pytest.approx(prof.mass, rel=1e-12)
        # compare as functions: the piece boundaries may be relabelled
        x = np.concatenate((prof.starts, back.starts))
        x = np.unique(np.mod(x, prof.period))
        x = x[np.append(True, np.diff(x) > 1e-12 * prof.period)]
        mids = 0.5 * (x + np.append(x[1:], x[0] + prof.period))
        r0, w0 = prof(mids)
        r1, w1 = back(mids)
        np.testing.assert_allclose(r1, r0, rtol=1e-12)
        np.testing.assert_allclose(w1, w0, rtol=1e-12, atol=1e-12)

    def test_galilean_unshift(self):
        lag = LagrangianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0)
        e = lagrangian_to_eulerian(lag, vbar=1.0, t=0.25)
        # every piece moves right by 0.25 on the circle of length 1.5
        assert e.vv.tolist() == [1.0, 1.0]
        assert e(0.3)[0] == pytest.approx(1.0) and e(0.2)[0] == pytest.approx(0.5)
        assert e(0.8)[0] == pytest.approx(0.5)

    @settings(max_examples=15)
    @given(st.integers(0, 500), st.floats(0.1, 1.2))
    def test_mass_and_bounds_along_a_run(self, seed, qt):
        _, u, v = oracles.random_bv(seed, qt, 8)
        prof = uniform_profile(u, v, 1.0)
        q = prof.q(1.0)
        p = RunParams(10, 0.05, max(0.1, c1_minus(q) * 0.05 * q * 1.01), 0.5, 1.0, LAW, eps_drop=1e-3)
        tape = advance(build_initial_tape(prof, p, q), p)
        e = lagrangian_to_eulerian(tape, vbar=0.7, t=tape.time)
        assert e.mass == pytest.approx(1.0, rel=1e-12)
        assert e.period == pytest.approx(tape.profile().integrals()[0], rel=1e-12)
        assert bi_lipschitz_ok(e, tape.profile())
        lag = tape.profile()
        tv_rho = oracles.periodic_tv(e.rho)
        tv_v = oracles.periodic_tv(lag.v)
        assert tv_rho <= lag.u.max() * 2 * q * (1 + 1e-12) / lag.u.min() ** 2 + 1e-12
        assert oracles.periodic_tv(e.vv) == pytest.approx(tv_v, rel=1e-12, abs=1e-12)


class TestMassMap:
    def test_two_pieces(self):
        m = MassMap.of(EulerianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0))
        assert m.total == 1.5
        assert m(0.75) == pytest.approx(1.0)
        assert m.inverse(1.0) == pytest.approx(0.75)
        assert m.lipschitz() == (1.0, 2.0)

    @given(eulerian_profiles())
    def test_bi_lipschitz(self, prof):
        assert bi_lipschitz_ok(prof)
        m = MassMap.of(prof)
        assert np.all(np.diff(m.breakpoints) > 0)
        lo, hi = m.lipschitz()
        assert lo == pytest.approx(prof.rho.min()) and hi == pytest.approx(prof.rho.max())


class TestRHResidual:
    def _front(self, fam, e, left=State(1.0, 0.3)):
        right = wave_curve(fam, left, e, LAW)
        if e < 0:
            mu = shock_speed(fam, left.u, right.u, LAW)
        else:
            mu = rarefaction_front_speed(fam, right, LAW)
        return Front(0, 0.0, WaveFamily(fam), e, mu, left, right, 0)

    @pytest.mark.parametrize("fam", [1, 2])
    @pytest.mark.parametrize("vbar", [0.0, 1.7])
    def test_exact_shock(self, fam, vbar):
        r = rh_residual_eulerian(None, self._front(fam, -0.2), LAW, vbar)
        assert abs(r[0]) <= 1e-10 and abs(r[1]) <= 1e-10

    @pytest.mark.parametrize("fam", [1, 2])
    def test_rarefaction_first_order(self, fam):
        res = [np.abs(rh_residual_eulerian(None, self._front(fam, e), LAW)) for e in (0.05, 0.025, 0.0125)]
        for a, b in zip(res, res[1:]):
            assert b / a == pytest.approx([0.5, 0.5], rel=0.05)

    def test_zero_strength(self):
        with pytest.raises(DegenerateJump):
            rh_residual_eulerian(None, self._front(1, 0.0), LAW)

    def test_by_index(self):
        A = State(1.0, 0.0)
        B = wave_curve(1, A, -0.1, LAW)
        prof = LagrangianProfile([0.0, 0.5], [A.u, B.u], [A.v, B.v], 1.0)
        tape = build_initial_tape(prof, RunParams(10, 0.01, 0.1, 0.1, 0.0, LAW))
        for k, f in enumerate(tape.fronts()):
            if f.eps < 0:
                assert np.all(np.abs(rh_residual_eulerian(tape, k, LAW)) <= 1e-10)


class TestProjection:
    def test_lagrangian_sine(self):
        prof = project_lagrangian(lambda y: 1 + 0.5 * np.sin(2 * np.pi * y), lambda y: np.cos(2 * np.pi * y), 1.0, 20)
        assert len(prof.u) == 20
        assert abs(prof.integrals()[1]) <= 1e-15
        assert prof.integrals()[0] == pytest.approx(1.0, abs=1e-12)

    def test_eulerian(self):
        e = project_eulerian(lambda x: 2 + 0 * x, lambda x: x, 2.0, 4)
        assert e.mass == pytest.approx(4.0)
        assert e.vv.tolist() == [0.25, 0.75, 1.25, 1.75]
        assert math.isclose(eulerian_to_lagrangian(e).vbar, 1.0)
