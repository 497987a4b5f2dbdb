import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from eulerflock.errors import NonPositiveVolume, PeriodMismatch
from eulerflock.profiles import LagrangianProfile, constant_profile
from eulerflock.reference_fv import Grid, fv_run, fv_step, l1_components, l1_distance
from eulerflock.riemann import PressureLaw, State, shock_speed, wave_curve
from eulerflock.transform import EulerianProfile

LAW = PressureLaw(1.0)


def smooth(n, period=1.0):
    return Grid.sample(lambda y: 1 + 0.3 * np.sin(2 * np.pi * y / period),
                       lambda y: 0.2 * np.cos(2 * np.pi * y / period), period, n)


class TestGrid:
    def test_non_positive(self):
        with pytest.raises(NonPositiveVolume):
            Grid([1.0, 0.0], [0.0, 0.0], 1.0)

    def test_sample_centers_v(self):
        g = Grid.sample(lambda y: 1 + 0 * y, lambda y: 1 + y, 1.0, 10)
        assert abs(g.v.sum()) <= 1e-14 and g.dy == 0.1 and g.n_cells == 10

    def test_bad_cfl(self):
        with pytest.raises(ValueError):
            fv_step(smooth(10), LAW, 1.5, 0.0, 1.0)


class TestFVStep:
    def test_constant_state_only_damps(self):
        g = Grid(np.full(16, 1.3), np.full(16, 0.4), 1.0)
        out = fv_run(g, LAW, T=0.3, Mdamp=1.0, dt_split=0.1)
        np.testing.assert_array_equal(out.u, g.u)
        np.testing.assert_allclose(out.v, 0.4 * 0.9 ** 3, rtol=1e-14)
        assert out.t == pytest.approx(0.3)

    def test_shock_speed(self):
        # 1-shock from u = 1 to u = 0.5 at y = 2 on a long circle
        left = State(1.0, 0.0)
        right = wave_curve(1, left, 0.5 * math.log(0.5), LAW)
        mu = shock_speed(1, left.u, right.u, LAW)
        n, P, T = 4000, 4.0, 0.4
        y = (np.arange(n) + 0.5) * (P / n)
        g = Grid(np.where(y < 2.0, left.u, right.u), np.where(y < 2.0, left.v, right.v), P)
        out = fv_run(g, LAW, T)
        mid = 0.5 * (left.u + right.u)
        inner = (y > 1.0) & (y < 3.0)
        k = np.flatnonzero(inner & (out.u < mid))[0]
        # linear interpolation of the mid-level crossing
        x = y[k - 1] + (out.u[k - 1] - mid) / (out.u[k - 1] - out.u[k]) * (P / n)
        assert x == pytest.approx(2.0 + mu * T, abs=0.01)

    def test_first_order_refinement(self):
        T = 0.2
        errs = []
        for n in (100, 200):
            coarse = fv_run(smooth(n), LAW, T)
            fine = fv_run(smooth(4 * n), LAW, T)
            errs.append(l1_distance(coarse, fine))
        assert 1.7 <= errs[0] / errs[1] <= 2.3

    @settings(max_examples=25)
    @given(st.integers(0, 10_000), st.floats(0.0, 3.0))
    def test_conservation_and_exact_damping(self, seed, M):
        rng = np.random.default_rng(seed)
        g = Grid(np.exp(rng.uniform(-0.5, 0.5, 32)), rng.normal(size=32), 1.0)
        free = fv_step(g, LAW, 0.5, M, dt_split=10.0)
        assert free.u.sum() == pytest.approx(g.u.sum(), rel=1e-14)
        assert free.v.sum() == pytest.approx(g.v.sum(), rel=1e-12, abs=1e-12)
        dts = 1e-4
        step = fv_step(g, LAW, 0.5, M, dt_split=dts)
        assert step.t == pytest.approx(dts)
        assert step.u.sum() == pytest.approx(g.u.sum(), rel=1e-14)
        assert step.v.sum() == pytest.approx((1 - M * dts) * g.v.sum(), rel=1e-12, abs=1e-12)

    def test_positivity_failure(self):
        g = Grid([1.0, 1e-3, 1.0, 1.0], [5.0, -5.0, 5.0, -5.0], 1.0)
        with pytest.raises(NonPositiveVolume):
            fv_run(g, LAW, 0.1, cfl=0.99)


class TestL1:
    def test_identical(self):
        g = smooth(20)
        assert l1_distance(g, g) == 0.0

    def test_constants(self):
        a = constant_profile(1.0, 0.0, 2.0)
        b = constant_profile(1.5, 0.0, 2.0)
        assert l1_distance(a, b) == 1.0
        assert l1_components(a, b) == (1.0, 0.0)

    @pytest.mark.parametrize("s", [0.01, 0.1, 0.25])
    def test_shifted_indicator(self, s):
        a = LagrangianProfile([0.0, 0.2, 0.5], [1.0, 2.0, 1.0], [0.0, 0.0, 0.0], 1.0)
        b = LagrangianProfile([0.0, 0.2 + s, 0.5 + s], [1.0, 2.0, 1.0], [0.0, 0.0, 0.0], 1.0)
        assert l1_distance(a, b) == pytest.approx(2 * s, abs=1e-15)

    def test_period_mismatch(self):
        with pytest.raises(PeriodMismatch):
            l1_distance(constant_profile(1.0, 0.0, 1.0), constant_profile(1.0, 0.0, 2.0))

    def test_eulerian(self):
        a = EulerianProfile([0.0, 0.5], [1.0, 2.0], [0.0, 0.0], 1.0)
        b = EulerianProfile([0.0], [1.0], [0.5], 1.0)
        assert l1_components(a, b) == pytest.approx((0.5, 0.5))

    @settings(max_examples=30)
    @given(st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 12))
    def test_against_sampling(self, seed, na, nb):
        rng = np.random.default_rng(seed)

        def rand(n):
            s = np.sort(rng.uniform(0, 1, n))
            s[0] = 0.0
            if len(s) > 1 and np.any(np.diff(s) <= 1e-9):
                s = np.arange(n) / n
            return LagrangianProfile(s, np.exp(rng.normal(size=n)), rng.normal(size=n), 1.0)

        a, b = rand(na), rand(nb)
        ref = oracles.sample_l1(a, b, 1.0, n=200_000)
        # midpoint sampling of a step function errs by at most one cell per jump
        assert l1_distance(a, b) == pytest.approx(ref, abs=(na + nb) * 1e-4)
