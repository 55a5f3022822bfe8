import math
import warnings

import numpy as np
import pytest

from hbolab.diagnostics import conserved
from hbolab.probes import random_bandlimited
from hbolab.solver import (BlowUpError, SolverConfig, Trajectory, bo1d_soliton, evolve,
                           nonlinearity, soliton_residual, soliton_shape_error, step_ifrk4)
from hbolab.spectral import (BoundaryDecayWarning, RealField, l2_norm, make_grid, mean,
                             semigroup)


def gaussian_1d(n=256, L=16.0, amp=1.0, center=0.0):
    g = make_grid(1, n, L)
    return g.field(lambda x: amp * np.exp(-(x - center) ** 2))


def reflect_x1(u: RealField) -> RealField:
    idx = (-np.arange(u.grid.n)) % u.grid.n
    return RealField(u.grid, np.take(u.values, idx, axis=0))


class TestConfig:
    def test_defaults(self):
        c = SolverConfig(dt=1e-3, T=5.0)
        assert c.dealias_fraction == pytest.approx(2 / 3)
        assert c.snapshot_every == 25
        assert c.n_steps == 5000

    @pytest.mark.parametrize("kw", [dict(dt=-1e-3, T=1), dict(dt=0, T=1), dict(dt=2, T=1),
                                    dict(dt=1e-3, T=1, dealias_fraction=0),
                                    dict(dt=1e-3, T=1, dealias_fraction=1.5),
                                    dict(dt=1e-3, T=1, snapshot_every=0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_trajectory_invariants(self):
        u = make_grid(1, 8, 1.0).zero_field()
        with pytest.raises(ValueError):
            Trajectory((0.0, 0.0), (u, u), (None, None))
        with pytest.raises(ValueError):
            Trajectory((0.1,), (u,), (None,))
        with pytest.raises(ValueError):
            Trajectory((0.0, 1.0), (u,), (None,))


class TestNonlinearity:
    def test_zero_and_constant(self):
        g = make_grid(2, 32, 2.0)
        assert not nonlinearity(g.zero_field()).values.any()
        c = g.field(lambda x, y: 2.5 + 0 * x * y)
        assert np.abs(nonlinearity(c).values).max() <= 1e-12

    @pytest.mark.parametrize("n", [8, 64])
    def test_sine_closed_form(self, n):
        g = make_grid(1, n, 3.0)
        w = math.pi / g.L
        u = g.field(lambda x: np.sin(w * x))
        # -1/2 d/dx sin^2(wx) = -(w/2) sin(2wx)
        exact = -(w / 2) * np.sin(2 * w * g.x1d)
        assert np.abs(nonlinearity(u).values - exact).max() <= 1e-12

    def test_dealiasing_removes_high_product_modes(self):
        g = make_grid(1, 32, math.pi)
        u = g.field(lambda x: np.cos(7 * x))
        # u^2 has a mode at 14 > (2/3)*16, so the filtered term vanishes
        assert np.abs(nonlinearity(u).values).max() <= 1e-12
        assert np.abs(nonlinearity(u, 1.0).values).max() > 1.0


class TestStep:
    def test_linear_step_equals_semigroup(self):
        g = make_grid(2, 32, math.pi)
        u = g.field(lambda x, y: np.cos(3 * x + 2 * y))
        cfg = SolverConfig(dt=0.1, T=0.1, nonlinear=False)
        out = step_ifrk4(u, 0.1, cfg)
        assert np.abs(out.values - semigroup(u, 0.1).values).max() <= 1e-14

    def test_mean_preserved(self, rng):
        g = make_grid(2, 64, 4.0)
        u = random_bandlimited(g, 8, rng, zero_mean=False)
        v = step_ifrk4(u, 1e-2)
        assert abs(mean(v) - mean(u)) <= 1e-14

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_ifrk4(make_grid(1, 8, 1.0).zero_field(), 0.0)

    def test_fourth_order(self):
        u0 = gaussian_1d(128, 12.0, amp=2.0)
        T = 1.0

        def run(dt):
            return evolve(u0, SolverConfig(dt=dt, T=T, snapshot_every=10 ** 6)).states[-1]

        dts = [0.04, 0.02, 0.01]
        ref = run(dts[-1] / 16)
        errs = [l2_norm(run(dt) - ref) for dt in dts]
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert abs(slope - 4) <= 0.2


class TestEvolve:
    def test_zero_datum(self):
        g = make_grid(2, 32, 4.0)
        traj = evolve(g.zero_field(), SolverConfig(dt=0.01, T=0.1, snapshot_every=3))
        assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.1)
        assert all(not s.values.any() for s in traj.states)
        assert len(traj) == len(traj.records) == 5

    def test_mass_and_mean_conserved(self, rng):
        g = make_grid(2, 64, 8.0)
        u0 = g.field(lambda x, y: np.exp(-x * x - 2 * y * y) * (1 + 0.5 * x))
        traj = evolve(u0, SolverConfig(dt=1e-2, T=0.5))
        I0 = traj.records[0].I
        assert max(abs(r.I - I0) for r in traj.records) <= 1e-12
        assert max(abs(mean(s) - mean(u0)) for s in traj.states) <= 1e-12

    def test_quadratic_invariants_short_run(self):
        g = make_grid(2, 64, 8.0)
        u0 = g.field(lambda x, y: np.exp(-x * x - y * y))
        traj = evolve(u0, SolverConfig(dt=1e-3, T=0.2))
        M0, H0 = traj.records[0].M, traj.records[0].H
        assert max(abs(r.M - M0) for r in traj.records) / M0 <= 1e-6
        assert max(abs(r.H - H0) for r in traj.records) / abs(H0) <= 1e-5

    def test_time_reversal(self):
        u0 = gaussian_1d(256, 16.0, amp=1.5, center=1.0)

        def roundtrip(dt):
            cfg = SolverConfig(dt=dt, T=1.0, snapshot_every=10 ** 6)
            uT = evolve(u0, cfg).states[-1]
            back = evolve(reflect_x1(uT), cfg).states[-1]
            return l2_norm(reflect_x1(back) - u0) / l2_norm(u0)

        e1, e2 = roundtrip(0.05), roundtrip(0.025)
        assert e2 <= 1e-5
        assert e1 / e2 >= 12  # O(dt^4) ratio is 16

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blow_up_reports_time_and_partial(self):
        g = make_grid(1, 64, 4.0)
        u0 = g.field(lambda x: 1e170 * np.exp(-x * x))
        with pytest.raises(BlowUpError) as info:
            evolve(u0, SolverConfig(dt=0.01, T=1.0, snapshot_every=1))
        assert info.value.t > 0
        assert info.value.partial is not None and info.value.partial.times[0] == 0.0
        with pytest.raises(BlowUpError):
            step_ifrk4(u0, 0.01)


class TestSoliton:
    def test_peak(self):
        g = make_grid(1, 2048, 64 * math.pi)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryDecayWarning)
            u = bo1d_soliton(1.5, 0.0, g)
        assert u.values.max() == pytest.approx(6.0, rel=1e-12)

    def test_guard(self):
        g = make_grid(1, 2048, 64 * math.pi)
        with pytest.warns(BoundaryDecayWarning):
            bo1d_soliton(1.0, 0.0, g)
        with pytest.raises(ValueError):
            bo1d_soliton(1.0, 0.0, g, strict=True)
        with pytest.raises(ValueError):
            bo1d_soliton(-1.0, 0.0, g)
        with pytest.raises(ValueError):
            bo1d_soliton(1.0, 0.0, make_grid(2, 16, 1.0))

    def test_residual_at_reference_grid(self):
        g = make_grid(1, 2048, 64 * math.pi)
        assert soliton_residual(1.0, g) <= 1e-6

    def test_residual_in_resolved_regime(self):
        coarse = soliton_residual(1.0, make_grid(1, 8192, 128 * math.pi))
        fine = soliton_residual(1.0, make_grid(1, 16384, 256 * math.pi))
        assert fine <= 1e-6
        assert fine < coarse / 4  # algebraic tail truncation error decays with the box

    @pytest.mark.parametrize("c", [25.0, 50.0])
    def test_mass(self, c):
        g = make_grid(1, 2 ** 18, 512.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryDecayWarning)
            u = bo1d_soliton(c, 0.0, g)
        I = conserved(u)[0]
        assert I == pytest.approx(8 * math.atan(c * g.L), rel=1e-10)
        assert I == pytest.approx(4 * math.pi, rel=1e-4)

    def test_shape_error_recovers_shift(self):
        g = make_grid(1, 512, 32.0)
        u0 = g.field(lambda x: np.exp(-x * x))
        u1 = g.field(lambda x: np.exp(-(x - 0.37) ** 2))
        err, shift = soliton_shape_error(u1, u0, 0.3, window=0.5)
        assert shift == pytest.approx(0.37, abs=1e-6)
        assert err <= 1e-8
