import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import dawsn

from hbolab.probes import random_bandlimited
from hbolab.spectral import (Multiplier, RealField, SpectralField, apply_multiplier, bessel,
                             d_riesz_beta, derivative, forward_transform, fractional, inner,
                             inverse_transform, l2_norm, make_grid, realness_defect, riesz,
                             riesz_beta_symbol, semigroup)

from conftest import fd_derivative


def rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


class TestGrid:
    def test_small_1d(self):
        g = make_grid(1, 8, math.pi)
        assert g.dx == pytest.approx(math.pi / 4)
        assert sorted(g.k1d.tolist()) == list(range(-4, 4))
        assert g.x1d[0] == -math.pi

    def test_2d_xi_step(self):
        g = make_grid(2, 256, 32 * math.pi)
        assert g.shape == (256, 256)
        assert g.xi_step == pytest.approx(1 / 32)

    def test_3d_spacing(self):
        assert make_grid(3, 64, 16).dx == 0.5

    @pytest.mark.parametrize("args", [(1, 12, 1.0), (1, 4, 1.0), (4, 16, 1.0), (0, 16, 1.0),
                                      (2, 16, 0.0), (2, 16, -1.0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            make_grid(*args)


class TestTransforms:
    def test_zero(self):
        g = make_grid(2, 16, 1.0)
        assert not forward_transform(g.zero_field()).coeffs.any()

    def test_cosine_two_modes(self):
        g = make_grid(1, 32, 3.0)
        F = forward_transform(g.field(lambda x: np.cos(x * math.pi / g.L)))
        big = np.flatnonzero(np.abs(F.coeffs) > 1e-12 * np.abs(F.coeffs).max())
        assert sorted(g.k1d[big].tolist()) == [-1, 1]
        # coefficient of cos approximates the integral: L on each of +-1
        assert F.at(1) == pytest.approx(g.L, rel=1e-12)

    def test_brute_force_dft(self, rng):
        g = make_grid(1, 16, 2.5)
        f = RealField(g, rng.standard_normal(16))
        F = forward_transform(f)
        x, xi = g.x1d, g.xi1d
        oracle = np.array([np.sum(np.exp(-1j * x * q) * f.values) * g.dx for q in xi])
        assert rel(F.coeffs, oracle) <= 1e-12

    @pytest.mark.parametrize("d,n", [(1, 8), (1, 1024), (2, 64), (3, 16)])
    def test_round_trip_and_parseval(self, rng, d, n):
        g = make_grid(d, n, 1.7)
        f = RealField(g, rng.standard_normal(g.shape))
        F = forward_transform(f)
        assert rel(inverse_transform(F).values, f.values) <= 1e-12
        lhs = l2_norm(f) ** 2
        rhs = np.sum(np.abs(F.coeffs) ** 2) / (2 * g.L) ** d
        assert abs(lhs - rhs) / lhs <= 1e-12
        assert F.hermitian_defect() <= 1e-12

    def test_size_mismatch(self):
        g = make_grid(1, 16, 1.0)
        with pytest.raises(ValueError):
            RealField(g, np.zeros(15))
        with pytest.raises(ValueError):
            SpectralField(g, np.zeros(17))

    def test_fields_are_immutable(self):
        f = make_grid(1, 8, 1.0).zero_field()
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestMultipliers:
    def test_identity(self, rng):
        g = make_grid(2, 16, 1.0)
        F = forward_transform(RealField(g, rng.standard_normal(g.shape)))
        out = apply_multiplier(F, Multiplier(lambda xi: np.ones_like(xi[0]), 1.0))
        assert np.array_equal(out.coeffs, F.coeffs)

    def test_derivative_of_sine(self):
        g = make_grid(1, 32, 2.0)
        f = g.field(lambda x: np.sin(x * math.pi / g.L))
        out = inverse_transform(apply_multiplier(forward_transform(f),
                                                 Multiplier(lambda xi: 1j * xi[0], 0.0)))
        exact = (math.pi / g.L) * np.cos(g.x1d * math.pi / g.L)
        assert rel(out.values, exact) <= 1e-12

    def test_abs_xi_on_gaussian_matches_quadrature(self):
        # |grad| e^{-x^2} = (2/sqrt(pi)) (1 - 2x D(x)), D = Dawson; the grid sees its periodization
        def cont(x):
            return (2 / math.sqrt(math.pi)) * (1 - 2 * x * dawsn(x))

        for x in (0.0, 0.7, 2.5):
            q = quad(lambda q: q * math.sqrt(math.pi) * math.exp(-q * q / 4) * math.cos(q * x),
                     0, 60, limit=400)[0] / math.pi
            assert cont(x) == pytest.approx(q, abs=1e-12)
        g = make_grid(1, 32, 6.0)
        f = g.field(lambda x: np.exp(-x * x))
        out = inverse_transform(apply_multiplier(forward_transform(f),
                                                 Multiplier(lambda xi: np.abs(xi[0]), 0.0)))
        images = 2 * g.L * np.arange(-200000, 200001)
        oracle = np.array([cont(x + images).sum() for x in g.x1d])
        assert np.abs(out.values - oracle).max() <= 1e-6

    def test_abs_xi_periodization_gap_scales_like_inverse_square_box(self):
        def gap(L):
            g = make_grid(1, 32, L)
            f = g.field(lambda x: np.exp(-x * x))
            out = inverse_transform(apply_multiplier(forward_transform(f),
                                                     Multiplier(lambda xi: np.abs(xi[0]), 0.0)))
            exact = (2 / math.sqrt(math.pi)) * (1 - 2 * g.x1d * dawsn(g.x1d))
            return np.abs(out.values - exact).max()

        assert 3.0 < gap(4.0) / gap(8.0) < 5.0

    def test_non_finite_symbol(self):
        g = make_grid(2, 16, 1.0)
        F = forward_transform(g.zero_field())
        with pytest.raises(ValueError, match="non-finite"):
            apply_multiplier(F, Multiplier(lambda xi: 1.0 / xi[0], 0.0))

    def test_zero_mode_replaces_symbol(self):
        g = make_grid(1, 16, 1.0)
        F = forward_transform(g.field(lambda x: np.ones_like(x)))
        out = apply_multiplier(F, Multiplier(lambda xi: 5.0 + 0 * xi[0], 2.0))
        assert out.at(0) == pytest.approx(2 * F.at(0))


class TestRiesz:
    def test_d1_cos_to_sin(self):
        g = make_grid(1, 32, 3.0)
        f = g.field(lambda x: np.cos(x * math.pi / g.L))
        assert rel(riesz(f, 1).values, np.sin(g.x1d * math.pi / g.L)) <= 1e-12

    def test_d1_hilbert_square(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_bandlimited(g, 20, rng)
        assert rel(riesz(riesz(f, 1), 1).values, -f.values) <= 1e-12

    def test_plane_wave_2d(self):
        g = make_grid(2, 32, math.pi)
        f = g.field(lambda x, y: np.cos(2 * x + 3 * y))
        exact = (2 / math.sqrt(13)) * np.sin(2 * g.coords()[0] + 3 * g.coords()[1])
        assert rel(riesz(f, 1).values, exact) <= 1e-12

    def test_axis_out_of_range(self, grid2):
        with pytest.raises(ValueError):
            riesz(grid2.zero_field(), 3)

    @pytest.mark.parametrize("d,n", [(1, 32), (2, 32), (3, 32)])
    def test_sum_of_squares_and_antisymmetry(self, rng, d, n):
        g = make_grid(d, n, 2.0)
        f = random_bandlimited(g, 6, rng)
        h = random_bandlimited(g, 6, rng)
        s = sum((riesz(riesz(f, l), l) for l in range(1, d + 1)), g.zero_field())
        assert l2_norm(s + f) / l2_norm(f) <= 1e-12
        for l in range(1, d + 1):
            a = inner(riesz(f, l), h) + inner(f, riesz(h, l))
            assert abs(a) / (l2_norm(f) * l2_norm(h)) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), l=st.integers(1, 2))
    def test_antisymmetry_random_pairs(self, seed, l):
        g = make_grid(2, 16, 1.0)
        r = np.random.default_rng(seed)
        f = RealField(g, r.standard_normal(g.shape))
        h = RealField(g, r.standard_normal(g.shape))
        a = inner(riesz(f, l), h) + inner(f, riesz(h, l))
        assert abs(a) <= 1e-12 * l2_norm(f) * l2_norm(h)


class TestFractionalBessel:
    def test_s0_is_identity_on_zero_mean(self, rng, grid2):
        f = random_bandlimited(grid2, 8, rng)
        assert rel(fractional(f, 0.0).values, f.values) <= 1e-12

    def test_s2_eigenfunction(self):
        g = make_grid(1, 32, 3.0)
        f = g.field(lambda x: np.cos(x * math.pi / g.L))
        assert rel(fractional(f, 2.0).values, (math.pi / g.L) ** 2 * f.values) <= 1e-12

    def test_inverse_pair(self, rng, grid2):
        f = RealField(grid2, rng.standard_normal(grid2.shape) + 0.3)
        zero_mean = f - f.values.mean()
        back = fractional(fractional(zero_mean, -1.0), 1.0)
        assert rel(back.values, zero_mean.values) <= 1e-12

    def test_negative_order_needs_zero_mean(self, grid2):
        f = grid2.field(lambda x, y: np.exp(-x * x - y * y))
        with pytest.raises(ValueError, match="non-zero-mean"):
            fractional(f, -1.0)

    def test_bessel_identity_and_constant(self, rng, grid2):
        f = RealField(grid2, rng.standard_normal(grid2.shape))
        assert rel(bessel(f, 0.0).values, f.values) <= 1e-12
        c = grid2.field(lambda x, y: 3.0 + 0 * x * y)
        assert rel(bessel(c, 1.7).values, c.values) <= 1e-12

    def test_bessel_norm_by_parseval(self, rng, grid2):
        f = random_bandlimited(grid2, 10, rng, zero_mean=False)
        s = 1.3
        a = l2_norm(bessel(f, s))
        F = forward_transform(f)
        b = math.sqrt(np.sum((1 + grid2.xi_abs ** 2) ** s * np.abs(F.coeffs) ** 2)
                      / (2 * grid2.L) ** 2)
        assert abs(a - b) / b <= 1e-12


class TestDRieszBeta:
    def test_single_mode_example(self):
        g = make_grid(2, 32, math.pi)
        q = 3.0
        f = g.field(lambda x, y: np.cos(q * y) + 0 * x)
        assert rel(d_riesz_beta(f, 1, (1, 0)).values, -f.values / q) <= 1e-12

    def test_derivative_identity(self, rng, grid2):
        f = random_bandlimited(grid2, 10, rng)
        for k in (1, 2):
            for j in (1, 2):
                e = lambda a: tuple(int(a == i) for i in (1, 2))
                lhs = d_riesz_beta(derivative(f, e(j)), 1, e(k))
                rhs = riesz(riesz(riesz(f, j), k), 1) + (riesz(f, j) if k == 1 else 0.0)
                assert l2_norm(lhs - rhs) / l2_norm(lhs) <= 1e-12

    @pytest.mark.parametrize("d,l,beta", [
        (2, 1, (1, 0)), (2, 2, (0, 1)), (2, 1, (1, 1)), (2, 2, (2, 0)),
        (2, 1, (3, 0)), (2, 1, (0, 3)), (3, 2, (1, 1, 1)), (3, 3, (0, 2, 1)),
    ])
    def test_symbol_against_finite_differences(self, rng, d, l, beta):
        axes = [a for a, b in enumerate(beta) for _ in range(b)]
        pts = rng.uniform(0.5, 2.0, (20, d)) * rng.choice([-1, 1], (20, d))
        for p in pts:
            def base(xi, order=0):
                return -1j * xi[l - 1] / np.linalg.norm(xi)

            # nested central differences along the listed axes
            def nested(xi, remaining):
                if not remaining:
                    return base(xi)
                a = remaining[0]
                count = remaining.count(a)
                rest = [r for r in remaining if r != a]
                return fd_derivative(lambda z: nested(z, rest), xi, a, count, 1e-2)

            fd = (1j ** (-len(axes))) * nested(p, axes)
            exact = riesz_beta_symbol(l, beta, tuple(p))
            assert abs(exact - fd) / abs(exact) <= 1e-6

    def test_rejects_order_four_and_nonzero_mean(self, grid2):
        f = grid2.field(lambda x, y: np.sin(x))
        with pytest.raises(ValueError):
            d_riesz_beta(f, 1, (2, 2))
        with pytest.raises(ValueError):
            d_riesz_beta(grid2.field(lambda x, y: np.exp(-x * x - y * y)), 1, (1, 0))


class TestSemigroup:
    def test_t0_identity(self, rng, grid2):
        f = RealField(grid2, rng.standard_normal(grid2.shape))
        assert rel(semigroup(f, 0.0).values, f.values) <= 1e-12

    @settings(max_examples=20, deadline=None)
    @given(t=st.floats(-50, 50), seed=st.integers(0, 1000))
    def test_unitary_any_t(self, t, seed):
        g = make_grid(2, 32, 3.0)
        f = RealField(g, np.random.default_rng(seed).standard_normal(g.shape))
        assert abs(l2_norm(semigroup(f, t)) / l2_norm(f) - 1) <= 1e-12

    def test_group_property(self, rng):
        g = make_grid(3, 16, 2.0)
        f = RealField(g, rng.standard_normal(g.shape))
        a = semigroup(semigroup(f, 0.7), -2.1)
        b = semigroup(f, -1.4)
        assert l2_norm(a - b) / l2_norm(f) <= 1e-12


class TestCommonProperties:
    def test_outputs_are_real(self, rng):
        g = make_grid(2, 32, 2.0)
        f = RealField(g, rng.standard_normal(g.shape))
        z = f - f.values.mean()
        F = forward_transform(f)
        symbols = [Multiplier(lambda xi: -1j * xi[0] / np.sqrt(xi[0] ** 2 + xi[1] ** 2), 0),
                   Multiplier(lambda xi: np.sqrt(xi[0] ** 2 + xi[1] ** 2) ** 0.3, 0),
                   Multiplier(lambda xi: riesz_beta_symbol(2, (1, 1), xi), 0),
                   Multiplier(lambda xi: np.exp(0.9j * xi[0] * np.hypot(xi[0], xi[1])), 1)]
        for m in symbols:
            assert realness_defect(apply_multiplier(F, m)) <= 1e-12
        for out in (riesz(f, 2), fractional(z, -0.5), bessel(f, 2), semigroup(f, 1.0),
                    d_riesz_beta(z, 1, (0, 2))):
            assert np.isrealobj(out.values)

    def test_multipliers_commute(self, rng):
        g = make_grid(2, 32, 2.0)
        f = RealField(g, rng.standard_normal(g.shape))
        f = f - f.values.mean()
        ops = [lambda u: riesz(u, 1), lambda u: riesz(u, 2), lambda u: fractional(u, 0.7),
               lambda u: bessel(u, -1.0), lambda u: semigroup(u, 0.3),
               lambda u: d_riesz_beta(u, 1, (1, 1))]
        for a in ops:
            for b in ops:
                x, y = a(b(f)), b(a(f))
                assert l2_norm(x - y) <= 1e-12 * max(l2_norm(x), 1e-300)
