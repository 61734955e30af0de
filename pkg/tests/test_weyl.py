"""Weyl kernels: closed forms, inversion, Hilbert-Schmidt scaling, Plancherel pairing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwave.errors import ConfigurationError, NumericalError
from hwave.numerics import Field2D, Field3D, Grid1D, inner_product, sample_inner
from hwave.signals import box_phi, build_signal
from hwave.weyl import (LambdaGrid, WeylKernel, kernel_inner, kernel_inverse, kernel_of,
                        kernel_point, pair_via_kernels)

SQRT2 = math.sqrt(2.0)
G4 = Grid1D.symmetric(4.0, 1 / 16)
G3 = Grid1D.symmetric(6.0, 1 / 8)


def gaussian_kernel(xi, eta, lam):
    return SQRT2 * np.exp(-math.pi * (eta - xi) ** 2) * np.exp(-math.pi * lam ** 2 * (xi + eta) ** 2 / 4)


def edge_weighted_indicator(points):
    """Indicator of [0, 1] with value 1/2 at the two edges."""
    inside = (points > 0) & (points < 1)
    edge = (np.abs(points) < 1e-12) | (np.abs(points - 1) < 1e-12)
    return np.where(inside, 1.0, np.where(edge, 0.5, 0.0))


def indicator_kernel(step):
    g = Grid1D.symmetric(2.0, step)
    w = edge_weighted_indicator(g.points)
    return WeylKernel(1.0, g, g, (w[:, None] * w[None, :]).astype(complex))


@pytest.fixture(scope="module")
def random_pairs():
    return [(build_signal({"builder": "random_bandlimited", "params": {}, "seed": 2 * s}),
             build_signal({"builder": "random_bandlimited", "params": {}, "seed": 2 * s + 1}))
            for s in range(3)]


@pytest.fixture(scope="module")
def gauss3d_t1():
    return build_signal({"builder": "gaussian3d", "params": {"t_degree": 1}, "normalize": True},
                        grids=[G3, G3, G3])


class TestKernelOf:
    def test_spec_point_values(self, gauss2d):
        assert abs(kernel_point(gauss2d, 1.0, 0, 0) - 1.414214) < 1e-6
        assert abs(kernel_point(gauss2d, 1.0, 1, 1) - 0.0611137) < 1e-7
        k01 = kernel_point(gauss2d, 1.0, 0, 1)
        assert abs(k01 - SQRT2 * math.exp(-math.pi) * math.exp(-math.pi / 4)) < 1e-12
        # the commonly quoted 0.0278638 is a rounding slip for 0.0278641
        assert abs(k01 - 0.0278641) < 1e-7

    @pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0])
    def test_gaussian_closed_form(self, gauss2d, lam):
        K = kernel_of(gauss2d, lam, G4, G4)
        exact = gaussian_kernel(G4.points[:, None], G4.points[None, :], lam)
        err = np.abs(K.samples - exact)
        # relative to the peak, and pointwise wherever the value is above 1e-8 of the peak
        assert err.max() / np.abs(exact).max() < 1e-6
        big = np.abs(exact) > 1e-8 * np.abs(exact).max()
        assert (err[big] / np.abs(exact[big])).max() < 1e-6

    def test_grid_point_matches_kernel_point(self, gauss2d):
        K = kernel_of(gauss2d, 0.5, G4, G4)
        i, j = 70, 50
        assert abs(K.samples[i, j] - kernel_point(gauss2d, 0.5, G4.points[i], G4.points[j])) < 1e-14

    def test_zero_field(self, gauss2d):
        zero = Field2D(gauss2d.grids, np.zeros_like(gauss2d.samples))
        assert not np.any(kernel_of(zero, 1.0, G4, G4).samples)

    def test_separable_field(self):
        # f = g(x) h(y) with g(x) = e^{-pi x^2 / 2}, h(y) = e^{-2 pi y^2}: K = h(eta - xi) g^(-(xi + eta)/2)
        f = Field2D.from_function(Grid1D.symmetric(8, 1 / 16), Grid1D.symmetric(8, 1 / 16),
                                  lambda x, y: np.exp(-math.pi * x * x / 2) * np.exp(-2 * math.pi * y * y) + 0j)
        K = kernel_of(f, 1.0, G4, G4)
        xi, eta = G4.points[:, None], G4.points[None, :]
        ghat = SQRT2 * np.exp(-2 * math.pi * ((xi + eta) / 2) ** 2)
        assert np.max(np.abs(K.samples - np.exp(-2 * math.pi * (eta - xi) ** 2) * ghat)) < 1e-12

    def test_linearity(self, random_pairs):
        a, b = random_pairs[0]
        combo = Field2D(a.grids, 3 * a.samples - 2j * b.samples)
        lhs = kernel_of(combo, 0.5, G4, G4).samples
        rhs = 3 * kernel_of(a, 0.5, G4, G4).samples - 2j * kernel_of(b, 0.5, G4, G4).samples
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_zero_parameter_integrates_columns(self, gauss2d):
        K = kernel_of(gauss2d, 0.0, G4, G4)
        exact = SQRT2 * np.exp(-math.pi * (G4.points[None, :] - G4.points[:, None]) ** 2)
        assert np.max(np.abs(K.samples - exact)) < 1e-12

    def test_non_finite_input(self, gauss2d):
        bad = gauss2d.samples.copy()
        bad[3, 3] = np.nan
        with pytest.raises(NumericalError):
            kernel_of(Field2D(gauss2d.grids, bad), 1.0)

    def test_mismatched_steps(self, gauss2d):
        with pytest.raises(ConfigurationError):
            kernel_of(gauss2d, 1.0, G4, Grid1D.symmetric(4, 1 / 8))


class TestHilbertSchmidt:
    @pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0])
    def test_scaling(self, gauss2d, lam):
        norm2 = inner_product(gauss2d, gauss2d).real
        hs = kernel_inner(gauss2d, gauss2d, lam).real
        assert abs(hs - norm2 / lam) / (norm2 / lam) < 1e-4

    @pytest.mark.parametrize("lam", [0.5, 1.0])
    def test_scaling_on_sampled_grid(self, gauss2d, lam):
        K = kernel_of(gauss2d, lam)
        hs = sample_inner(K.samples, K.samples, K.grids).real
        assert abs(hs * lam - 1.0) < 1e-4

    def test_sesquilinear_consistency(self, random_pairs):
        for a, b in random_pairs:
            assert abs(kernel_inner(a, b, 1.0) - inner_product(a, b)) < 1e-6

    def test_zero_parameter_rejected(self, gauss2d):
        with pytest.raises(ConfigurationError):
            kernel_inner(gauss2d, gauss2d, 0.0)

    @given(st.floats(0.2, 1.5), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
    @settings(max_examples=20, deadline=None)
    def test_scaled_gaussian_property(self, lam, re, im):
        f = build_signal({"builder": "gaussian2d", "params": {}, "normalize": True})
        c = complex(re, im)
        g = Field2D(f.grids, c * f.samples)
        assert abs(kernel_inner(g, f, lam) - c / lam) < 1e-9 * max(1.0, abs(c) / lam)


class TestKernelInverse:
    @pytest.mark.parametrize("lam", [0.5, 1.0])
    def test_gaussian_round_trip(self, gauss2d, lam):
        K = kernel_of(gauss2d, lam)
        f = kernel_inverse(K, gauss2d.grid_x, gauss2d.grid_y)
        assert np.max(np.abs(f.samples - gauss2d.samples)) < 1e-6
        back = kernel_of(f, lam, K.grid_xi, K.grid_eta)
        assert np.max(np.abs(back.samples - K.samples)) < 1e-6

    def test_norm_identity(self, gauss2d):
        for lam in (0.5, 1.0):
            K = kernel_of(gauss2d, lam)
            f = kernel_inverse(K)
            lhs = sample_inner(f.samples, f.samples, f.grids).real
            rhs = lam * sample_inner(K.samples, K.samples, K.grids).real
            assert abs(lhs - rhs) < 1e-6

    def test_wide_parameter_within_alias_free_box(self, gauss2d):
        # reconstruction is alias-free for |lam x| < 1 / (2 h) = 8
        K = kernel_of(gauss2d, 2.0)
        gx = Grid1D.symmetric(3.5, 1 / 16)
        f = kernel_inverse(K, gx, gauss2d.grid_y)
        ref = SQRT2 * np.exp(-math.pi * (gx.points[:, None] ** 2 + gauss2d.grid_y.points[None, :] ** 2))
        assert np.max(np.abs(f.samples - ref)) < 1e-6

    def test_indicator_closed_form_values(self):
        gx, gy = Grid1D.symmetric(2, 1 / 4), Grid1D.symmetric(1.5, 1 / 8)
        errs = []
        for h in (1 / 32, 1 / 64):
            f = kernel_inverse(indicator_kernel(h), gx, gy)
            exact = box_phi(gx.points[:, None], gy.points[None, :])
            x0, y0, yh, x1 = 8, 12, 16, 12
            assert abs(f.samples[x0, y0] - 1.0) <= h / 2 + 1e-12
            assert abs(f.samples[x0, yh] - 0.5) < 1e-12
            assert abs(f.samples[x1, y0]) <= h / 2 + 1e-12
            assert not np.any(f.samples[:, np.abs(gy.points) > 1])
            errs.append(np.max(np.abs(f.samples - exact)))
        # sampled corners of the square cost O(h): the error halves with the step
        assert errs[1] < 0.55 * errs[0]
        assert errs[1] <= 1 / 128 + 1e-12

    def test_zero_kernel(self):
        g = Grid1D.symmetric(2, 1 / 16)
        K = WeylKernel(1.0, g, g, np.zeros((g.count, g.count), dtype=complex))
        assert not np.any(kernel_inverse(K).samples)

    def test_zero_parameter_rejected(self, gauss2d):
        K = kernel_of(gauss2d, 0.0, G4, G4)
        with pytest.raises(ConfigurationError):
            kernel_inverse(K)


class TestPlancherelPairing:
    def test_norm(self, gauss3d):
        res = pair_via_kernels(gauss3d, gauss3d, LambdaGrid())
        assert abs(res.value - 1.0) < 1e-4
        assert res.converged

    def test_orthogonal_t_factors(self, gauss3d, gauss3d_t1):
        assert abs(pair_via_kernels(gauss3d, gauss3d_t1, LambdaGrid()).value) < 1e-6

    def test_zero_partner(self, gauss3d):
        zero = Field3D(gauss3d.grids, np.zeros_like(gauss3d.samples))
        assert pair_via_kernels(gauss3d, zero, LambdaGrid(cells=8, r_range=1)).value == 0

    def test_matches_direct_inner_product(self, gauss3d):
        from hwave.heisenberg import left_translate
        other = left_translate(gauss3d, 0.5, -0.25, 0.5)
        direct = inner_product(gauss3d, other)
        via = pair_via_kernels(gauss3d, other, LambdaGrid()).value
        assert abs(via - direct) < 1e-3 * abs(direct)

    def test_lambda_grid(self):
        lg = LambdaGrid(cells=4)
        assert np.allclose(lg.points, [0.125, 0.375, 0.625, 0.875])
        assert lg.width == 0.25
        for bad in ({"cells": 0}, {"r_range": -1}):
            with pytest.raises(ConfigurationError):
                LambdaGrid(**bad)
