"""Group law, translations, dilations and the partial t transform."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwave.errors import ConfigurationError, DomainCoverageError
from hwave.heisenberg import (check_scale, dilate_h, group_inv, group_mul, left_translate,
                              t_transform, wavelet_element)
from hwave.numerics import Field3D, Grid1D, sample_inner
from hwave.twisted import element_transform_two_path

G = Grid1D.symmetric(6.0, 1 / 8)


def plain_gaussian(x, y, t):
    return np.exp(-math.pi * (x * x + y * y + t * t)) + 0j


def _index(grid, value):
    return int(round((value - grid.start) / grid.step))


def _norm2(f):
    return sample_inner(f.samples, f.samples, f.grids).real


def _samples_only(f):
    return Field3D(f.grids, f.samples.copy())


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
triples = st.tuples(finite, finite, finite)


class TestGroupLaw:
    def test_product_example(self):
        assert tuple(group_mul((1, 0, 0), (0, 1, 0))) == (1, 1, -0.5)

    def test_identity_example(self):
        assert tuple(group_mul((1.5, -2, 3), (0, 0, 0))) == (1.5, -2, 3)
        assert tuple(group_mul((0, 0, 0), (1.5, -2, 3))) == (1.5, -2, 3)

    def test_associativity_example(self):
        a = group_mul(group_mul((1, 2, 3), (4, 5, 6)), (7, 8, 9))
        b = group_mul((1, 2, 3), group_mul((4, 5, 6), (7, 8, 9)))
        assert tuple(a) == tuple(b)

    def test_inverse_examples(self):
        assert tuple(group_inv((2, 3, 5))) == (-2, -3, -5)
        assert tuple(group_inv((0, 0, 0))) == (0, 0, 0)

    def test_seeded_random_triples(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            p, q, r = (tuple(rng.uniform(-10, 10, 3)) for _ in range(3))
            lhs = group_mul(group_mul(p, q), r)
            rhs = group_mul(p, group_mul(q, r))
            assert np.allclose(lhs, rhs, rtol=0, atol=1e-11)
            assert np.allclose(group_mul(p, (0, 0, 0)), p, atol=0)
            assert np.allclose(group_mul(p, group_inv(p)), 0, atol=1e-12)

    @given(triples, triples, triples)
    @settings(max_examples=200, deadline=None)
    def test_associativity_property(self, p, q, r):
        lhs = group_mul(group_mul(p, q), r)
        rhs = group_mul(p, group_mul(q, r))
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)

    @given(triples)
    @settings(max_examples=200, deadline=None)
    def test_inverse_property(self, p):
        assert np.allclose(group_mul(group_inv(p), p), 0, atol=1e-9)


class TestTranslations:
    def test_zero_translation_is_identity(self, gauss3d):
        out = left_translate(gauss3d, 0, 0, 0)
        assert np.array_equal(out.samples, gauss3d.samples)

    def test_pure_t_shift(self):
        f = Field3D.from_function(G, G, G, plain_gaussian)
        out = left_translate(f, 0, 0, 1)
        x, y, t = G.points[:, None, None], G.points[None, :, None], G.points[None, None, :]
        assert np.max(np.abs(out.samples - plain_gaussian(x, y, t - 1))) < 1e-14

    def test_pointwise_formula(self):
        f = Field3D.from_function(G, G, G, plain_gaussian)
        u, v, s = 0.5, -1.0, 0.25
        out = left_translate(f, u, v, s)
        x, y, t = G.points[:, None, None], G.points[None, :, None], G.points[None, None, :]
        ref = plain_gaussian(x - u, y - v, t - s + 0.5 * (y * u - x * v))
        assert np.max(np.abs(out.samples - ref)) < 1e-14

    def test_norm_preserved(self, gauss3d):
        out = left_translate(gauss3d, 1, 1, 0)
        assert abs(_norm2(out) - _norm2(gauss3d)) < 1e-6

    def test_samples_only_path_matches_closed_form(self, gauss3d):
        exact = left_translate(gauss3d, 1, 0, 0.5)
        interp = left_translate(_samples_only(gauss3d), 1, 0, 0.5)
        assert np.max(np.abs(exact.samples - interp.samples)) < 1e-5
        assert abs(_norm2(interp) - 1.0) < 1e-5

    def test_support_escape_raises(self, gauss3d):
        with pytest.raises(DomainCoverageError):
            left_translate(gauss3d, 5.5, 0, 0)

    def test_escape_check_can_be_disabled(self, gauss3d):
        out = left_translate(gauss3d, 5.5, 0, 0, check=False)
        assert _norm2(out) < 1 - 1e-3


class TestDilations:
    def test_unit_factor_is_identity(self, gauss3d):
        out = dilate_h(gauss3d, 1.0)
        assert np.max(np.abs(out.samples - gauss3d.samples)) < 1e-15

    def test_point_value(self):
        f = Field3D.from_function(G, G, G, plain_gaussian)
        out = dilate_h(f, 2.0, check=False)
        val = out.samples[_index(G, 1.0), _index(G, 0.0), _index(G, 0.0)]
        assert abs(val - 4 * math.exp(-4 * math.pi)) < 1e-18
        assert abs(val.real - 1.39493e-5) < 1e-10

    def test_norm_preserved(self, gauss3d_default):
        assert abs(_norm2(dilate_h(gauss3d_default, 2.0)) - 1.0) < 1e-6
        assert abs(_norm2(dilate_h(gauss3d_default, 0.5)) - 1.0) < 1e-6

    def test_coarse_t_step_flags_unresolved_dilation(self, gauss3d):
        # at t step 1/8 the factor e^{-16 pi t^2} loses 3.7e-3 of its quadrature norm
        with pytest.raises(DomainCoverageError):
            dilate_h(gauss3d, 2.0)

    def test_zero_factor_rejected(self, gauss3d):
        with pytest.raises(ConfigurationError):
            dilate_h(gauss3d, 0.0)

    def test_scale_bound(self):
        assert check_scale(-8) == -8
        for bad in (9, -9, 0.5):
            with pytest.raises(ConfigurationError):
                check_scale(bad)


class TestWaveletElements:
    def test_trivial_index_is_identity(self, gauss3d):
        out = wavelet_element(gauss3d, 0, (0, 0, 0))
        assert np.max(np.abs(out.samples - gauss3d.samples)) < 1e-15

    def test_scale_zero_is_translation(self, gauss3d):
        a = wavelet_element(gauss3d, 0, (1, -1, 1))
        b = left_translate(gauss3d, 1, -1, 1)
        assert np.max(np.abs(a.samples - b.samples)) < 1e-14

    def test_matches_dilated_translate(self, gauss3d_default):
        f = gauss3d_default
        a = wavelet_element(f, 1, (1, 0, -1))
        b = dilate_h(left_translate(f, 1, 0, -1), 2.0)
        assert np.max(np.abs(a.samples - b.samples)) < 1e-12

    def test_norm_preserved(self, gauss3d_default):
        assert abs(_norm2(wavelet_element(gauss3d_default, 1, (1, 1, 1))) - 1.0) < 1e-5
        assert abs(_norm2(left_translate(gauss3d_default, 1, 1, 0)) - 1.0) < 1e-5


class TestTTransform:
    def test_gaussian_factor(self, gauss2d):
        f = Field3D.from_function(G, G, G, plain_gaussian)
        out = t_transform(f, 1.0)
        phi = np.exp(-math.pi * (G.points[:, None] ** 2 + G.points[None, :] ** 2))
        assert np.max(np.abs(out.samples - math.exp(-math.pi) * phi)) < 1e-12
        assert abs(math.exp(-math.pi) - 0.0432139) < 1e-7

    def test_zero_frequency_is_t_integral(self):
        f = Field3D.from_function(G, G, G, plain_gaussian)
        out = t_transform(f, 0.0)
        ref = f.samples @ G.weights()
        assert np.array_equal(out.samples, ref)

    def test_shift_theorem(self, gauss3d):
        shifted = left_translate(gauss3d, 0, 0, 1)
        for lam in (0.25, 0.5, 1.0, 2.0):
            lhs = t_transform(shifted, lam).samples
            rhs = np.exp(2j * math.pi * lam) * t_transform(gauss3d, lam).samples
            assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_linearity(self, gauss3d):
        f2 = left_translate(gauss3d, 0.5, 0, 0)
        combo = Field3D(gauss3d.grids, 2 * gauss3d.samples - 1j * f2.samples)
        lhs = t_transform(combo, 0.75).samples
        rhs = 2 * t_transform(gauss3d, 0.75).samples - 1j * t_transform(f2, 0.75).samples
        assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_beyond_nyquist_is_zero(self, gauss3d):
        assert not np.any(t_transform(gauss3d, 4.0).samples)


@pytest.mark.parametrize("j", [-1, 0, 1])
@pytest.mark.parametrize("idx", [(0, 0, 0), (1, -1, 1), (-1, 1, 0), (1, 1, -1)])
@pytest.mark.parametrize("lam", [1 / 128, 0.3, 0.5 + 1 / 128, 1.7])
def test_element_transform_identity(gauss3d, j, idx, lam):
    assert element_transform_two_path(gauss3d, j, idx, lam) < 1e-6
