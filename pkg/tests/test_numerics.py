"""Grids, quadrature, oscillatory transforms and lattice sums."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwave.errors import ConfigurationError, NumericalError
from hwave.numerics import (Field2D, Grid1D, TruncationPolicy, integrate, inner_product,
                            lattice_total, make_grid, oscillatory_ft, ordered_sum,
                            periodize_sum, resample_axis, squared_norm)


def test_make_grid_covers_interval():
    g = make_grid(-8, 0.0625, 257)
    assert g.start == -8 and g.stop == pytest.approx(8.0)
    assert np.all(np.diff(g.points) > 0)


def test_make_grid_two_points():
    assert list(make_grid(0, 1, 2).points) == [0.0, 1.0]


@pytest.mark.parametrize("args", [(0, -1, 4), (0, 0, 4), (0, 1, 1), (math.nan, 1, 4), (0, 1, 2.5)])
def test_make_grid_rejects_bad_input(args):
    with pytest.raises(ConfigurationError):
        make_grid(*args)


def test_symmetric_grid_requires_aligned_half_width():
    assert Grid1D.symmetric(1.0, 0.25).count == 9
    with pytest.raises(ConfigurationError):
        Grid1D.symmetric(1.0, 0.3)


def _field(fn, half=8.0, step=1 / 16):
    g = Grid1D.symmetric(half, step)
    return Field2D.from_function(g, g, fn)


def test_integrate_zero():
    assert integrate(_field(lambda x, y: 0 * x * y)) == 0


def test_integrate_gaussian_is_one():
    f = _field(lambda x, y: np.exp(-np.pi * (x * x + y * y)))
    assert abs(integrate(f) - 1.0) < 1e-10


def test_integrate_aligned_indicator_boundary_error():
    g = Grid1D.symmetric(2.0, 1 / 16)
    h = g.step
    closed = Field2D.from_function(
        g, g, lambda x, y: ((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)) + 0j)
    # the closed indicator counts its edge rows fully: area (1 + h)^2
    err = abs(integrate(closed) - 1.0)
    assert abs(err - (2 * h + h * h)) < 1e-12

    def edge_half(t):
        return np.where((t > 0) & (t < 1), 1.0, np.where((t == 0) | (t == 1), 0.5, 0.0))

    mid = Field2D.from_function(g, g, lambda x, y: edge_half(x) * edge_half(y) + 0j)
    assert abs(integrate(mid) - 1.0) < 1e-12


def test_integrate_rejects_non_finite():
    g = Grid1D.symmetric(1.0, 0.5)
    s = np.ones((5, 5), dtype=complex)
    s[2, 2] = np.nan
    with pytest.raises(NumericalError):
        integrate(Field2D((g, g), s))


def test_oscillatory_ft_gaussian_values():
    x = Grid1D.symmetric(8.0, 1 / 16)
    v = Grid1D(0.0, 2.0, 2)
    g = oscillatory_ft(np.exp(-np.pi * x.points ** 2), x, 1.0, v)
    assert abs(g[0] - 1.0) < 1e-12
    assert abs(g[1] - math.exp(-math.pi)) < 1e-12
    assert abs(g[1] - 0.0432139) < 1e-7


@pytest.mark.parametrize("lam", [0.25, 0.5, 1.0, 2.0])
def test_oscillatory_ft_gaussian_relative_error(lam):
    x = Grid1D.symmetric(6.0, 1 / 16)
    v = Grid1D.symmetric(3.0, 1 / 8)
    g = oscillatory_ft(np.exp(-np.pi * x.points ** 2), x, lam, v)
    exact = np.exp(-np.pi * lam ** 2 * v.points ** 2 / 4)
    # relative to the peak: pointwise ratios in the far tail (values near
    # 1e-13) only measure double-precision roundoff
    assert np.max(np.abs(g - exact)) / np.max(exact) < 1e-8


def test_oscillatory_ft_lambda_zero_is_integral():
    x = Grid1D.symmetric(4.0, 1 / 8)
    f = np.exp(-x.points ** 2) * (1 + 0.5j * x.points)
    g = oscillatory_ft(f, x, 0.0, Grid1D(-1, 0.5, 5))
    ref = np.sum(f * x.weights())
    assert np.allclose(g, ref, rtol=0, atol=1e-15)


def test_oscillatory_ft_indicator_zero_at_two():
    x = Grid1D(0.0, 1 / 64, 65)
    g = oscillatory_ft(np.ones(65), x, 1.0, Grid1D(2.0, 1.0, 2))
    assert abs(g[0]) < 1e-12


def test_chirp_path_matches_direct():
    rng = np.random.default_rng(5)
    x = Grid1D.symmetric(8.0, 1 / 16)
    f = rng.standard_normal(x.count) + 1j * rng.standard_normal(x.count)
    v = Grid1D.symmetric(8.0, 1 / 32)
    a = oscillatory_ft(f, x, 0.75, v, "direct")
    b = oscillatory_ft(f, x, 0.75, v, "czt")
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-10


def test_periodize_zero_is_converged():
    s = periodize_sum(lambda i: 0.0, TruncationPolicy(r_range=4))
    assert s.value == 0 and s.converged


def test_periodize_theta_sum():
    s4 = periodize_sum(lambda i: math.exp(-math.pi * i * i), TruncationPolicy(r_range=4))
    s8 = periodize_sum(lambda i: math.exp(-math.pi * i * i), TruncationPolicy(r_range=8))
    assert abs(s4.value - 1.0864348) < 1e-7
    assert abs(s4.value - s8.value) < 1e-15
    assert s4.converged


def test_periodize_flat_tail_is_unconverged():
    s = periodize_sum(lambda i: 1.0, TruncationPolicy(r_range=2, tail_eps=1e-10))
    assert s.value == 5 and not s.converged


def test_periodize_selects_range():
    pol = TruncationPolicy(r_range=1, s_range=2, m_range=3)
    assert periodize_sum(lambda i: 1.0, pol, "m").half_width == 3
    with pytest.raises(ConfigurationError):
        periodize_sum(lambda i: 1.0, pol, "q")


def test_lattice_total_needs_symmetric_terms():
    with pytest.raises(ConfigurationError):
        lattice_total(np.ones(4), 1e-10)


def test_truncation_policy_validation():
    with pytest.raises(ConfigurationError):
        TruncationPolicy(r_range=-1)
    with pytest.raises(ConfigurationError):
        TruncationPolicy(tail_eps=1.0)


def test_inner_product_normalized_gaussian():
    f = _field(lambda x, y: math.sqrt(2) * np.exp(-np.pi * (x * x + y * y)))
    assert abs(inner_product(f, f) - 1.0) < 1e-6
    zero = f.replace(samples=np.zeros(f.shape))
    assert inner_product(f, zero) == 0


def test_inner_product_grid_mismatch():
    a = _field(lambda x, y: x + y, half=1.0, step=0.5)
    b = _field(lambda x, y: x + y, half=1.0, step=0.25)
    with pytest.raises(ConfigurationError):
        inner_product(a, b)


def _random_fields(seed):
    rng = np.random.default_rng(seed)
    g = Grid1D.symmetric(1.0, 0.25)
    mk = lambda: Field2D((g, g), rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9)))  # noqa: E731
    return mk(), mk(), mk()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), a=st.complex_numbers(max_magnitude=10, allow_nan=False),
       b=st.complex_numbers(max_magnitude=10, allow_nan=False))
def test_inner_product_sesquilinear(seed, a, b):
    f, g, h = _random_fields(seed)
    lhs = inner_product(f.replace(samples=a * f.samples + b * g.samples), h)
    rhs = a * inner_product(f, h) + b * inner_product(g, h)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
    assert abs(inner_product(f, g) - np.conj(inner_product(g, f))) <= 1e-12 * (1 + abs(inner_product(f, g)))
    assert squared_norm(f) >= 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=50))
def test_ordered_sum_is_repeatable(terms):
    assert ordered_sum(terms) == ordered_sum(list(terms))


def test_resample_axis_exact_on_grid_points():
    g = Grid1D.symmetric(2.0, 0.25)
    s = np.exp(-g.points ** 2)[None, :] * np.ones((3, 1))
    out = resample_axis(s, 1, g, g.points[::2])
    assert np.allclose(out, s[:, ::2], atol=1e-13)
