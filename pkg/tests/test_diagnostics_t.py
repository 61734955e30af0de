"""Twisted-side diagnostics S, P, Q, R and the twisted condition checks."""

import math

import numpy as np
import pytest

from hwave.curves import FAIL, PASS, overall
from hwave.diagnostics_t import (SRows, XiGrid, check_twisted_translates, check_twisted_wavelet,
                                 compute_P, compute_Q, compute_R, compute_S, compute_T,
                                 default_p_window, mean_value_defect, r_target, scale_parameter)
from hwave.errors import ConfigurationError, SingularScaleError
from hwave.numerics import Field2D, TruncationPolicy, squared_norm
from hwave.signals import build_signal

SQRT2 = math.sqrt(2.0)
# R at j = -2 for the Gaussian reaches |m| ~ 20 before its tail drops below 1e-10
POL = TruncationPolicy(m_range=32)


def gaussian_kernel(lam, a, b):
    return SQRT2 * np.exp(-math.pi * (b - a) ** 2) * np.exp(-math.pi * lam ** 2 * (a + b) ** 2 / 4)


@pytest.fixture(scope="module")
def zero2d(gauss2d):
    return Field2D(gauss2d.grids, np.zeros_like(gauss2d.samples))


@pytest.fixture(scope="module")
def gauss_rows(gauss2d):
    return SRows(gauss2d, XiGrid(), POL)


class TestXiGridAndScales:
    def test_points(self):
        assert np.allclose(XiGrid(4).points, [0.125, 0.375, 0.625, 0.875])
        with pytest.raises(ConfigurationError):
            XiGrid(0)

    def test_scale_parameter(self):
        assert scale_parameter(1) == 0.25
        assert scale_parameter(-2) == 16.0
        with pytest.raises(SingularScaleError):
            scale_parameter(0)

    def test_r_target(self):
        assert r_target(1) == 15 / 64
        assert r_target(-1) == 3.75


class TestS:
    def test_origin_value(self, gauss2d):
        assert abs(compute_S(gauss2d, 1, 0, 0.0, 0, 0.0) - SQRT2) < 1e-12

    def test_closed_form(self, gauss2d):
        for xi, m, y in [(0.3, 1, 0.2), (0.7, -1, -0.4), (0.1, 0, 0.05)]:
            a, b = 2 * (xi + m - y) / 1.25, 2 * y / 0.75
            assert abs(compute_S(gauss2d, 1, 0, xi, m, y) - gaussian_kernel(1.0, a, b)) < 1e-12

    def test_zero_field(self, zero2d):
        assert compute_S(zero2d, 1, 1, 0.3, 0, 0.1) == 0

    def test_singular_scale(self, gauss2d):
        with pytest.raises(SingularScaleError):
            compute_S(gauss2d, 0, 0, 0.5, 0, 0.0)


class TestP:
    def test_brute_force_reference(self, gauss2d):
        P = compute_P(gauss2d, 0, 1, 0, 0)
        assert P.converged
        eta = np.linspace(-12, 12, 24001)
        for i in (0, 17, 40):
            xi = P.points[i]
            ref = sum(np.trapezoid(gaussian_kernel(1.0, 2 * (xi + m), eta)
                                   * np.conj(gaussian_kernel(0.25, 4 * (xi + m), 2 * eta)), eta)
                      for m in range(-40, 41))
            assert abs(P.values[i] - ref) < 1e-6

    def test_diagonal_positive(self, gauss2d):
        for j, l in [(-1, 0), (1, 1), (2, -1)]:
            P = compute_P(gauss2d, j, j, l, l, pol=POL)
            assert np.all(P.values.real >= 0)
            assert np.max(np.abs(P.values.imag)) <= 1e-12 * max(1.0, np.max(P.values.real))

    def test_zero_field(self, zero2d):
        assert not np.any(compute_P(zero2d, 0, 1, 0, 1).values)

    def test_default_window(self):
        w = default_p_window()
        assert len(w) == 3 * 2 * 9 and all(t[1] > t[0] for t in w)
        with pytest.raises(ConfigurationError):
            default_p_window({"dj": [-1]})


class TestQR:
    def test_q_diagonal_is_r_bitwise(self, gauss2d, gauss_rows):
        for j in (-2, -1, 1, 2):
            for l in (-1, 0, 1):
                q = compute_Q(gauss2d, j, l, l, srows=gauss_rows)
                r = compute_R(gauss2d, j, l, srows=gauss_rows)
                assert q.values.tobytes() == r.values.tobytes()

    def test_r_nonnegative(self, gauss2d, gauss_rows):
        r = compute_R(gauss2d, -1, 1, srows=gauss_rows)
        assert np.all(r.values.real >= 0) and not np.any(r.values.imag)

    def test_cauchy_schwarz(self, gauss2d, gauss_rows):
        for j in (-1, 1, 2):
            for l1, l2 in [(0, 1), (-1, 1), (1, -1)]:
                q = compute_Q(gauss2d, j, l1, l2, srows=gauss_rows).values
                r1 = compute_R(gauss2d, j, l1, srows=gauss_rows).values.real
                r2 = compute_R(gauss2d, j, l2, srows=gauss_rows).values.real
                assert np.all(np.abs(q) <= np.sqrt(r1 * r2) * (1 + 1e-12) + 1e-15)

    def test_mean_values(self, gauss2d, gauss_rows):
        assert abs(compute_R(gauss2d, 1, 0, srows=gauss_rows).mean().real - 0.234375) < 1e-3
        assert abs(compute_R(gauss2d, -1, 0, srows=gauss_rows).mean().real - 3.75) < 1e-2

    def test_mean_value_identity_gaussian(self, gauss2d):
        assert mean_value_defect(gauss2d, pol=POL) < 1e-3

    def test_mean_value_identity_box(self, phi_box):
        # at j = -2, l = +-1 the modulation moves the kernel support out to |m| ~ 16
        assert mean_value_defect(phi_box, pol=POL) < 1e-3
        assert not compute_R(phi_box, -2, 1).converged

    def test_mean_value_identity_scales_with_norm(self, gauss2d):
        f = Field2D(gauss2d.grids, 0.5 * gauss2d.samples, func=None)
        r = compute_R(f, 1, 0, pol=POL)
        assert abs(r.mean().real - r_target(1) * squared_norm(f)) < 1e-3 * r_target(1) * 0.25

    def test_narrow_m_range_is_flagged(self, gauss2d):
        assert not compute_R(gauss2d, -2, 1, pol=TruncationPolicy(m_range=4)).converged

    def test_zero_field(self, zero2d):
        assert not np.any(compute_R(zero2d, 1, 0).values)
        assert not np.any(compute_Q(zero2d, 1, 0, 1).values)

    def test_singular_scale(self, gauss2d):
        with pytest.raises(SingularScaleError):
            compute_R(gauss2d, 0, 0)
        with pytest.raises(SingularScaleError):
            compute_Q(gauss2d, 0, 0, 1)


class TestTwistedTranslates:
    def test_box_passes(self, phi_box):
        reps = check_twisted_translates(phi_box, tol=1e-3)
        assert [r.verdict for r in reps] == [PASS, PASS]
        assert reps[0].max_deviation < 1e-3

    def test_gaussian_fails_first_condition(self, gauss2d):
        reps = check_twisted_translates(gauss2d)
        assert reps[0].verdict == FAIL
        assert reps[0].max_deviation > 0.05

    def test_zero_fails(self, zero2d):
        assert check_twisted_translates(zero2d)[0].verdict == FAIL

    def test_t0_is_periodized_energy(self, gauss2d):
        t0 = compute_T(gauss2d, 0)
        assert abs(t0.mean().real - 1.0) < 1e-6
        assert np.all(t0.values.real > 0)


class TestTwistedWavelet:
    WINDOW = {"l": [-1, 0, 1], "j1": [-1, 0], "dj": [1], "j": [-1, 1]}

    def test_reports_and_gaussian_verdict(self, gauss2d):
        reps = check_twisted_wavelet(gauss2d, self.WINDOW, pol=POL)
        assert [r.condition for r in reps] == [
            "twisted_translates.i", "twisted_translates.ii", "twisted_wavelet.iii",
            "twisted_wavelet.iv", "twisted_wavelet.v"]
        assert overall(reps) == FAIL
        for label, d in reps[4].details["xi_means"].items():
            assert abs(d["mean"] - d["mean_value_target"]) < 1e-3 * d["mean_value_target"]

    def test_box_reports(self, phi_box):
        reps = check_twisted_wavelet(phi_box, self.WINDOW)
        assert reps[0].passed and reps[1].passed
        assert all(math.isfinite(r.max_deviation) for r in reps)

    def test_zero_fails(self, zero2d):
        reps = check_twisted_wavelet(zero2d, {"l": [0, 1], "j1": [0], "dj": [1], "j": [1]})
        assert reps[0].verdict == FAIL

    def test_scale_zero_rejected(self, gauss2d):
        with pytest.raises(ConfigurationError):
            check_twisted_wavelet(gauss2d, {"j": [0, 1]})
