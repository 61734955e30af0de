"""The Heisenberg group: group law, left translations, dilations, wavelet elements.

Coordinates are (x, y, t) with product

    (x, y, t)(u, v, s) = (x + u, y + v, t + s + (u*y - v*x)/2).

All geometric operators are pullbacks by affine maps.  They act exactly on
the closed-form evaluator or the t-spectrum a field carries, and otherwise
resample the stored samples (index gathers where the map is grid-aligned,
trigonometric interpolation elsewhere).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainCoverageError
from .numerics import Field2D, Field3D, SliceSpectrum, fft_interp_columns, resample_axis, sample_inner

MAX_SCALE = 8


class HPoint(NamedTuple):
    x: float
    y: float
    t: float


class LatticeIndex(NamedTuple):
    k: int
    l: int
    m: int


def check_scale(j: int, bound: int = MAX_SCALE) -> int:
    if int(j) != j:
        raise ConfigurationError(f"scale index must be an integer, got {j!r}")
    if abs(j) > bound:
        raise ConfigurationError(f"|j| = {abs(j)} exceeds the resolvable bound {bound}")
    return int(j)


def group_mul(p, q) -> HPoint:
    """Group product ``p * q``."""
    x, y, t = p
    u, v, s = q
    return HPoint(x + u, y + v, t + s + 0.5 * (u * y - v * x))


def group_inv(p) -> HPoint:
    x, y, t = p
    return HPoint(-x, -y, -t)


# ---------------------------------------------------------------------------
# Affine pullbacks
# ---------------------------------------------------------------------------

_SUPPORT_KEYS = ("kernel_support", "r_range_max")


def _plain_meta(psi):
    """Metadata that survives a transformation (support hints do not)."""
    return {k: v for k, v in psi.meta.items() if k not in _SUPPORT_KEYS}


def _pullback(psi: Field3D, ax, bx, ay, by, at, c0, cx, cy, scale, check, coverage_tol):
    """Samples of ``scale * psi(ax x + bx, ay y + by, at t + c0 + cx x + cy y)``."""
    gx, gy, gt = psi.grids
    x, y, t = gx.points, gy.points, gt.points
    X = ax * x + bx
    Y = ay * y + by
    shear = c0 + cx * x[:, None] + cy * y[None, :]
    func = spectrum = None
    if psi.func is not None:
        base = psi.func

        def func(xx, yy, tt, _b=base):
            return scale * _b(ax * xx + bx, ay * yy + by, at * tt + c0 + cx * xx + cy * yy)

        samples = np.broadcast_to(
            func(x[:, None, None], y[None, :, None], t[None, None, :]), psi.shape).astype(complex)
    elif psi.spectrum is not None:
        sp = psi.spectrum
        sl = resample_axis(sp.slices, 1, gx, X)
        sl = resample_axis(sl, 2, gy, Y)
        sl = scale * sl * np.exp(-2j * np.pi * sp.lams[:, None, None] * shear[None])
        spectrum = SliceSpectrum(sp.lams * at, sl)
        samples = spectrum.synthesize(t)
    else:
        arr = resample_axis(psi.samples, 0, gx, X)
        arr = resample_axis(arr, 1, gy, Y)
        T = at * t[None, None, :] + shear[:, :, None]
        samples = scale * fft_interp_columns(arr, gt, T)
    out = Field3D(psi.grids, samples, func=func, spectrum=spectrum, meta=_plain_meta(psi))
    if check:
        before = sample_inner(psi.samples, psi.samples, psi.grids).real
        after = sample_inner(out.samples, out.samples, psi.grids).real
        if before > 0 and abs(after - before) > coverage_tol * before:
            raise DomainCoverageError(
                f"resampled field lost relative mass {abs(after - before) / before:.3e}")
    return out


def left_translate(psi: Field3D, u: float, v: float, s: float, check: bool = True,
                   coverage_tol: float = 1e-6) -> Field3D:
    """``L_(u,v,s) psi(x,y,t) = psi(x-u, y-v, t-s+(y*u-x*v)/2)`` on the same grid.

    Raises:
        DomainCoverageError: when ``check`` is set and the translated field
            lost more than ``coverage_tol`` of its squared norm at the edges.
    """
    return _pullback(psi, 1.0, -u, 1.0, -v, 1.0, -s, -0.5 * v, 0.5 * u, 1.0, check, coverage_tol)


def dilate_h(psi: Field3D, a: float, check: bool = True, coverage_tol: float = 1e-6) -> Field3D:
    """``delta_a psi(x,y,t) = |a|^2 psi(a x, a y, a^2 t)``."""
    if a == 0:
        raise ConfigurationError("dilation factor must be nonzero")
    return _pullback(psi, a, 0.0, a, 0.0, a * a, 0.0, 0.0, 0.0, abs(a) ** 2, check, coverage_tol)


def wavelet_element(psi: Field3D, j: int, idx, check: bool = True,
                    coverage_tol: float = 1e-6) -> Field3D:
    """The system element ``delta_{2^j} L_(k,l,m) psi``.

    Pointwise it equals
    ``4^j psi(2^j x - k, 2^j y - l, 4^j t - m + 2^j (y k - x l)/2)``.
    """
    j = check_scale(j)
    k, l, m = (int(v) for v in idx)
    a = 2.0 ** j
    return _pullback(psi, a, -k, a, -l, a * a, -m, -0.5 * a * l, 0.5 * a * k, a * a,
                     check, coverage_tol)


def t_transform(psi: Field3D, lam: float) -> Field2D:
    """Partial Fourier transform ``psi^lam(x,y) = int psi(x,y,t) e^{2 pi i lam t} dt``.

    Samples are read as their band-limited interpolant in t, so the
    transform vanishes for ``|lam|`` at or beyond the t-grid Nyquist
    frequency ``1 / (2 dt)`` instead of returning an aliased copy.
    """
    gt = psi.grid_t
    nx, ny, nt = psi.shape
    if abs(lam) >= 0.5 / gt.step:
        vals = np.zeros((nx, ny), dtype=complex)
    else:
        w = gt.weights() * np.exp(2j * np.pi * lam * gt.points)
        vals = (psi.samples.reshape(nx * ny, nt) @ w).reshape(nx, ny)
    meta = {k: v for k, v in psi.meta.items() if k in ("kernel_support", "builder")}
    return Field2D(psi.grids[:2], vals, meta=meta)
