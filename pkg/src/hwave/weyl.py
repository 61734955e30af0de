"""Kernel calculus of the Weyl transform.

For a function f on the plane and a parameter lam, the kernel is

    K^lam_f(xi, eta) = int f(x, eta - xi) e^{pi i lam x (xi + eta)} dx.

In the rotated coordinates u = eta - xi, v = xi + eta the kernel is, for each
fixed u, a one-dimensional oscillatory integral of the column f(., u).  All
routines here work in that picture: columns of f are taken on the sample
grid in y (or interpolated when the requested u-values are off-grid), and the
v-dependence is produced by :func:`hwave.numerics.ft_sum`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from .numerics import (Field2D, Field3D, Grid1D, LatticeSum, TruncationPolicy, ft_sum,
                       lattice_total, midpoints, ordered_sum, resample_axis)
from .heisenberg import t_transform


class WeylKernel(Field2D):
    """Kernel samples over a (xi, eta) grid, tagged with the parameter ``lam``."""

    def __init__(self, lam, grid_xi, grid_eta, samples, meta=None):
        super().__init__((grid_xi, grid_eta), samples, meta=meta)
        self.lam = float(lam)

    @property
    def grid_xi(self) -> Grid1D:
        return self.grids[0]

    @property
    def grid_eta(self) -> Grid1D:
        return self.grids[1]


@dataclass(frozen=True)
class LambdaGrid:
    """Midpoint grid on (0, 1) plus the half-width of the integer periodization."""

    cells: int = 64
    r_range: int = 4

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 1:
            raise ConfigurationError("lambda grid needs a positive cell count")
        if int(self.r_range) != self.r_range or self.r_range < 0:
            raise ConfigurationError("r_range must be a non-negative integer")

    @property
    def points(self) -> np.ndarray:
        return midpoints(self.cells)

    @property
    def width(self) -> float:
        return 1.0 / self.cells

    def to_dict(self) -> dict:
        return {"cells": self.cells, "r_range": self.r_range}


# ---------------------------------------------------------------------------
# Kernel evaluation
# ---------------------------------------------------------------------------


def _columns(f: Field2D, u_positions: np.ndarray) -> np.ndarray:
    """Columns ``f(., u)`` for each requested ``u`` (zeros outside the y box)."""
    return resample_axis(f.samples, 1, f.grid_y, u_positions)


def _phase_weighted(f: Field2D, lam: float, cols: np.ndarray, u: np.ndarray) -> np.ndarray:
    x = f.grid_x.points
    w = f.grid_x.weights()
    return cols * w[:, None] * np.exp(1j * np.pi * lam * x[:, None] * u[None, :])


def _band_limit(out: np.ndarray, f: Field2D, lam: float, v: np.ndarray) -> np.ndarray:
    """Zero kernel values whose probe frequency ``lam v / 2`` is past x-Nyquist.

    Samples are read as their band-limited interpolant in x, whose Fourier
    transform vanishes at or beyond ``1 / (2 dx)``; a plain Riemann sum
    would return an aliased copy there instead.  ``v`` broadcasts to ``out``.
    """
    limit = 1.0 / f.grid_x.step
    lv = np.abs(lam * np.asarray(v, dtype=float))
    if lv.size and lv.max() >= limit:
        out = np.where(lv >= limit, 0.0, out)
    return out


def kernel_table(f: Field2D, lam: float, u_grid: Grid1D, v_grid: Grid1D,
                 method: str = "direct") -> np.ndarray:
    """Kernel values on a rotated lattice: ``B[p, q] = K(xi, eta)`` at u_q, v_p.

    Here ``xi = (v - u)/2`` and ``eta = (v + u)/2``.  Columns with ``u``
    outside the y box of ``f`` are exactly zero and skipped.
    """
    u = u_grid.points
    gy = f.grid_y
    inside = (u >= gy.start - 1e-12) & (u <= gy.stop + 1e-12)
    out = np.zeros((v_grid.count, u_grid.count), dtype=complex)
    if not inside.any():
        return out
    cols = _columns(f, u[inside])
    M = cols * f.grid_x.weights()[:, None]
    out[:, inside] = ft_sum(M, f.grid_x, lam, v_grid, method)
    return _band_limit(out, f, lam, v_grid.points[:, None])


def kernel_of(f: Field2D, lam: float, grid_xi: Grid1D | None = None,
              grid_eta: Grid1D | None = None, method: str = "direct") -> WeylKernel:
    """Weyl kernel ``K^lam_f`` sampled on a (xi, eta) grid.

    Args:
        f: sampled function on the plane.
        lam: kernel parameter (0 gives plain integrals of the columns).
        grid_xi, grid_eta: output grids; default to the y grid of ``f``.
            Both must share one step so that the rotated lattice is uniform.
        method: Fourier summation method passed to ``ft_sum``.

    Returns:
        WeylKernel with samples of shape ``(len(xi), len(eta))``.
    """
    if not np.all(np.isfinite(f.samples)):
        raise NumericalError("non-finite samples in kernel_of")
    gxi = grid_xi or f.grid_y
    geta = grid_eta or f.grid_y
    h = gxi.step
    if abs(geta.step - h) > 1e-12 * h:
        raise ConfigurationError("xi and eta grids must share a common step")
    nxi, neta = gxi.count, geta.count
    u_grid = Grid1D(geta.start - gxi.start - (nxi - 1) * h, h, nxi + neta - 1)
    v_grid = Grid1D(gxi.start + geta.start, h, nxi + neta - 1)
    B = kernel_table(f, lam, u_grid, v_grid, method)
    i = np.arange(nxi)[:, None]
    j = np.arange(neta)[None, :]
    K = B[i + j, j - i + nxi - 1]
    return WeylKernel(lam, gxi, geta, K)


def kernel_rows(f: Field2D, lam: float, a_grid: Grid1D, method: str = "direct",
                columns: slice | None = None) -> np.ndarray:
    """Kernel along diagonals: ``rows[i, n] = K^lam_f(a_i, a_i + y_n)``.

    ``y_n`` runs over the y grid of ``f`` (or the given slice of it).  No
    interpolation is involved, which makes this the workhorse of every
    lattice-sum diagnostic.
    """
    gy = f.grid_y
    sl = columns if columns is not None else slice(None)
    u = gy.points[sl]
    M = _phase_weighted(f, lam, f.samples[:, sl], u)
    v_grid = Grid1D(2 * a_grid.start, 2 * a_grid.step, a_grid.count)
    out = ft_sum(M, f.grid_x, lam, v_grid, method)
    return _band_limit(out, f, lam, v_grid.points[:, None] + u[None, :])


def kernel_rows_affine(f: Field2D, lam: float, q: float, d_grid: Grid1D,
                       method: str = "direct", columns: slice | None = None) -> np.ndarray:
    """Kernel along lines ``v = q*u + d``: ``out[i, n] = B(u = y_n, v = q*y_n + d_i)``.

    With ``q = 1`` and ``d = 2a`` this reduces to :func:`kernel_rows`.
    """
    gy = f.grid_y
    sl = columns if columns is not None else slice(None)
    u = gy.points[sl]
    M = _phase_weighted(f, lam * q, f.samples[:, sl], u)
    out = ft_sum(M, f.grid_x, lam, d_grid, method)
    return _band_limit(out, f, lam, d_grid.points[:, None] + q * u[None, :])


# ---------------------------------------------------------------------------
# Support estimates used to tighten lattice ranges
# ---------------------------------------------------------------------------


def y_support(f: Field2D, rel: float = 1e-14) -> tuple[int, int]:
    """Index range ``[lo, hi]`` of y-columns carrying non-negligible energy."""
    e = np.sum(np.abs(f.samples) ** 2, axis=0)
    tot = e.sum()
    if tot == 0:
        return 0, -1
    nz = np.nonzero(e > rel * e.max())[0]
    return int(nz[0]), int(nz[-1])


def x_band(f: Field2D, rel: float = 1e-14) -> tuple[float, float]:
    """Frequency band ``[w_lo, w_hi]`` (cycles per unit x) holding the energy of f.

    Energy below ``rel`` times the total is discarded symmetrically from both
    ends of the (zero-padded) discrete spectrum.
    """
    nx = f.grid_x.count
    n = 1 << int(np.ceil(np.log2(2 * nx)))
    spec = np.fft.fftshift(np.fft.fft(f.samples, n=n, axis=0), axes=0)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=f.grid_x.step))
    e = np.sum(np.abs(spec) ** 2, axis=1)
    tot = e.sum()
    if tot == 0:
        return 0.0, 0.0
    c = np.cumsum(e)
    lo = int(np.searchsorted(c, rel * tot))
    hi = int(np.searchsorted(c, (1 - rel) * tot))
    df = freqs[1] - freqs[0]
    return float(freqs[max(lo, 0)] - df), float(freqs[min(hi, n - 1)] + df)


def uv_support(f: Field2D, lam: float, rel: float = 1e-14):
    """Ranges of ``u = eta - xi`` and ``v = xi + eta`` where ``K^lam_f`` lives.

    A ``kernel_support`` entry in ``f.meta`` (``{"box": ((a0, a1), (b0, b1)),
    "lam": value or None}``, the (xi, eta) box at the stated parameter, ``None``
    meaning every parameter) is used exactly: u does not depend on the
    parameter and v scales like ``1 / lam``.  Otherwise the y-support of f
    bounds u and the x-band bounds v, because the phase ``e^{pi i lam x v}``
    probes frequency ``lam v / 2``.

    Returns:
        ``((u_lo, u_hi), (v_lo, v_hi))``, or ``None`` when f vanishes.
    """
    if lam == 0:
        raise ConfigurationError("kernel support undefined at lam = 0")
    meta = f.meta.get("kernel_support")
    if meta is not None:
        (a0, a1), (b0, b1) = meta["box"]
        ratio = 1.0 if meta.get("lam") is None else meta["lam"] / lam
        v1, v2 = sorted(((a0 + b0) * ratio, (a1 + b1) * ratio))
        return (float(b0 - a1), float(b1 - a0)), (float(v1), float(v2))
    lo, hi = y_support(f, rel)
    if hi < lo:
        return None
    w_lo, w_hi = x_band(f, rel)
    v1, v2 = sorted((-2 * w_hi / lam, -2 * w_lo / lam))
    return (f.grid_y.point(lo), f.grid_y.point(hi)), (v1, v2)


def row_support(f: Field2D, lam: float, rel: float = 1e-14) -> tuple[float, float]:
    """Range of ``a`` outside which the rows ``K(a, a + u)`` are negligible.

    When the ``kernel_support`` box of f holds at ``lam`` its xi-range is
    returned directly; otherwise the range follows from :func:`uv_support`.
    """
    meta = f.meta.get("kernel_support")
    if meta is not None and (meta.get("lam") is None or meta["lam"] == lam):
        (a0, a1), _ = meta["box"]
        return float(a0), float(a1)
    sup = uv_support(f, lam, rel)
    if sup is None:
        return 0.0, 0.0
    (u_lo, u_hi), (v1, v2) = sup
    return (v1 - u_hi) / 2, (v2 - u_lo) / 2


# ---------------------------------------------------------------------------
# Inversion and pairings
# ---------------------------------------------------------------------------


def kernel_inverse(K: WeylKernel, grid_x: Grid1D | None = None, grid_y: Grid1D | None = None,
                   method: str = "direct") -> Field2D:
    """Recover f from ``K = K^lam_f``.

    Uses ``f(x, u) = (|lam|/2) int K((v-u)/2, (v+u)/2) e^{-pi i lam x v} dv``
    evaluated directly on the rotated sample lattice (for fixed u the samples
    are spaced 2h apart in v), so no interpolation of K is needed.  The
    reconstruction is alias-free only for ``|lam x| < 1/(2h)``; beyond that
    the output wraps around.

    Args:
        K: kernel on a (xi, eta) grid with equal steps.
        grid_x, grid_y: output grids; both default to ``K.grid_xi``.
        method: Fourier summation method.
    """
    if K.lam == 0:
        raise ConfigurationError("kernel_inverse is undefined at lam = 0")
    gxi, geta = K.grid_xi, K.grid_eta
    h = gxi.step
    if abs(geta.step - h) > 1e-12 * h:
        raise ConfigurationError("xi and eta grids must share a common step")
    gx = grid_x or gxi
    gy = grid_y or gxi
    nxi, neta = gxi.count, geta.count
    nrot = nxi + neta - 1
    T = np.zeros((nrot, nrot), dtype=complex)
    i = np.arange(nxi)[:, None]
    j = np.arange(neta)[None, :]
    T[i + j, j - i + nxi - 1] = K.samples
    v_grid = Grid1D(gxi.start + geta.start, h, nrot)
    u_grid = Grid1D(geta.start - gxi.start - (nxi - 1) * h, h, nrot)
    cols = ft_sum(T * (abs(K.lam) * h), v_grid, -K.lam, gx, method)
    vals = resample_axis(cols, 1, u_grid, gy.points)
    return Field2D((gx, gy), vals)


def kernel_inner(f: Field2D, g: Field2D, lam: float, method: str = "direct") -> complex:
    """``<K^lam_f, K^lam_g>`` over the whole (xi, eta) plane.

    Rows ``K(a, a + u)`` are summed over one full period of the discrete
    Fourier sum in ``a``, which makes the discrete Parseval identity exact.
    """
    if lam == 0:
        raise ConfigurationError("kernel pairing needs lam != 0")
    gx = f.grid_x
    nx = gx.count
    period = 1.0 / (abs(lam) * gx.step)
    da = period / nx
    a_grid = Grid1D(-period / 2, da, nx)
    rf = kernel_rows(f, lam, a_grid, method)
    rg = kernel_rows(g, lam, a_grid, method)
    wy = f.grid_y.weights()
    return complex(np.sum(rf * np.conj(rg) * wy[None, :]) * da)


def pair_via_kernels(f: Field3D, g: Field3D, lgrid: LambdaGrid,
                     pol: TruncationPolicy | None = None, method: str = "direct") -> LatticeSum:
    """Plancherel pairing ``<f, g> = int <K^lam_{f^lam}, K^lam_{g^lam}> |lam| dlam``.

    The lam-integral is the midpoint rule on (0, 1) periodized over
    ``lam + r`` for ``|r| <= lgrid.r_range``; the result carries the tail
    flag of the r-sum.
    """
    tail_eps = (pol or TruncationPolicy()).tail_eps
    R = lgrid.r_range
    by_r = []
    for r in range(-R, R + 1):
        cell_terms = []
        for lam in lgrid.points:
            L = lam + r
            fl, gl = t_transform(f, L), t_transform(g, L)
            cell_terms.append(kernel_inner(fl, gl, L, method) * abs(L))
        by_r.append(ordered_sum(cell_terms) * lgrid.width)
    return lattice_total(np.array(by_r), tail_eps)


def kernel_point(f: Field2D, lam: float, xi: float, eta: float) -> complex:
    """Single kernel value ``K^lam_f(xi, eta)`` by direct quadrature in x.

    Probe frequencies past x-Nyquist give zero, as in the row evaluators.

    The column ``f(., eta - xi)`` comes from the closed-form evaluator when f
    carries one and from trigonometric interpolation in y otherwise.
    """
    u = float(eta) - float(xi)
    gx = f.grid_x
    if abs(lam * (float(xi) + float(eta))) >= 1.0 / gx.step:
        return 0j
    x = gx.points
    if f.func is not None:
        col = np.broadcast_to(f.func(x, np.full_like(x, u)), x.shape).astype(complex)
    else:
        col = _columns(f, np.array([u]))[:, 0]
    w = gx.weights() * np.exp(1j * np.pi * lam * x * (float(xi) + float(eta)))
    return complex(np.sum(col * w))
