"""Grids, sampled fields, quadrature, oscillatory integrals and lattice sums.

Every other module builds on the objects defined here.  Fields are complex
samples on closed uniform boxes; integrals use the trapezoidal rule, which is
spectrally accurate for the smooth, rapidly decaying functions used in the
test battery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.signal import czt as _scipy_czt

from .errors import ConfigurationError, NumericalError

FT_METHODS = ("direct", "czt", "auto")
# "auto" switches to the chirp-z path once the direct phase matrix gets large
_AUTO_CZT_MIN = 1 << 20
_ALIGN_TOL = 1e-9
# Memory budget (complex entries) for one block of a dense phase matrix.
_BLOCK_ENTRIES = 1 << 21
# Longest chirp segment; keeps chirp phases small enough for 1e-12 accuracy.
_CZT_BLOCK = 2048


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + i*step`` for ``0 <= i < count``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise ConfigurationError("grid start and step must be finite")
        if self.step <= 0:
            raise ConfigurationError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigurationError(f"grid count must be an integer >= 2, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "step", float(self.step))

    @property
    def stop(self) -> float:
        """Last grid point."""
        return self.start + (self.count - 1) * self.step

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def length(self) -> float:
        return (self.count - 1) * self.step

    def point(self, i: int) -> float:
        if not 0 <= i < self.count:
            raise IndexError(i)
        return self.start + i * self.step

    def weights(self) -> np.ndarray:
        """Trapezoid weights (step, halved at both ends)."""
        w = np.full(self.count, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def scaled(self, factor: float) -> "Grid1D":
        """Grid of the points ``factor * p`` (factor > 0)."""
        if factor <= 0:
            raise ConfigurationError("grid scale factor must be positive")
        return Grid1D(self.start * factor, self.step * factor, self.count)

    def shifted(self, offset: float) -> "Grid1D":
        return Grid1D(self.start + offset, self.step, self.count)

    def fractional_index(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.start) / self.step

    def matches(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        if self.count != other.count:
            return False
        scale = max(abs(self.step), abs(self.start), 1.0)
        return (abs(self.start - other.start) <= rtol * scale
                and abs(self.step - other.step) <= rtol * abs(self.step))

    def to_dict(self) -> dict:
        return {"start": self.start, "step": self.step, "count": self.count}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid1D":
        try:
            return cls(float(d["start"]), float(d["step"]), int(d["count"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid grid record {d!r}") from exc

    @classmethod
    def symmetric(cls, half_width: float, step: float) -> "Grid1D":
        """Closed grid on ``[-half_width, half_width]``."""
        n = half_width / step
        if abs(n - round(n)) > 1e-9:
            raise ConfigurationError("half-width must be a multiple of the step")
        return cls(-half_width, step, 2 * int(round(n)) + 1)


def make_grid(start: float, step: float, count: int) -> Grid1D:
    """Build a :class:`Grid1D`, raising ConfigurationError on bad input."""
    return Grid1D(start, step, count)


def midpoints(cells: int) -> np.ndarray:
    """Midpoints ``(i + 1/2)/cells`` of a uniform subdivision of (0, 1)."""
    if int(cells) != cells or cells < 1:
        raise ConfigurationError("cell count must be a positive integer")
    return (np.arange(cells) + 0.5) / cells


@dataclass(frozen=True)
class TruncationPolicy:
    """Half-widths of the truncated lattice sums and the tail threshold."""

    r_range: int = 4
    s_range: int = 8
    m_range: int = 8
    tail_eps: float = 1e-10

    def __post_init__(self):
        for name in ("r_range", "s_range", "m_range"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer")
            object.__setattr__(self, name, int(v))
        if not 0 < self.tail_eps < 1:
            raise ConfigurationError("tail_eps must lie in (0, 1)")

    def range_of(self, which: str) -> int:
        try:
            return {"r": self.r_range, "s": self.s_range, "m": self.m_range}[which]
        except KeyError:
            raise ConfigurationError(f"unknown lattice sum {which!r}") from None

    def to_dict(self) -> dict:
        return {"r_range": self.r_range, "s_range": self.s_range,
                "m_range": self.m_range, "tail_eps": self.tail_eps}


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SliceSpectrum:
    """Finite t-spectrum of a 3D field: psi = sum_i slices[i](x,y) e^{-2 pi i lams[i] t}.

    Fields assembled by a discrete inverse transform in t keep this record so
    translations can act on the slices exactly.  The field is then a periodic
    surrogate in t: the t-grid spans one period of the exponentials.
    """

    lams: np.ndarray
    slices: np.ndarray  # shape (n, nx, ny), cell weights already included

    def synthesize(self, t_points: np.ndarray) -> np.ndarray:
        phases = np.exp(-2j * np.pi * np.outer(self.lams, t_points))
        n, nx, ny = self.slices.shape
        out = self.slices.reshape(n, nx * ny).T @ phases
        return out.reshape(nx, ny, len(t_points))


@dataclass(eq=False)
class Field:
    """Complex samples on a product of uniform grids.

    Args:
        grids: one :class:`Grid1D` per axis.
        samples: complex array whose shape matches the grid counts.
        func: optional exact evaluator ``func(*coords)`` broadcasting over
            arrays.  Builders attach it for closed-form signals; geometric
            operators compose it and fall back to sample interpolation when
            it is absent.
        spectrum: optional :class:`SliceSpectrum` (3D only).
        meta: free-form metadata (support hints, provenance).
    """

    grids: tuple
    samples: np.ndarray
    func: Optional[Callable] = None
    spectrum: Optional[SliceSpectrum] = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.grids = tuple(self.grids)
        self.samples = np.asarray(self.samples, dtype=complex)
        expected = tuple(g.count for g in self.grids)
        if self.samples.shape != expected:
            raise ConfigurationError(
                f"sample shape {self.samples.shape} does not match grids {expected}")

    @property
    def rank(self) -> int:
        return len(self.grids)

    @property
    def grid_x(self) -> Grid1D:
        return self.grids[0]

    @property
    def grid_y(self) -> Grid1D:
        return self.grids[1]

    @property
    def grid_t(self) -> Grid1D:
        if self.rank < 3:
            raise AttributeError("2D field has no t axis")
        return self.grids[2]

    @property
    def shape(self) -> tuple:
        return self.samples.shape

    def coords(self, sparse: bool = True):
        """Coordinate arrays broadcastable against the samples."""
        return np.meshgrid(*(g.points for g in self.grids), indexing="ij", sparse=sparse)

    def replace(self, samples=None, func=None, spectrum=None, meta=None, keep_func=False):
        return type(self)(self.grids,
                          self.samples if samples is None else samples,
                          func=(self.func if keep_func else func),
                          spectrum=spectrum,
                          meta=dict(self.meta if meta is None else meta))

    def scaled_by(self, c: complex) -> "Field":
        f = None
        if self.func is not None:
            base = self.func
            f = lambda *xs: c * base(*xs)  # noqa: E731
        spec = None
        if self.spectrum is not None:
            spec = SliceSpectrum(self.spectrum.lams, c * self.spectrum.slices)
        return type(self)(self.grids, c * self.samples, func=f, spectrum=spec, meta=dict(self.meta))

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.samples)):
            raise NumericalError("field contains non-finite samples")


class Field2D(Field):
    """Field over (x, y)."""

    def __init__(self, grids, samples, func=None, spectrum=None, meta=None):
        super().__init__(tuple(grids), samples, func, None, dict(meta or {}))
        if self.rank != 2:
            raise ConfigurationError("Field2D needs exactly two grids")

    @classmethod
    def from_function(cls, gx: Grid1D, gy: Grid1D, func: Callable, meta=None) -> "Field2D":
        X, Y = np.meshgrid(gx.points, gy.points, indexing="ij", sparse=True)
        return cls((gx, gy), np.broadcast_to(func(X, Y), (gx.count, gy.count)).astype(complex),
                   func=func, meta=meta)


class Field3D(Field):
    """Field over (x, y, t)."""

    def __init__(self, grids, samples, func=None, spectrum=None, meta=None):
        super().__init__(tuple(grids), samples, func, spectrum, dict(meta or {}))
        if self.rank != 3:
            raise ConfigurationError("Field3D needs exactly three grids")

    @classmethod
    def from_function(cls, gx, gy, gt, func: Callable, meta=None) -> "Field3D":
        X, Y, T = np.meshgrid(gx.points, gy.points, gt.points, indexing="ij", sparse=True)
        vals = np.broadcast_to(func(X, Y, T), (gx.count, gy.count, gt.count)).astype(complex)
        return cls((gx, gy, gt), vals, func=func, meta=meta)


def _same_grids(f: Field, g: Field) -> bool:
    return f.rank == g.rank and all(a.matches(b) for a, b in zip(f.grids, g.grids))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _weighted_sum(arr: np.ndarray, grids: Sequence[Grid1D]) -> complex:
    out = arr
    for g in reversed(grids):
        out = out @ g.weights()
    return complex(out)


def integrate(field: Field) -> complex:
    """Trapezoidal integral of a field over its grid box."""
    field.check_finite()
    return _weighted_sum(field.samples, field.grids)


def inner_product(f: Field, g: Field) -> complex:
    """L2 pairing, linear in ``f`` and conjugate-linear in ``g``."""
    if not _same_grids(f, g):
        raise ConfigurationError("inner_product requires identical grids")
    f.check_finite()
    g.check_finite()
    return sample_inner(f.samples, g.samples, f.grids)


def sample_inner(a: np.ndarray, b: np.ndarray, grids: Sequence[Grid1D]) -> complex:
    """Trapezoid pairing of two raw sample arrays on shared grids."""
    wx = grids[0].weights()
    rest = grids[1:]
    total = 0.0 + 0.0j
    step = max(1, _BLOCK_ENTRIES // max(1, int(np.prod([g.count for g in rest]))))
    parts = []
    for i0 in range(0, a.shape[0], step):
        blk = a[i0:i0 + step] * np.conj(b[i0:i0 + step])
        for g in reversed(rest):
            blk = blk @ g.weights()
        parts.append(blk @ wx[i0:i0 + step])
    total = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    return total


def squared_norm(f: Field) -> float:
    return inner_product(f, f).real


# ---------------------------------------------------------------------------
# Oscillatory integrals
# ---------------------------------------------------------------------------


def _check_method(method: str) -> None:
    if method not in FT_METHODS:
        raise ConfigurationError(f"unknown Fourier evaluation method {method!r}")


def ft_sum(values: np.ndarray, x_grid: Grid1D, lam: float, v_grid: Grid1D,
           method: str = "direct") -> np.ndarray:
    """Sum ``sum_n values[n] e^{pi i lam x_n v_p}`` for all grid points ``v_p``.

    ``values`` already carries the quadrature weights; its first axis runs
    over ``x_grid`` and any further axes are batch columns.  Returns an array
    of shape ``(v_grid.count,) + values.shape[1:]``.
    """
    _check_method(method)
    vals = np.asarray(values, dtype=complex)
    batch = vals.shape[1:]
    vals2 = vals.reshape(vals.shape[0], -1)
    x = x_grid.points
    v = v_grid.points
    if lam == 0:
        out = np.broadcast_to(vals2.sum(axis=0), (len(v), vals2.shape[1])).copy()
        return out.reshape((len(v),) + batch)
    if method == "auto":
        method = "czt" if len(v) * len(x) >= _AUTO_CZT_MIN and len(v) >= 64 else "direct"
    if method == "direct":
        out = np.empty((len(v), vals2.shape[1]), dtype=complex)
        rows = max(1, _BLOCK_ENTRIES // len(x))
        for p0 in range(0, len(v), rows):
            ph = np.exp(1j * np.pi * lam * np.outer(v[p0:p0 + rows], x))
            out[p0:p0 + rows] = ph @ vals2
        return out.reshape((len(v),) + batch)
    # chirp-z path, evaluated in blocks to bound chirp phase growth
    n = len(x)
    hx, x0 = x_grid.step, x_grid.start
    out = np.empty((len(v), vals2.shape[1]), dtype=complex)
    nidx = np.arange(n)
    for p0 in range(0, len(v), _CZT_BLOCK):
        m = min(_CZT_BLOCK, len(v) - p0)
        v0 = v[p0]
        pre = np.exp(1j * np.pi * lam * hx * v0 * nidx)[:, None] * vals2
        w = np.exp(1j * np.pi * lam * hx * v_grid.step)
        blk = _scipy_czt(pre, m=m, w=w, a=1.0, axis=0)
        post = np.exp(1j * np.pi * lam * x0 * v[p0:p0 + m])
        out[p0:p0 + m] = post[:, None] * blk
    return out.reshape((len(v),) + batch)


def oscillatory_ft(f, x_grid: Grid1D, lam: float, v_grid: Grid1D,
                   method: str = "direct") -> np.ndarray:
    """Trapezoidal approximation of ``g(v) = int f(x) e^{pi i lam x v} dx``.

    Args:
        f: samples on ``x_grid`` (first axis); extra axes are treated as
            independent columns.
        x_grid: sample grid of ``f``.
        lam: frequency parameter; ``lam == 0`` gives the plain integral.
        v_grid: output grid.
        method: ``"direct"`` (dense summation) or ``"czt"`` (chirp-z).

    Returns:
        Complex array with ``v_grid.count`` rows.
    """
    arr = np.asarray(f, dtype=complex)
    if arr.shape[0] != x_grid.count:
        raise ConfigurationError("samples do not match the x grid")
    if not np.all(np.isfinite(arr)):
        raise NumericalError("non-finite samples in oscillatory_ft")
    w = x_grid.weights().reshape((-1,) + (1,) * (arr.ndim - 1))
    return ft_sum(arr * w, x_grid, lam, v_grid, method)


# ---------------------------------------------------------------------------
# Lattice sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeSum:
    """Result of a truncated lattice sum and its convergence flag."""

    value: complex
    converged: bool
    tail: float
    half_width: int

    def __complex__(self):
        return complex(self.value)


def ordered_sum(terms: Iterable[complex]) -> complex:
    """Compensated sum of complex terms in the given order."""
    arr = np.asarray(list(terms) if not isinstance(terms, np.ndarray) else terms, dtype=complex)
    return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))


def lattice_total(terms: np.ndarray, tail_eps: float, scale: float = 0.0) -> LatticeSum:
    """Combine terms indexed ``-R..R`` (ascending) with a last-ring tail test.

    The outermost ring is compared with the largest of ``|total|``, the sum
    of term moduli and the caller-supplied ``scale``, so sums that cancel
    to (nearly) zero are not flagged merely for being small.
    """
    terms = np.asarray(terms, dtype=complex)
    if terms.ndim != 1 or len(terms) % 2 != 1:
        raise ConfigurationError("lattice terms must be indexed symmetrically")
    R = len(terms) // 2
    total = ordered_sum(terms)
    ring = abs(terms[0]) + abs(terms[-1]) if R > 0 else abs(terms[0])
    ref = max(abs(total), float(np.sum(np.abs(terms))), float(scale))
    converged = ring <= tail_eps * ref or ring == 0.0
    return LatticeSum(total, bool(converged), float(ring), R)


def periodize_sum(term: Callable[[int], complex], policy: TruncationPolicy,
                  which: str = "r") -> LatticeSum:
    """Sum ``term(i)`` over ``-R <= i <= R`` for the range selected by ``which``.

    The reduction runs in ascending index order with exact-rounding
    summation, so repeated runs are bit-identical.  The result is flagged
    unconverged when the outermost ring exceeds ``tail_eps`` times the total.
    """
    R = policy.range_of(which)
    terms = np.array([complex(term(i)) for i in range(-R, R + 1)])
    return lattice_total(terms, policy.tail_eps)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def trig_interp_matrix(grid: Grid1D, positions) -> np.ndarray:
    """Trigonometric (Dirichlet-kernel) interpolation weights.

    Row ``p`` holds the weights that map samples on ``grid`` to the value of
    the periodic band-limited interpolant at ``positions[p]``.  Positions
    outside the closed grid box get an all-zero row, which matches the
    convention that fields vanish off their box.
    """
    pos = np.asarray(positions, dtype=float)
    N = grid.count
    L = N * grid.step
    d = pos[:, None] - grid.points[None, :]
    arg = np.pi * d / L
    s = np.sin(arg)
    num = np.sin(N * arg)
    small = np.abs(s) < 1e-14
    safe = np.where(small, 1.0, s)
    if N % 2:
        D = np.where(small, np.cos(N * arg) / np.cos(arg), num / (N * safe))
    else:
        D = np.where(small, np.cos(N * arg), num * np.cos(arg) / (N * safe))
    outside = (pos < grid.start - 1e-12 * grid.step) | (pos > grid.stop + 1e-12 * grid.step)
    D[outside] = 0.0
    return D


def aligned_indices(grid: Grid1D, positions) -> Optional[np.ndarray]:
    """Integer indices when every position sits on a grid node (else None)."""
    fi = grid.fractional_index(positions)
    ri = np.round(fi)
    if np.all(np.abs(fi - ri) < _ALIGN_TOL):
        return ri.astype(np.int64)
    return None


def resample_axis(samples: np.ndarray, axis: int, grid: Grid1D, positions) -> np.ndarray:
    """Values along ``axis`` at ``positions``: exact gather or trig interpolation.

    Positions outside the grid box yield zeros.
    """
    positions = np.asarray(positions, dtype=float)
    idx = aligned_indices(grid, positions)
    arr = np.moveaxis(samples, axis, 0)
    if idx is not None:
        valid = (idx >= 0) & (idx < grid.count)
        out = np.zeros((len(positions),) + arr.shape[1:], dtype=complex)
        out[valid] = arr[idx[valid]]
    else:
        M = trig_interp_matrix(grid, positions)
        out = np.tensordot(M, arr, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def fft_interp_columns(samples: np.ndarray, grid: Grid1D, positions: np.ndarray) -> np.ndarray:
    """Trig interpolation along the last axis with per-column positions.

    Args:
        samples: array ``(..., n)`` on ``grid`` along the last axis.
        grid: sample grid of the last axis.
        positions: array ``(..., m)`` of evaluation points for each column.

    Returns:
        Array ``(..., m)``; positions outside the grid box give zeros.
    """
    n = grid.count
    L = n * grid.step
    coef = np.fft.fft(samples, axis=-1) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        # split the Nyquist term symmetrically
        coef = np.concatenate([coef, coef[..., n // 2:n // 2 + 1]], axis=-1)
        coef[..., n // 2] *= 0.5
        coef[..., -1] *= 0.5
        k = np.concatenate([k, [n // 2]])
    rel = (positions - grid.start) / L
    out = np.zeros(positions.shape, dtype=complex)
    for kk, c in zip(k, np.moveaxis(coef, -1, 0)):
        out += c[..., None] * np.exp(2j * np.pi * kk * rel)
    outside = (positions < grid.start - 1e-12) | (positions > grid.stop + 1e-12)
    out[outside] = 0.0
    return out
