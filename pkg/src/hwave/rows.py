"""Cached kernel rows over whole unit rings of xi.

A *factor* is the family of rows ``K^lam_f(A, A + y_n)`` with
``A = scale * xi' + l`` for xi' running over the midpoints of consecutive
unit cells ("rings") ``s_lo..s_hi``, and ``y_n`` over the y grid of f.  The
diagnostics on both sides are products of two factors summed over rings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .numerics import Field2D, Grid1D
from .weyl import kernel_rows, row_support


def int_or_raise(x: float, what: str) -> int:
    n = round(x)
    if abs(x - n) > 1e-9:
        raise ConfigurationError(f"{what} is not grid-aligned ({x!r})")
    return int(n)


@dataclass
class Factor:
    rows: np.ndarray
    s_lo: int
    s_hi: int


class RowEngine:
    """Rows of ``K^lam`` of the fields produced by ``provider(lam)``.

    Args:
        provider: maps a kernel parameter to the 2D field whose kernel is needed.
        y_grid: common y grid of every provided field.
        cells: midpoint cells per unit of xi.
        bound: largest ring index magnitude (the s or m range).
        method: Fourier summation method.
    """

    def __init__(self, provider: Callable[[float], Field2D], y_grid: Grid1D, cells: int,
                 bound: int, method: str = "auto"):
        self.provider = provider
        self.cells = int(cells)
        self.bound = int(bound)
        self.method = method
        self.h = y_grid.step
        self.ny = y_grid.count
        self.y0_idx = int_or_raise(y_grid.start / y_grid.step, "y grid origin")
        self.wy = y_grid.weights()
        self._fields: dict = {}
        self._rows: dict = {}
        self._support: dict = {}

    def clear(self) -> None:
        """Drop cached fields and rows."""
        self._rows.clear()
        self._fields.clear()
        self._support.clear()

    def field_at(self, lam: float) -> Field2D:
        f = self._fields.get(lam)
        if f is None:
            f = self.provider(lam)
            self._fields[lam] = f
        return f

    def ring_range(self, lam: float, scale: float, l: float) -> tuple[int, int, bool]:
        """Rings of xi' where ``K^lam(scale xi' + l, .)`` is not negligible.

        Returns ``(s_lo, s_hi, truncated)``; ``s_hi < s_lo`` means empty.
        ``truncated`` reports that the support reaches beyond ``bound``.
        """
        sup = self._support.get(lam, False)
        if sup is False:
            f = self.field_at(lam)
            sup = row_support(f, lam) if np.any(f.samples) else None
            self._support[lam] = sup
        if sup is None:
            return 0, -1, False
        a0, a1 = sup
        lo, hi = (a0 - l) / scale, (a1 - l) / scale
        s_lo, s_hi = math.floor(lo), max(math.ceil(hi) - 1, math.floor(lo))
        truncated = s_lo < -self.bound or s_hi > self.bound
        return max(s_lo, -self.bound), min(s_hi, self.bound), truncated

    def factor(self, lam: float, scale: float, l: float, s_lo: int, s_hi: int) -> Factor:
        key = (lam, scale, l)
        fac = self._rows.get(key)
        if fac is not None and fac.s_lo <= s_lo and fac.s_hi >= s_hi:
            return fac
        if fac is not None:
            s_lo, s_hi = min(s_lo, fac.s_lo), max(s_hi, fac.s_hi)
        n = (s_hi - s_lo + 1) * self.cells
        a_grid = Grid1D(scale * (s_lo + 0.5 / self.cells) + l, scale / self.cells, n)
        rows = kernel_rows(self.field_at(lam), lam, a_grid, self.method)
        fac = Factor(rows, s_lo, s_hi)
        self._rows[key] = fac
        return fac

    def span_rows(self, fac: Factor, s_lo: int, s_hi: int) -> np.ndarray:
        """Rows for the consecutive rings ``s_lo..s_hi``."""
        i0 = (s_lo - fac.s_lo) * self.cells
        return fac.rows[i0:i0 + (s_hi - s_lo + 1) * self.cells]

    def column_map(self, e: int, shift: float) -> tuple[slice, slice]:
        """Secondary columns for ``u_S = 2^e y_n + shift``.

        Returns slices selecting the valid primary columns ``n`` and their
        partners ``2^e n + offset`` (possibly empty).
        """
        if e < 0:
            raise ConfigurationError("column map needs a non-negative scale exponent")
        scale = 2 ** e
        off = (scale - 1) * self.y0_idx + int_or_raise(shift / self.h, "lattice shift on the y grid")
        n_lo = max(0, (scale - 1 - off) // scale)
        n_hi = min(self.ny - 1, (self.ny - 1 - off) // scale)
        if n_hi < n_lo:
            return slice(0, 0), slice(0, 0)
        return (slice(n_lo, n_hi + 1),
                slice(scale * n_lo + off, scale * n_hi + off + 1, scale))

    def pair_rings(self, lam1: float, scale1: float, l1: float, lam2: float, scale2: float,
                   l2: float, e: int, first_primary: bool, weights_scale: float,
                   phase: Callable[[np.ndarray], np.ndarray] | None = None,
                   per_point: bool = False):
        """Ring sums of ``int F1 conj(F2) d(eta)`` for two aligned factors.

        The ring range is the support of factor 1.  The primary factor (1 if
        ``first_primary`` else 2) owns the eta grid; the secondary column is
        ``2^e u_P + 2^e l_P - l_S``.

        Returns:
            ``(rings, values, truncated)`` with one complex value per ring
            (already multiplied by the xi cell width), or with the raw values
            at every ring cell (ring-major) when ``per_point`` is set.
        """
        s_lo, s_hi, trunc = self.ring_range(lam1, scale1, l1)
        if s_hi < s_lo:
            return np.arange(0), np.zeros(0, dtype=complex), trunc
        f1 = self.factor(lam1, scale1, l1, s_lo, s_hi)
        f2 = self.factor(lam2, scale2, l2, s_lo, s_hi)
        if first_primary:
            n1, n2 = self.column_map(e, 2 ** e * l1 - l2)
            w = self.wy[n1] * weights_scale
        else:
            n2, n1 = self.column_map(e, 2 ** e * l2 - l1)
            w = self.wy[n2] * weights_scale
        r1 = self.span_rows(f1, s_lo, s_hi)[:, n1]
        r2 = self.span_rows(f2, s_lo, s_hi)[:, n2]
        inner = (r1 * np.conj(r2)) @ w
        rings = np.arange(s_lo, s_hi + 1)
        if phase is not None:
            xs = (rings[:, None] + (np.arange(self.cells) + 0.5)[None, :] / self.cells).ravel()
            inner = inner * phase(xs)
        if per_point:
            return rings, inner, trunc
        vals = inner.reshape(-1, self.cells).sum(axis=1) / self.cells
        return rings, vals, trunc
