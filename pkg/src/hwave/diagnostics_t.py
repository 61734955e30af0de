"""Twisted-side diagnostics S, P, Q, R and the twisted orthonormality checks.

All unit-interval integrals in xi use midpoint cells.  Along a ring of
``c = xi + m`` the functions S are evaluated on an exactly aligned family of
kernel lines: substituting ``u = B - A`` for y turns ``S_{j,l}(xi, m, y)``
into ``K_{phi'}(A, B)`` with ``B - A = y_n`` running over the y grid of
``phi'`` and ``A + B = q y_n + 2c + l(1 + q)``, where ``q = 4^{-j}`` and
``phi' = e((q - 1) l / 2, 0) phi``.  Because
``K_{e(a, 0) phi}(A, B) = K_phi(A + a, B + a)``, the rows are those of phi
itself on the lines ``v = q u + 2c + 2ql``; phi is never modulated on its
grid, which would alias for large ``|q l|``.  The y-integral becomes a trapezoid sum
over ``y_n`` with weight ``|1 - q^2| / 4``, so no kernel is interpolated and
no mass is lost to the stretched y-window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .curves import ConditionReport, DiagnosticCurve, report_from_curves
from .errors import ConfigurationError, SingularScaleError
from .numerics import (Field2D, Grid1D, TruncationPolicy, midpoints, ordered_sum, resample_axis,
                       squared_norm)
from .parallel import thread_map
from .rows import RowEngine
from .twisted import modulate
from .weyl import kernel_point, kernel_rows_affine, uv_support

DEFAULT_TOL = 1e-2


@dataclass(frozen=True)
class XiGrid:
    """Midpoint cells ``(i + 1/2) / cells`` of the unit xi-interval."""

    cells: int = 64

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 1:
            raise ConfigurationError("xi grid needs a positive integer cell count")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def points(self) -> np.ndarray:
        return midpoints(self.cells)

    def to_dict(self) -> dict:
        return {"cells": self.cells}


def scale_parameter(j: int) -> float:
    """``q = 2^{-2j}``; raises :class:`SingularScaleError` at ``j = 0``."""
    if int(j) != j:
        raise ConfigurationError("scale index must be an integer")
    if j == 0:
        raise SingularScaleError("S, Q and R are undefined at j = 0 (1 - 2^{-2j} vanishes)")
    return 4.0 ** (-int(j))


def modulated_phi(phi: Field2D, j: int, l: int) -> Field2D:
    """``e(((2^{-2j} - 1) / 2) l, 0) phi``."""
    q = scale_parameter(j)
    return modulate(phi, ((q - 1) * l / 2, 0.0))


def compute_S(phi: Field2D, j: int, l: int, xi: float, m: int, y: float) -> complex:
    """Single value ``S_{j,l}(xi, m, y)`` by direct quadrature of the kernel.

    Args:
        phi: generating 2D field.
        j, l: scale and shift indices (``j != 0``).
        xi, m: the point ``xi + m`` of the ring.
        y: integration variable of R and Q.

    Returns:
        ``K_{phi'}(2(xi + m - y)/(1 + q) + l, 2y/(1 - q))``.
    """
    q = scale_parameter(j)
    a = 2 * (xi + m - y) / (1 + q) + l
    b = 2 * y / (1 - q)
    return kernel_point(modulated_phi(phi, j, l), 1.0, a, b)


# ---------------------------------------------------------------------------
# S on aligned lines
# ---------------------------------------------------------------------------


Y_OFFSET = 0.25


def _offset_field(phi: Field2D, offset: float) -> Field2D:
    """phi sampled on its y grid shifted by ``offset`` steps.

    The y-integral of Q and R runs over these nodes.  A quarter-step offset
    keeps every node off the kernel jumps of constructions whose kernel is
    an indicator on a dyadic box (a node on a jump samples the midpoint
    value 1/2, whose square under-counts the jump by half).  Exact values
    come from the closed-form evaluator, otherwise from trigonometric
    interpolation of the columns.
    """
    if offset == 0:
        return phi
    gx, gy = phi.grids
    gs = Grid1D(gy.start + offset * gy.step, gy.step, gy.count)
    if phi.func is not None:
        samples = np.asarray(phi.func(gx.points[:, None], gs.points[None, :]), dtype=complex)
        samples = np.broadcast_to(samples, (gx.count, gs.count)).copy()
    else:
        samples = resample_axis(phi.samples, 1, gy, gs.points)
    return Field2D((gx, gs), samples, func=phi.func, meta=dict(phi.meta))


class SRows:
    """Cached aligned S-rows for one generating field.

    Rows for ``(j, l)`` cover rings ``m_lo..m_hi`` of ``c = xi + m`` (xi on
    the midpoint cells); column ``n`` corresponds to ``B - A = y_n``.
    """

    def __init__(self, phi: Field2D, xigrid: XiGrid, pol: TruncationPolicy,
                 method: str = "auto", y_offset: float = Y_OFFSET):
        self.phi = phi
        self.xigrid = xigrid
        self.pol = pol
        self.method = method
        self.nodes = _offset_field(phi, y_offset)
        gy = self.nodes.grid_y
        self.h = gy.step
        self.wy = gy.weights()
        self._support = uv_support(phi, 1.0) if np.any(phi.samples) else None
        self._rows: dict = {}

    def ring_range(self, j: int, l: int) -> tuple[int, int, bool]:
        """Rings where ``S_{j,l}`` is not negligible, clipped to the m range."""
        q = scale_parameter(j)
        if self._support is None:
            return 0, -1, False
        (u_lo, u_hi), (v_lo, v_hi) = self._support
        c_lo = (v_lo - q * u_hi) / 2 - q * l
        c_hi = (v_hi - q * u_lo) / 2 - q * l
        m_lo, m_hi = math.floor(c_lo), max(math.ceil(c_hi) - 1, math.floor(c_lo))
        bound = self.pol.m_range
        truncated = m_lo < -bound or m_hi > bound
        return max(m_lo, -bound), min(m_hi, bound), truncated

    def rows(self, j: int, l: int, m_lo: int, m_hi: int) -> np.ndarray:
        """``S_{j,l}`` on rings ``m_lo..m_hi`` (rows) and the y grid (columns)."""
        key = (j, l)
        cells = self.xigrid.cells
        hit = self._rows.get(key)
        if hit is None or hit[0] > m_lo or hit[1] < m_hi:
            lo, hi = (m_lo, m_hi) if hit is None else (min(m_lo, hit[0]), max(m_hi, hit[1]))
            q = scale_parameter(j)
            d_grid = Grid1D(2 * (lo + 0.5 / cells) + 2 * q * l, 2.0 / cells,
                            (hi - lo + 1) * cells)
            hit = (lo, hi, kernel_rows_affine(self.nodes, 1.0, q, d_grid, self.method))
            self._rows[key] = hit
        i0 = (m_lo - hit[0]) * cells
        return hit[2][i0:i0 + (m_hi - m_lo + 1) * cells]


def _ring_curve(name: str, indices: dict, xigrid: XiGrid, rings: np.ndarray, per_point: np.ndarray,
                truncated: bool, pol: TruncationPolicy, bound: int) -> DiagnosticCurve:
    """Sum ring contributions ``per_point[ring, cell]`` into a curve over xi.

    When the support was clipped to the m range, the outermost rings must
    fall below ``tail_eps`` times the summed moduli for the curve to count
    as converged; a support clipped away entirely is never converged.
    """
    cells = xigrid.cells
    vals = np.zeros(cells, dtype=complex)
    converged = not (truncated and not len(rings))
    if len(rings):
        per_point = np.asarray(per_point, dtype=complex)
        for i in range(cells):
            col = per_point[:, i]
            vals[i] = ordered_sum(col)
        if truncated:
            edge = np.abs(per_point[0]) + np.abs(per_point[-1])
            ref = np.sum(np.abs(per_point), axis=0)
            converged = bool(np.all((edge <= pol.tail_eps * ref) | (edge == 0)))
    ranges = {"m_lo": int(rings[0]) if len(rings) else 0,
              "m_hi": int(rings[-1]) if len(rings) else -1,
              "m_bound": bound, "truncated": bool(truncated)}
    return DiagnosticCurve("xi", xigrid.points, vals, indices, converged, ranges, name)


def _q_curve(srows: SRows, j: int, l1: int, l2: int, name: str) -> DiagnosticCurve:
    q = scale_parameter(j)
    pol, xigrid = srows.pol, srows.xigrid
    m_lo, m_hi, trunc = srows.ring_range(j, l1)
    indices = {"j": j, "l1": l1, "l2": l2} if name == "Q" else {"j": j, "l": l1}
    if m_hi < m_lo:
        return _ring_curve(name, indices, xigrid, np.arange(0), np.zeros((0, xigrid.cells)),
                           trunc, pol, pol.m_range)
    r1 = srows.rows(j, l1, m_lo, m_hi)
    w_scale = abs(1 - q * q) / 4
    if l1 == l2:
        inner = (r1 * np.conj(r1)) @ (srows.wy * w_scale)
    else:
        shift = l1 - l2
        off = round(shift / srows.h)
        if abs(shift / srows.h - off) > 1e-9:
            raise ConfigurationError("l1 - l2 is not a multiple of the y step")
        ny = len(srows.wy)
        n_lo, n_hi = max(0, -off), min(ny, ny - off)
        r2 = srows.rows(j, l2, m_lo, m_hi)
        if n_hi <= n_lo:
            inner = np.zeros(r1.shape[0], dtype=complex)
        else:
            inner = (r1[:, n_lo:n_hi] * np.conj(r2[:, n_lo + off:n_hi + off])) @ (
                srows.wy[n_lo:n_hi] * w_scale)
    rings = np.arange(m_lo, m_hi + 1)
    per = inner.reshape(len(rings), xigrid.cells)
    return _ring_curve(name, indices, xigrid, rings, per, trunc, pol, pol.m_range)


def compute_Q(phi: Field2D, j: int, l1: int, l2: int, xigrid: XiGrid | None = None,
              pol: TruncationPolicy | None = None, method: str = "auto",
              srows: SRows | None = None) -> DiagnosticCurve:
    """``Q_{j,l1,l2}(xi) = sum_m int S_{j,l1}(xi,m,y) conj(S_{j,l2}(xi,m,y)) dy``.

    The partner factor shares the row index; its column is shifted by
    ``(l1 - l2) / h`` because ``B - A`` differs by exactly ``l1 - l2``.
    With ``l1 == l2`` this runs the R computation, so both agree bit for bit.
    """
    scale_parameter(j)
    srows = srows or SRows(phi, xigrid or XiGrid(), pol or TruncationPolicy(), method)
    if l1 == l2:
        return compute_R(phi, j, l1, srows=srows)
    return _q_curve(srows, j, l1, l2, "Q")


def compute_R(phi: Field2D, j: int, l: int, xigrid: XiGrid | None = None,
              pol: TruncationPolicy | None = None, method: str = "auto",
              srows: SRows | None = None) -> DiagnosticCurve:
    """``R_{j,l}(xi) = sum_m int |S_{j,l}(xi, m, y)|^2 dy`` (real, non-negative)."""
    scale_parameter(j)
    srows = srows or SRows(phi, xigrid or XiGrid(), pol or TruncationPolicy(), method)
    c = _q_curve(srows, j, l, l, "R")
    c.values = c.values.real.astype(complex)
    return c


# ---------------------------------------------------------------------------
# P and the translate functions via kernel rows
# ---------------------------------------------------------------------------


def make_engine(phi: Field2D, xigrid: XiGrid, pol: TruncationPolicy,
                method: str = "auto") -> RowEngine:
    """Row engine whose every parameter uses phi itself."""
    return RowEngine(lambda lam: phi, phi.grid_y, xigrid.cells, pol.m_range, method)


def _engine_curve(engine: RowEngine, name: str, indices: dict, xigrid: XiGrid,
                  pol: TruncationPolicy, *pair_args) -> DiagnosticCurve:
    rings, vals, trunc = engine.pair_rings(*pair_args, per_point=True)
    per = vals.reshape(len(rings), xigrid.cells) if len(rings) else np.zeros((0, xigrid.cells))
    return _ring_curve(name, indices, xigrid, rings, per, trunc, pol, pol.m_range)


def compute_P(phi: Field2D, j1: int, j2: int, l1: int, l2: int, xigrid: XiGrid | None = None,
              pol: TruncationPolicy | None = None, method: str = "auto",
              engine: RowEngine | None = None) -> DiagnosticCurve:
    """``P = sum_m int K^{4^{-j1}}(2^{j1+j2} c + l1, 2^{j1} eta)
    conj(K^{4^{-j2}}(4^{j2} c + l2, 2^{j2} eta)) d(eta)`` with ``c = xi + m``.

    The finer of the two eta-scalings owns the quadrature grid; the partner
    column is the exactly aligned grid point.
    """
    xigrid = xigrid or XiGrid()
    pol = pol or TruncationPolicy()
    engine = engine or make_engine(phi, xigrid, pol, method)
    e = abs(j2 - j1)
    args = (4.0 ** (-j1), 2.0 ** (j1 + j2), l1, 4.0 ** (-j2), 4.0 ** j2, l2, e,
            j1 <= j2, 2.0 ** (-min(j1, j2)))
    return _engine_curve(engine, "P", {"j1": j1, "j2": j2, "l1": l1, "l2": l2}, xigrid, pol,
                         *args)


def compute_T(phi: Field2D, l: int, xigrid: XiGrid | None = None,
              pol: TruncationPolicy | None = None, method: str = "auto",
              engine: RowEngine | None = None) -> DiagnosticCurve:
    """``sum_m int K_phi(xi + m, eta) conj(K_phi(xi + m + l, eta)) d(eta)`` at lam = 1."""
    xigrid = xigrid or XiGrid()
    pol = pol or TruncationPolicy()
    engine = engine or make_engine(phi, xigrid, pol, method)
    args = (1.0, 1.0, 0, 1.0, 1.0, l, 0, True, 1.0)
    return _engine_curve(engine, "T", {"l": l}, xigrid, pol, *args)


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------


def _window_values(window: Optional[dict], key: str, default) -> list[int]:
    vals = (window or {}).get(key, default)
    out = []
    for v in vals:
        if int(v) != v:
            raise ConfigurationError(f"window entry {key} must hold integers")
        out.append(int(v))
    return out


def _per_curve(curves: Iterable[DiagnosticCurve], target) -> dict:
    out = {}
    for c in curves:
        t = target(c) if callable(target) else target
        out[c.label()] = float(np.max(np.abs(c.values - t)))
    return out


def check_twisted_translates(phi: Field2D, window: Optional[dict] = None,
                             xigrid: XiGrid | None = None, tol: float = DEFAULT_TOL,
                             pol: TruncationPolicy | None = None,
                             method: str = "auto") -> list[ConditionReport]:
    """Conditions for the twisted translates at lam = 1: (i) T_0 = 1, (ii) T_l = 0, l != 0.

    Args:
        window: ``{"l": [...]}``; defaults to ``-2..2``.
    """
    xigrid = xigrid or XiGrid()
    pol = pol or TruncationPolicy()
    ls = [l for l in _window_values(window, "l", range(-2, 3)) if l != 0]
    engine = make_engine(phi, xigrid, pol, method)
    curves = thread_map(lambda l: compute_T(phi, l, xigrid, pol, method, engine), [0] + ls)
    c0, rest = curves[0], curves[1:]
    info = {"xi_cells": xigrid.cells, "m_bound": pol.m_range}
    rep1 = report_from_curves("twisted_translates.i", [c0], 1.0, tol, dict(info, **c0.ranges))
    rep2 = report_from_curves("twisted_translates.ii", rest, 0.0, tol,
                              dict(info, per_index=_per_curve(rest, 0.0)))
    return [rep1, rep2]


def default_p_window(window: Optional[dict] = None) -> list[tuple]:
    """Index tuples for condition (iii): j1 in {-1, 0, 1}, j2 - j1 in {1, 2}, l's in {-1, 0, 1}."""
    j1s = _window_values(window, "j1", (-1, 0, 1))
    dj = _window_values(window, "dj", (1, 2))
    ls = _window_values(window, "l", (-1, 0, 1))
    out = []
    for j1 in j1s:
        for d in dj:
            if d <= 0:
                raise ConfigurationError("condition (iii) needs j2 > j1")
            for l1 in ls:
                for l2 in ls:
                    out.append((j1, j1 + d, l1, l2))
    return out


def r_target(j: int) -> float:
    """``|1 - 2^{-4j}| / 4``."""
    return abs(1 - 16.0 ** (-j)) / 4


def check_twisted_wavelet(phi: Field2D, window: Optional[dict] = None,
                          xigrid: XiGrid | None = None, pol: TruncationPolicy | None = None,
                          tol: float = DEFAULT_TOL, method: str = "auto") -> list[ConditionReport]:
    """Conditions (i)-(v) of the twisted wavelet system.

    (iii) P = 0 for j2 > j1; (iv) Q = 0 for j != 0, l1 != l2;
    (v) R = |1 - 2^{-4j}| / 4 for j != 0.  The report of (v) also records
    the xi-mean of each R curve next to ``|1 - 2^{-4j}| / 4 * ||phi||^2``.

    Args:
        window: keys ``l`` (translates), ``j1``, ``dj``, ``l`` (P) and
            ``j`` (Q, R; default {-2, -1, 1, 2}).
    """
    xigrid = xigrid or XiGrid()
    pol = pol or TruncationPolicy()
    reps = check_twisted_translates(phi, window, xigrid, tol, pol, method)
    info = {"xi_cells": xigrid.cells, "m_bound": pol.m_range}

    engine = make_engine(phi, xigrid, pol, method)
    ptuples = default_p_window(window)
    pcurves = thread_map(lambda t: compute_P(phi, *t, xigrid, pol, method, engine), ptuples)
    reps.append(report_from_curves("twisted_wavelet.iii", pcurves, 0.0, tol,
                                   dict(info, per_index=_per_curve(pcurves, 0.0))))

    js = _window_values(window, "j", (-2, -1, 1, 2))
    if 0 in js:
        raise ConfigurationError("conditions (iv) and (v) exclude j = 0")
    ls = _window_values(window, "l", (-1, 0, 1))
    srows = SRows(phi, xigrid, pol, method)
    qtuples = [(j, a, b) for j in js for a in ls for b in ls if a != b]
    qcurves = thread_map(lambda t: compute_Q(phi, *t, srows=srows), qtuples)
    reps.append(report_from_curves("twisted_wavelet.iv", qcurves, 0.0, tol,
                                   dict(info, per_index=_per_curve(qcurves, 0.0))))

    rtuples = [(j, l) for j in js for l in ls]
    rcurves = thread_map(lambda t: compute_R(phi, *t, srows=srows), rtuples)
    norm2 = squared_norm(phi)
    means = {c.label(): {"mean": c.mean().real,
                         "mean_value_target": r_target(c.indices["j"]) * norm2}
             for c in rcurves}
    target = lambda c: r_target(c.indices["j"])  # noqa: E731
    reps.append(report_from_curves("twisted_wavelet.v", rcurves, target, tol,
                                   dict(info, per_index=_per_curve(rcurves, target),
                                        xi_means=means, norm_squared=norm2)))
    return reps


def mean_value_defect(phi: Field2D, js: Sequence[int] = (-2, -1, 1, 2),
                      ls: Sequence[int] = (-1, 0, 1), xigrid: XiGrid | None = None,
                      pol: TruncationPolicy | None = None, method: str = "auto") -> float:
    """Largest relative gap between the xi-mean of R and ``|1 - 2^{-4j}|/4 ||phi||^2``."""
    xigrid = xigrid or XiGrid()
    pol = pol or TruncationPolicy()
    srows = SRows(phi, xigrid, pol, method)
    norm2 = squared_norm(phi)
    worst = 0.0
    for j in js:
        for l in ls:
            c = compute_R(phi, j, l, srows=srows)
            t = r_target(j) * norm2
            worst = max(worst, abs(c.mean().real - t) / max(t, 1e-300))
    return worst
