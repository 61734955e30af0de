"""Diagnostic functions G and F on the Heisenberg side and their condition checks.

Both diagnostics are lattice sums over ``r`` (the periodization of lam) and
``s`` (integer shifts of xi) of integrals of products of Weyl kernels of the
partial transforms ``psi^Lam``.  Every kernel value needed is read off a
*row* ``K^Lam(a, a + y_n)`` with ``y_n`` on the y grid of psi, so no kernel
interpolation is involved:

* the xi integral over each unit cell uses the midpoint rule (one row per
  midpoint);
* the eta integral is the trapezoid rule of the y grid, after the
  substitution ``eta = (A + y_n) / 2^j`` that puts the first factor's
  kernel argument on the grid; the second factor then lands on the grid
  as well (integer scale ratios), at a shifted column index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .curves import ConditionReport, DiagnosticCurve, report_from_curves
from .errors import ConfigurationError
from .heisenberg import check_scale, t_transform
from .numerics import Field3D, Grid1D, TruncationPolicy, lattice_total, midpoints
from .rows import RowEngine
from .weyl import LambdaGrid

DEFAULT_TOL = 1e-2


def make_engine(psi: Field3D, cells: int, pol: TruncationPolicy, method: str = "auto") -> RowEngine:
    """Row engine over the partial transforms ``psi^Lam``."""
    if psi.rank != 3:
        raise ConfigurationError("Heisenberg diagnostics need a 3D field")
    psi.check_finite()
    return RowEngine(lambda L: t_transform(psi, L), psi.grid_y, cells, pol.s_range, method)


def _r_values(lgrid: LambdaGrid, psi: Field3D) -> tuple[int, bool]:
    R = lgrid.r_range
    cap = psi.meta.get("r_range_max")
    if cap is not None and cap < R:
        return int(cap), True
    return R, False


def _ring_array(S: int, rings: np.ndarray, vals: np.ndarray) -> np.ndarray:
    out = np.zeros(2 * S + 1, dtype=complex)
    out[rings + S] = vals
    return out


# ---------------------------------------------------------------------------
# G
# ---------------------------------------------------------------------------


def compute_G_many(psi: Field3D, pairs: Sequence[tuple[int, int]], lgrid: LambdaGrid | None = None,
                   pol: TruncationPolicy | None = None, method: str = "auto") -> list[DiagnosticCurve]:
    """G_{k,l}(lam) for several index pairs sharing one row cache.

    Evaluates, at every midpoint lam of ``lgrid``,

        sum_r sum_s int_0^1 int K^Lam(xi+s, eta) conj(K^Lam(xi+s+l, eta))
            e^{-pi i Lam k (2 xi + l)} e^{-2 pi i lam k s} deta dxi |Lam|

    with ``Lam = lam + r``.  The s range is the support of the first factor
    (from ``kernel_support`` metadata when present) clipped to
    ``pol.s_range``; clipping a non-negligible ring marks the curve
    unconverged.
    """
    lgrid = lgrid or LambdaGrid()
    pol = pol or TruncationPolicy()
    pairs = [(int(k), int(l)) for k, l in pairs]
    eng = make_engine(psi, lgrid.cells, pol, method)
    R, capped = _r_values(lgrid, psi)
    S = pol.s_range
    xi = midpoints(eng.cells)
    values = {p: [] for p in pairs}
    conv = {p: True for p in pairs}
    for lam in lgrid.points:
        r_terms = {p: [] for p in pairs}
        for r in range(-R, R + 1):
            L = lam + r
            s_lo, s_hi, trunc = eng.ring_range(L, 1.0, 0)
            for p in pairs:
                k, l = p
                s_terms = np.zeros(2 * S + 1, dtype=complex)
                if s_hi >= s_lo:
                    fa = eng.factor(L, 1.0, 0, s_lo, s_hi)
                    fb = eng.factor(L, 1.0, l, s_lo, s_hi)
                    n_a, n_b = eng.column_map(0, -l)
                    ra = eng.span_rows(fa, s_lo, s_hi)[:, n_a]
                    rb = eng.span_rows(fb, s_lo, s_hi)[:, n_b]
                    inner = ((ra * np.conj(rb)) @ eng.wy[n_a]).reshape(-1, eng.cells)
                    ph_xi = np.exp(-1j * np.pi * L * k * (2 * xi + l))
                    rings = np.arange(s_lo, s_hi + 1)
                    s_terms[rings + S] = ((inner @ ph_xi) / eng.cells
                                          * np.exp(-2j * np.pi * lam * k * rings))
                tot = lattice_total(s_terms, pol.tail_eps)
                if trunc or not tot.converged:
                    conv[p] = False
                r_terms[p].append(tot.value * abs(L))
            eng.clear()
        for p in pairs:
            rs = lattice_total(np.array(r_terms[p]), pol.tail_eps)
            if not rs.converged and not capped:
                conv[p] = False
            values[p].append(rs.value)
    ranges = {"r_range": R, "s_range": S, "r_capped_by_support": capped}
    return [DiagnosticCurve("lambda", lgrid.points, np.array(values[p]), {"k": p[0], "l": p[1]},
                            conv[p], dict(ranges), name="G") for p in pairs]


def compute_G(psi: Field3D, k: int, l: int, lgrid: LambdaGrid | None = None,
              pol: TruncationPolicy | None = None, method: str = "auto") -> DiagnosticCurve:
    """The diagnostic ``G^psi_{k,l}`` on the lam grid (see :func:`compute_G_many`)."""
    return compute_G_many(psi, [(k, l)], lgrid, pol, method)[0]


# ---------------------------------------------------------------------------
# F
# ---------------------------------------------------------------------------


def compute_F_many(psi: Field3D, tuples: Sequence[tuple], lgrid: LambdaGrid | None = None,
                   pol: TruncationPolicy | None = None, method: str = "auto") -> list[DiagnosticCurve]:
    """F_{j1,j2,k1,k2,l1,l2}(lam) for several index tuples.

    Evaluates

        sum_r sum_s int_0^1 int K^{Lam1}(2^j1 (xi+s) + l1, 2^j1 eta)
            conj(K^Lam(2^j2 (xi+s) + l2, 2^j2 eta))
            e^{pi i Lam1 k1 (2^{j1+1}(xi+s) + l1)} e^{-pi i Lam k2 (2^{j2+1}(xi+s) + l2)}
            deta dxi |Lam|

    with ``Lam = lam + r`` and ``Lam1 = 4^{j2-j1} Lam``.  The eta grid is
    attached to whichever factor has the smaller scale index.
    """
    lgrid = lgrid or LambdaGrid()
    pol = pol or TruncationPolicy()
    tuples = [tuple(int(v) for v in t) for t in tuples]
    for t in tuples:
        if len(t) != 6:
            raise ConfigurationError("F indices are (j1, j2, k1, k2, l1, l2)")
        check_scale(t[0])
        check_scale(t[1])
    eng = make_engine(psi, lgrid.cells, pol, method)
    R, capped = _r_values(lgrid, psi)
    S = pol.s_range
    values = {t: [] for t in tuples}
    conv = {t: True for t in tuples}
    for lam in lgrid.points:
        r_terms = {t: [] for t in tuples}
        for r in range(-R, R + 1):
            L = lam + r
            for t in tuples:
                j1, j2, k1, k2, l1, l2 = t
                L1 = L * 4.0 ** (j2 - j1)

                def phase(xs, L=L, L1=L1, j1=j1, j2=j2, k1=k1, k2=k2, l1=l1, l2=l2):
                    return (np.exp(1j * np.pi * L1 * k1 * (2.0 ** (j1 + 1) * xs + l1))
                            * np.exp(-1j * np.pi * L * k2 * (2.0 ** (j2 + 1) * xs + l2)))

                first = j1 <= j2
                rings, vals, trunc = eng.pair_rings(
                    L1, 2.0 ** j1, l1, L, 2.0 ** j2, l2, abs(j2 - j1), first,
                    1.0 / 2.0 ** min(j1, j2), phase)
                tot = lattice_total(_ring_array(S, rings, vals), pol.tail_eps)
                if trunc or not tot.converged:
                    conv[t] = False
                r_terms[t].append(tot.value * abs(L))
            eng.clear()
        for t in tuples:
            rs = lattice_total(np.array(r_terms[t]), pol.tail_eps)
            if not rs.converged and not capped:
                conv[t] = False
            values[t].append(rs.value)
    ranges = {"r_range": R, "s_range": S, "r_capped_by_support": capped}
    names = ("j1", "j2", "k1", "k2", "l1", "l2")
    return [DiagnosticCurve("lambda", lgrid.points, np.array(values[t]), dict(zip(names, t)),
                            conv[t], dict(ranges), name="F") for t in tuples]


def compute_F(psi: Field3D, j1: int, j2: int, k1: int, k2: int, l1: int, l2: int,
              lgrid: LambdaGrid | None = None, pol: TruncationPolicy | None = None,
              method: str = "auto") -> DiagnosticCurve:
    """The diagnostic ``F^psi_{j1,j2,k1,k2,l1,l2}`` on the lam grid."""
    return compute_F_many(psi, [(j1, j2, k1, k2, l1, l2)], lgrid, pol, method)[0]


# ---------------------------------------------------------------------------
# Bridges to Gram entries
# ---------------------------------------------------------------------------


def g_bridge(G: DiagnosticCurve, m: int) -> complex:
    """``int_0^1 conj(G_{k,l}(lam)) e^{2 pi i lam m} dlam``, which should equal
    ``<L_(k,l,m) psi, psi>``."""
    return complex(np.mean(np.conj(G.values) * np.exp(2j * np.pi * G.points * m)))


def f_bridge(F: DiagnosticCurve, m1: int, m2: int) -> complex:
    """``2^{3 j2 - j1} int_0^1 F(lam) e^{2 pi i lam (4^{j2-j1} m1 - m2)} dlam``.

    Should equal ``<delta_{2^j1} L_(k1,l1,m1) psi, delta_{2^j2} L_(k2,l2,m2) psi>``
    for ``j2 >= j1``.
    """
    j1, j2 = F.indices["j1"], F.indices["j2"]
    if j2 < j1:
        raise ConfigurationError("the F bridge is stated for j2 >= j1")
    freq = 4 ** (j2 - j1) * m1 - m2
    return 2.0 ** (3 * j2 - j1) * F.fourier_coefficient(freq)


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------


def _window_values(window: Optional[dict], key: str, default=(-1, 0, 1)) -> list[int]:
    if window is None or key not in window:
        return list(default)
    vals = window[key]
    if isinstance(vals, int):
        vals = [vals]
    return [int(v) for v in vals]


def _per_curve(curves: Iterable[DiagnosticCurve], target) -> dict:
    out = {}
    for c in curves:
        key = ",".join(str(v) for v in c.indices.values())
        out[key] = float(np.max(np.abs(c.values - target)))
    return out


def check_translates_h(psi: Field3D, window: Optional[dict] = None, lgrid: LambdaGrid | None = None,
                       pol: TruncationPolicy | None = None, tol: float = DEFAULT_TOL,
                       method: str = "auto") -> list[ConditionReport]:
    """Conditions for the translates ``{L_(k,l,m) psi}``: (i) G_00 = 1, (ii) G_kl = 0.

    "Almost every lam" is operationalized as the maximum over the lam grid.

    Args:
        window: ``{"k": [...], "l": [...]}`` for condition (ii); defaults
            to {-1, 0, 1} for both.
    """
    lgrid = lgrid or LambdaGrid()
    pol = pol or TruncationPolicy()
    ks, ls = _window_values(window, "k"), _window_values(window, "l")
    pairs = [(0, 0)] + [(k, l) for k in ks for l in ls if (k, l) != (0, 0)]
    curves = compute_G_many(psi, pairs, lgrid, pol, method)
    g00, rest = curves[0], curves[1:]
    rep1 = report_from_curves("translates_h.i", [g00], 1.0, tol,
                              {"lambda_cells": lgrid.cells, **g00.ranges})
    rep2 = report_from_curves("translates_h.ii", rest, 0.0, tol,
                              {"lambda_cells": lgrid.cells, "per_index": _per_curve(rest, 0.0),
                               **g00.ranges})
    return [rep1, rep2]


def default_f_window(window: Optional[dict] = None) -> list[tuple]:
    """Index tuples for condition (iii): j2 - j1 in {1, 2}, j1 in {-1, 0, 1}, k's, l's in {-1, 0, 1}."""
    j1s = _window_values(window, "j1")
    dj = _window_values(window, "dj", (1, 2))
    ks = _window_values(window, "k")
    ls = _window_values(window, "l")
    out = []
    for j1 in j1s:
        for d in dj:
            if d <= 0:
                raise ConfigurationError("condition (iii) needs j2 > j1")
            for k1 in ks:
                for k2 in ks:
                    for l1 in ls:
                        for l2 in ls:
                            out.append((j1, j1 + d, k1, k2, l1, l2))
    return out


def check_wavelet_h(psi: Field3D, window: Optional[dict] = None, lgrid: LambdaGrid | None = None,
                    pol: TruncationPolicy | None = None, tol: float = DEFAULT_TOL,
                    method: str = "auto") -> list[ConditionReport]:
    """Conditions (i), (ii) of the translates plus (iii) F = 0 for j2 > j1."""
    lgrid = lgrid or LambdaGrid()
    pol = pol or TruncationPolicy()
    reps = check_translates_h(psi, window, lgrid, pol, tol, method)
    fcurves = compute_F_many(psi, default_f_window(window), lgrid, pol, method)
    rep3 = report_from_curves("wavelet_h.iii", fcurves, 0.0, tol,
                              {"lambda_cells": lgrid.cells, "per_index": _per_curve(fcurves, 0.0)})
    return reps + [rep3]


# ---------------------------------------------------------------------------
# Classical calibration
# ---------------------------------------------------------------------------


def _zero_hold(grid: Grid1D, samples: np.ndarray) -> Callable:
    """Piecewise-constant evaluator (value of the nearest grid point at or below)."""
    pts = grid.points
    vals = np.asarray(samples, dtype=complex)

    def ev(x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(pts, x + 1e-12 * grid.step, side="right") - 1
        out = np.zeros(x.shape, dtype=complex)
        ok = (idx >= 0) & (x <= pts[-1] + 1e-12 * grid.step)
        out[ok] = vals[idx[ok]]
        return out

    return ev


def classical_check(psi_hat, grid: Grid1D | None = None, jmax: int = 3, tol: float = 1e-12,
                    cells: int = 64) -> list[ConditionReport]:
    """Orthonormality conditions for a classical dyadic wavelet on the line.

    Checks ``sum_k |psi_hat(xi+k)|^2 = 1`` and, for ``1 <= j <= jmax``,
    ``sum_k psi_hat(xi+k) conj(psi_hat(2^j (xi+k))) = 0`` at the xi midpoints.

    Args:
        psi_hat: callable, or samples on ``grid`` (read with a zero-order
            hold, which is exact for half-open indicator functions).
        grid: frequency grid for samples; with a callable it only sets the
            k range (default [-16, 16]).
        jmax: largest dilation exponent in the second condition.
        tol: verdict tolerance.
        cells: midpoint cells on [0, 1).
    """
    if callable(psi_hat):
        ev = psi_hat
        kmin, kmax = (-16, 16) if grid is None else (math.floor(grid.start) - 1, math.ceil(grid.stop) + 1)
    else:
        if grid is None:
            raise ConfigurationError("sampled psi_hat needs its frequency grid")
        ev = _zero_hold(grid, psi_hat)
        kmin, kmax = math.floor(grid.start) - 1, math.ceil(grid.stop) + 1
    xi = midpoints(cells)
    ks = np.arange(kmin, kmax + 1)
    pts = xi[:, None] + ks[None, :]
    base = np.asarray(ev(pts), dtype=complex)
    c1 = np.sum(np.abs(base) ** 2, axis=1)
    d1 = np.abs(c1 - 1.0)
    reps = [ConditionReport("classical.periodization", float(d1.max()), float(d1.mean()), tol, True,
                            {"cells": cells, "k_range": [int(kmin), int(kmax)]})]
    devs, per_j = [], {}
    for j in range(1, jmax + 1):
        other = np.asarray(ev(2.0 ** j * pts), dtype=complex)
        d = np.abs(np.sum(base * np.conj(other), axis=1))
        devs.append(d)
        per_j[str(j)] = float(d.max())
    if devs:
        alld = np.concatenate(devs)
        reps.append(ConditionReport("classical.cross_scale", float(alld.max()), float(alld.mean()),
                                    tol, True, {"cells": cells, "per_j": per_j}))
    return reps


def shannon_hat(xi):
    """Fourier transform of the Shannon wavelet: indicator of [-1,-1/2) and [1/2,1)."""
    xi = np.asarray(xi, dtype=float)
    return (((xi >= -1.0) & (xi < -0.5)) | ((xi >= 0.5) & (xi < 1.0))).astype(complex)
