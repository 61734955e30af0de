"""Brute-force Gram matrices of wavelet systems by direct quadrature.

Nothing here uses kernels or diagnostics.  Inner products are trapezoid sums
of products of pointwise element values.

On the Heisenberg group an entry is computed as

    <W_a psi, W_b psi> = <W_b^{-1} W_a psi, psi>,    W = delta_{2^j} L_(k,l,m),

which is legitimate because every ``W`` is unitary.  The composite
``W_b^{-1} W_a`` is an affine pullback, so each entry needs only one
evaluation of psi on the box where psi itself lives.  Fields with a
closed-form evaluator get exact element values; others fall back to the
resampling paths of :mod:`hwave.heisenberg`.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curves import ConditionReport
from .errors import ConfigurationError
from .heisenberg import _pullback, check_scale
from .io import complex_pair, label_name, write_gram_csv
from .numerics import Field, Field2D, Field3D, Grid1D, sample_inner
from .parallel import thread_map
from .twisted import dilate_2d, twisted_translate

log = logging.getLogger(__name__)

DEFAULT_GRAM_TOL = 1e-3


@dataclass
class GramMatrix:
    """Hermitian matrix of pairwise inner products of system elements.

    Attributes:
        labels: element indices, ``(j, k, l, m)`` or ``(j, k, l)``.
        entries: complex matrix, ``entries[a, b] = <e_a, e_b>``.
        tol: tolerance used by :func:`orthonormality_verdict`.
        limited: label pairs whose half-resolution recomputation moved by
            more than ten times ``tol`` (quadrature-limited entries).
        excluded: labels dropped because the element left the grid.
    """

    labels: list
    entries: np.ndarray
    tol: float = DEFAULT_GRAM_TOL
    limited: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    def __post_init__(self):
        self.labels = [tuple(int(v) for v in lab) for lab in self.labels]
        self.entries = np.asarray(self.entries, dtype=complex)
        n = len(self.labels)
        if self.entries.shape != (n, n):
            raise ValueError("Gram entries do not match the label count")

    def index(self, label) -> int:
        return self.labels.index(tuple(int(v) for v in label))

    def entry(self, a, b) -> complex:
        return complex(self.entries[self.index(a), self.index(b)])

    def deviation_from_identity(self) -> np.ndarray:
        return np.abs(self.entries - np.eye(len(self.labels)))

    def hermitian_defect(self) -> float:
        if not self.labels:
            return 0.0
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def to_dict(self) -> dict:
        dev = self.deviation_from_identity()
        return {
            "labels": [label_name(l) for l in self.labels],
            "entries": [[complex_pair(z) for z in row] for row in self.entries],
            "tol": self.tol,
            "max_deviation_from_identity": float(dev.max()) if dev.size else 0.0,
            "quadrature_limited": [[label_name(a), label_name(b)] for a, b in self.limited],
            "excluded": [label_name(l) for l in self.excluded],
        }

    def write_csv(self, path) -> None:
        write_gram_csv(path, self.labels, self.entries)


def orthonormality_verdict(g: GramMatrix) -> ConditionReport:
    """Max and mean of ``|G - I|`` checked against ``g.tol``."""
    if not g.labels:
        return ConditionReport("orthonormality", math.inf, math.inf, g.tol, True, {"size": 0})
    dev = g.deviation_from_identity()
    n = len(g.labels)
    off = dev[~np.eye(n, dtype=bool)]
    details = {
        "size": n,
        "max_diagonal_deviation": float(np.max(np.diag(dev))),
        "max_offdiagonal_modulus": float(off.max()) if off.size else 0.0,
        "quadrature_limited": len(g.limited),
        "excluded": len(g.excluded),
    }
    return ConditionReport("orthonormality", float(dev.max()), float(dev.mean()), g.tol, True, details)


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------


def _axis(window: Optional[dict], key: str, default=(-1, 0, 1)) -> list[int]:
    if window is None or key not in window:
        return list(default)
    v = window[key]
    return [int(v)] if isinstance(v, (int, np.integer)) else [int(x) for x in v]


def window_labels_3d(window: Optional[dict] = None) -> list[tuple]:
    """Labels ``(j, k, l, m)`` of a product window (default {-1,0,1} on every axis)."""
    if window is not None and "labels" in window:
        return [tuple(int(v) for v in lab) for lab in window["labels"]]
    return list(itertools.product(_axis(window, "j"), _axis(window, "k"), _axis(window, "l"),
                                  _axis(window, "m")))


def window_labels_2d(window: Optional[dict] = None) -> list[tuple]:
    """Labels ``(j, k, l)``; the default window is j = 0 with k, l in {-2..2}."""
    if window is not None and "labels" in window:
        return [tuple(int(v) for v in lab) for lab in window["labels"]]
    return list(itertools.product(_axis(window, "j", (0,)), _axis(window, "k", range(-2, 3)),
                                  _axis(window, "l", range(-2, 3))))


# ---------------------------------------------------------------------------
# Heisenberg group
# ---------------------------------------------------------------------------


def support_slices(f: Field, rel: float = 1e-20) -> tuple:
    """Per-axis index slices outside which f carries at most ``rel`` of its energy."""
    e = np.abs(f.samples) ** 2
    tot = float(e.sum())
    out = []
    for ax in range(f.rank):
        if tot == 0:
            out.append(slice(0, f.shape[ax]))
            continue
        other = tuple(i for i in range(f.rank) if i != ax)
        marg = e.sum(axis=other)
        c = np.cumsum(marg)
        lo = int(np.searchsorted(c, rel * tot))
        hi = int(np.searchsorted(c, (1 - rel) * tot))
        out.append(slice(max(lo - 1, 0), min(hi + 2, f.shape[ax])))
    return tuple(out)


def _restrict(f: Field3D, sl: tuple, stride: int = 1) -> Field3D:
    grids = []
    for g, s in zip(f.grids, sl):
        idx = np.arange(f.shape[len(grids)])[s][::stride]
        grids.append(Grid1D(g.point(int(idx[0])), g.step * stride, len(idx)))
    samples = f.samples[tuple(slice(s.start, s.stop, stride) for s in sl)]
    return Field3D(tuple(grids), samples, func=f.func, meta=dict(f.meta))


def relative_map(a: Sequence[int], b: Sequence[int]) -> tuple:
    """Coefficients of the affine pullback realizing ``W_b^{-1} W_a``.

    Returns ``(ax, bx, ay, by, at, c0, cx, cy, scale)`` in the convention of
    the Heisenberg pullback: ``scale * psi(ax x + bx, ay y + by, at t + c0 + cx x + cy y)``.
    """
    ja, ka, la, ma = (int(v) for v in a)
    jb, kb, lb, mb = (int(v) for v in b)
    check_scale(ja)
    check_scale(jb)
    c = 2.0 ** (ja - jb)
    return (c, c * kb - ka, c, c * lb - la, c * c,
            c * c * mb - ma + 0.5 * c * (lb * ka - kb * la),
            0.5 * c * c * lb - 0.5 * c * la,
            -0.5 * c * c * kb + 0.5 * c * ka,
            c * c)


def _pair_on(base: Field3D, a, b) -> complex:
    if tuple(a) == tuple(b):
        return sample_inner(base.samples, base.samples, base.grids)
    u = _pullback(base, *relative_map(a, b), check=False, coverage_tol=0.0)
    return sample_inner(u.samples, base.samples, base.grids)


def _base_fields(psi: Field3D, two_resolution: bool):
    if psi.func is not None:
        sl = support_slices(psi)
        base = _restrict(psi, sl)
        coarse = _restrict(psi, sl, 2) if two_resolution else None
        return base, coarse
    return psi, None


def gram_entries(psi: Field3D, pairs: Sequence[tuple], two_resolution: bool = False):
    """Inner products ``<W_a psi, W_b psi>`` for the given label pairs.

    Returns:
        ``(values, coarse_values)``; the second list is ``None`` unless
        ``two_resolution`` is set and psi has a closed-form evaluator.
    """
    if psi.rank != 3:
        raise ConfigurationError("gram_entries needs a 3D field")
    psi.check_finite()
    base, coarse = _base_fields(psi, two_resolution)
    vals = thread_map(lambda p: _pair_on(base, p[0], p[1]), pairs)
    cvals = None
    if coarse is not None:
        cvals = thread_map(lambda p: _pair_on(coarse, p[0], p[1]), pairs)
    return vals, cvals


def gram_3d(psi: Field3D, window=None, tol: float = DEFAULT_GRAM_TOL,
            two_resolution: bool = True) -> GramMatrix:
    """Gram matrix of ``{delta_{2^j} L_(k,l,m) psi}`` over a finite window.

    Args:
        psi: the generating field.
        window: ``{"j": [...], "k": [...], "l": [...], "m": [...]}``,
            ``{"labels": [...]}``, or a plain label list.
        tol: tolerance stored with the matrix.
        two_resolution: also evaluate every entry at half resolution and
            record entries that move by more than ``10 * tol``.
    """
    labels = window if isinstance(window, list) else window_labels_3d(window)
    labels = [tuple(int(v) for v in lab) for lab in labels]
    n = len(labels)
    pairs = [(labels[a], labels[b]) for a in range(n) for b in range(a, n)]
    vals, cvals = gram_entries(psi, pairs, two_resolution)
    G = np.zeros((n, n), dtype=complex)
    limited = []
    it = 0
    for a in range(n):
        for b in range(a, n):
            v = vals[it]
            if a == b:
                v = complex(v.real, 0.0)
            G[a, b] = v
            G[b, a] = np.conj(v)
            if cvals is not None and abs(cvals[it] - vals[it]) > 10 * tol:
                limited.append((labels[a], labels[b]))
            it += 1
    return GramMatrix(labels, G, tol, limited)


# ---------------------------------------------------------------------------
# Plane
# ---------------------------------------------------------------------------


def _element_2d_func(phi: Field2D, lab, twisted: bool):
    j, k, l = lab
    sc = 2.0 ** j
    base = phi.func

    def ev(x, y):
        val = sc * base(sc * x - k, sc * y - l)
        if twisted:
            val = val * np.exp(1j * np.pi * (x * l - y * k) / sc)
        return val

    return ev


def _elements_2d_sampled(phi: Field2D, labels, twisted: bool) -> list[np.ndarray]:
    out = []
    for j, k, l in labels:
        e = twisted_translate(phi, k, l, 4.0 ** (-j)) if twisted else twisted_translate(phi, k, l, 0.0)
        out.append(dilate_2d(e, j).samples)
    return out


def _covering_grid(g: Grid1D, shifts_scales) -> Grid1D:
    """Grid with the step of ``g`` refined for the finest scale, covering
    ``(g + shift) / 2^j`` for every ``(shift, j)``."""
    lo = min((g.start + s) / 2.0 ** j for s, j in shifts_scales)
    hi = max((g.stop + s) / 2.0 ** j for s, j in shifts_scales)
    step = g.step / 2.0 ** max(0, max(j for _, j in shifts_scales))
    lo = min(lo, g.start)
    hi = max(hi, g.stop)
    n0 = math.floor((lo - g.start) / step + 1e-9)
    n1 = math.ceil((hi - g.start) / step - 1e-9)
    return Grid1D(g.start + n0 * step, step, n1 - n0 + 1)


def _gram_2d_on(phi: Field2D, labels, twisted: bool, stride: int = 1) -> np.ndarray:
    gx, gy = phi.grids
    if phi.func is not None:
        gx = _covering_grid(gx, [(k, j) for j, k, _ in labels])
        gy = _covering_grid(gy, [(l, j) for j, _, l in labels])
    xs = gx.points[::stride]
    ys = gy.points[::stride]
    wx = Grid1D(xs[0], gx.step * stride, len(xs)).weights()
    wy = Grid1D(ys[0], gy.step * stride, len(ys)).weights()
    n = len(labels)
    if phi.func is None:
        els = _elements_2d_sampled(phi, labels, twisted)
        A = np.stack([e[::stride, ::stride] for e in els]).reshape(n, -1)
        W = (wx[:, None] * wy[None, :]).ravel()
        return (A * W) @ A.conj().T
    evs = [_element_2d_func(phi, lab, twisted) for lab in labels]
    rows = max(1, (1 << 22) // max(1, n * len(ys)))
    blocks = list(range(0, len(xs), rows))

    def block(i0):
        X = xs[i0:i0 + rows, None]
        Y = ys[None, :]
        A = np.stack([np.broadcast_to(ev(X, Y), (len(X), len(ys))) for ev in evs]).reshape(n, -1)
        W = (wx[i0:i0 + rows, None] * wy[None, :]).ravel()
        return (A * W) @ A.conj().T

    parts = thread_map(block, blocks)
    G = np.zeros((n, n), dtype=complex)
    for p in parts:
        G += p
    return G


def gram_2d(phi: Field2D, window=None, twisted: bool = True, tol: float = DEFAULT_GRAM_TOL,
            two_resolution: bool = True) -> GramMatrix:
    """Gram matrix of ``{D_{2^j} (T_(k,l))^{4^-j} phi}`` (or plain translates).

    With ``twisted`` and j = 0 this is the system of twisted translates at
    parameter 1.  With a closed-form evaluator the integration grid is the
    grid of ``phi`` widened to cover every element (and refined for positive
    scales); otherwise it is the grid of ``phi`` itself.  Elements that lose
    more than ``tol`` of their mass to the grid edges are excluded and
    logged.
    """
    if phi.rank != 2:
        raise ConfigurationError("gram_2d needs a 2D field")
    phi.check_finite()
    labels = window if isinstance(window, list) else window_labels_2d(window)
    labels = [tuple(int(v) for v in lab) for lab in labels]
    for lab in labels:
        check_scale(lab[0])
    G = _gram_2d_on(phi, labels, twisted)
    norm2 = sample_inner(phi.samples, phi.samples, phi.grids).real
    keep = []
    excluded = []
    for i, lab in enumerate(labels):
        if norm2 > 0 and abs(G[i, i].real - norm2) > tol * norm2:
            excluded.append(lab)
            log.warning("element %s leaves the grid (mass %.6g vs %.6g); excluded",
                        label_name(lab), G[i, i].real, norm2)
        else:
            keep.append(i)
    G = 0.5 * (G + G.conj().T)
    limited = []
    if two_resolution and phi.func is not None:
        Gc = _gram_2d_on(phi, labels, twisted, 2)
        Gc = 0.5 * (Gc + Gc.conj().T)
        for a in keep:
            for b in keep:
                if b >= a and abs(Gc[a, b] - G[a, b]) > 10 * tol:
                    limited.append((labels[a], labels[b]))
    sub = G[np.ix_(keep, keep)]
    return GramMatrix([labels[i] for i in keep], sub, tol, limited, excluded)
