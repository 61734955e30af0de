"""Test-function builders.

Each builder returns a sampled field with an exact evaluator attached where a
closed form exists.  Builders also record support hints in ``field.meta``;
the diagnostics use ``kernel_support`` (a (xi, eta) box and the kernel parameter at which
it holds, ``None`` for all) to tighten lattice ranges and
``r_range_max`` to cap the lam-periodization of t-periodic surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .numerics import Field, Field2D, Field3D, Grid1D, SliceSpectrum, sample_inner

MAX_HERMITE = 36


@dataclass
class SignalSpec:
    """Declarative description of a test function."""

    builder: Optional[str] = None
    params: dict = dc_field(default_factory=dict)
    normalize: bool = False
    seed: Optional[int] = None
    file: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SignalSpec":
        if not isinstance(d, dict):
            raise ConfigurationError("signal spec must be a JSON object")
        if "file" in d:
            return cls(file=str(d["file"]))
        if "builder" not in d:
            raise ConfigurationError("signal spec needs 'builder' or 'file'")
        params = d.get("params", {}) or {}
        if not isinstance(params, dict):
            raise ConfigurationError("signal params must be an object")
        seed = d.get("seed")
        return cls(str(d["builder"]), dict(params), bool(d.get("normalize", False)),
                   None if seed is None else int(seed))

    def to_dict(self) -> dict:
        if self.file is not None:
            return {"file": self.file}
        return {"builder": self.builder, "params": self.params, "normalize": self.normalize,
                "seed": self.seed}


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Rows ``h_0..h_nmax`` of L2-normalized Hermite functions for weight e^{-pi x^2}.

    ``h_0(x) = 2^{1/4} e^{-pi x^2}``; higher orders follow the stable
    three-term recurrence in ``s = sqrt(2 pi) x``.
    """
    x = np.asarray(x, dtype=float)
    s = math.sqrt(2 * math.pi) * x
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 2 ** 0.25 * np.exp(-math.pi * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * s * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * s * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_pairs(count: int) -> list[tuple[int, int]]:
    """Degree pairs ordered by total degree, first index descending."""
    pairs = []
    n = 0
    while len(pairs) < count:
        for a in range(n, -1, -1):
            pairs.append((a, n - a))
        n += 1
    return pairs[:count]


def _hermite2d_func(a: int, b: int) -> Callable:
    def func(x, y):
        hx = hermite_functions(a, x)[a]
        hy = hermite_functions(b, y)[b]
        return (hx * hy).astype(complex)
    return func


def hermite_basis(count: int, grids=None) -> list[Field2D]:
    """Tensor Hermite functions ``h_a(x) h_b(y)`` in total-degree order.

    Raises:
        ConfigurationError: count above 36, or a degree not resolved by the
            grid (visible mass at the box edge or above the Nyquist band).
    """
    if int(count) != count or count < 0:
        raise ConfigurationError("count must be a non-negative integer")
    if count > MAX_HERMITE:
        raise ConfigurationError(f"at most {MAX_HERMITE} Hermite elements are supported")
    if count == 0:
        return []
    gx, gy = _grids2d(grids, default_half=8.0, default_step=1 / 16)
    pairs = hermite_pairs(count)
    nmax = max(max(p) for p in pairs)
    for g in (gx, gy):
        hs = hermite_functions(nmax, g.points)[nmax]
        edge = max(abs(hs[0]), abs(hs[-1]))
        # Hermite function of degree n oscillates with local frequency
        # up to sqrt(2n+1)/sqrt(2 pi) cycles/unit... require margin to Nyquist
        nyq = 0.5 / g.step
        if edge > 1e-10 or math.sqrt((2 * nmax + 1) / (2 * math.pi)) > 0.6 * nyq:
            raise ConfigurationError(f"degree {nmax} Hermite functions are not resolved on the grid")
    Hx = hermite_functions(nmax, gx.points)
    Hy = hermite_functions(nmax, gy.points)
    out = []
    for a, b in pairs:
        out.append(Field2D((gx, gy), np.outer(Hx[a], Hy[b]).astype(complex),
                           func=_hermite2d_func(a, b), meta={"builder": "hermite2d", "degree": [a, b]}))
    return out


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def _as_grid(g) -> Grid1D:
    if isinstance(g, Grid1D):
        return g
    if isinstance(g, dict):
        return Grid1D.from_dict(g)
    if isinstance(g, (tuple, list)) and len(g) == 3:
        return Grid1D(*g)
    raise ConfigurationError(f"cannot interpret {g!r} as a grid")


def _grids2d(grids, default_half, default_step, default_y=None):
    if grids is None:
        gx = Grid1D.symmetric(default_half, default_step)
        gy = default_y or gx
        return gx, gy
    if isinstance(grids, dict):
        grids = [grids[k] for k in ("x", "y")]
    if len(grids) < 2:
        raise ConfigurationError("2D builders need x and y grids")
    return _as_grid(grids[0]), _as_grid(grids[1])


def _grids3d(grids, default_half=8.0, default_step=1 / 16):
    if grids is None:
        g = Grid1D.symmetric(default_half, default_step)
        return g, g, g
    if isinstance(grids, dict):
        grids = [grids[k] for k in ("x", "y", "t")]
    if len(grids) != 3:
        raise ConfigurationError("3D builders need x, y and t grids")
    return tuple(_as_grid(g) for g in grids)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _gaussian2d(params, grids, rng):
    gx, gy = _grids2d(grids, 8.0, 1 / 16)
    amp = float(params.get("amplitude", math.sqrt(2.0)))
    cx, cy = float(params.get("cx", 0.0)), float(params.get("cy", 0.0))

    def func(x, y):
        return amp * np.exp(-math.pi * ((x - cx) ** 2 + (y - cy) ** 2)) + 0j

    return Field2D.from_function(gx, gy, func, meta={"builder": "gaussian2d"})


def _gaussian3d(params, grids, rng):
    gx, gy, gt = _grids3d(grids)
    nt = int(params.get("t_degree", 0))
    if nt < 0:
        raise ConfigurationError("t_degree must be non-negative")
    # with t_normalized false the t factor is the plain e^{-pi t^2}
    tscale = 1.0 if params.get("t_normalized", True) else 2 ** -0.25

    def func(x, y, t):
        tf = tscale * hermite_functions(nt, t)[nt]
        return math.sqrt(2.0) * np.exp(-math.pi * (x * x + y * y)) * tf + 0j

    return Field3D.from_function(gx, gy, gt, func, meta={"builder": "gaussian3d"})


def _hermite2d(params, grids, rng):
    gx, gy = _grids2d(grids, 8.0, 1 / 16)
    a, b = int(params.get("a", 0)), int(params.get("b", 0))
    if a < 0 or b < 0:
        raise ConfigurationError("Hermite degrees must be non-negative")
    return Field2D.from_function(gx, gy, _hermite2d_func(a, b),
                                 meta={"builder": "hermite2d", "degree": [a, b]})


def box_phi(x, y, lam: float = 1.0):
    """Closed-form inverse of the indicator kernel of [0,1]^2 at parameter lam.

    ``f(x, y) = lam s sinc(lam x s) e^{-pi i lam x}`` with ``s = 1 - |y|``
    for ``|y| <= 1`` and zero elsewhere (``sinc`` is the normalized sinc).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.clip(1.0 - np.abs(y), 0.0, None)
    return lam * s * np.sinc(lam * x * s) * np.exp(-1j * math.pi * lam * x)


def periodic_box_phi(x, y, period: float, lam: float = 1.0):
    """Discrete inverse of the indicator kernel of [0,1]^2 at parameter lam.

    The x-spectrum of ``box_phi(., y, lam)`` is the indicator of
    ``lam [|y|/2, 1 - |y|/2]``.  Sampling it on the lattice ``n / period``
    (half weight where a band edge lies on the lattice) and summing the
    Fourier series gives the x-periodization of phi_box with the given
    period.  Its kernel equals the indicator exactly at every
    ``xi + eta`` in ``(2 / (lam * period)) Z``, whereas a truncated sinc carries a
    Gibbs tail decaying only like ``1 / (period * distance)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    P = float(period)
    a = lam * np.abs(y) / 2
    b = lam - a
    inside = np.abs(y) <= 1.0
    n0 = np.ceil(P * a - 1e-9)
    n1 = np.floor(P * b + 1e-9)
    N = n1 - n0 + 1
    th = np.pi * x / P
    sin_th = np.sin(th)
    small = np.abs(sin_th) < 1e-12
    ratio = np.where(small, N * np.cos(np.pi * N * np.round(th / np.pi)),
                     np.sin(N * th) / np.where(small, 1.0, sin_th))
    total = np.exp(-1j * th * (n0 + n1)) * ratio
    at0 = np.abs(n0 - P * a) < 1e-9
    at1 = np.abs(n1 - P * b) < 1e-9
    total = total - 0.5 * at0 * np.exp(-2j * th * n0) - 0.5 * at1 * np.exp(-2j * th * n1)
    return np.where(inside & (N > 0), total / P, 0.0)


def _box_kernel_phi(params, grids, rng):
    gx, gy = _grids2d(grids, 1024.0, 1 / 4, default_y=Grid1D.symmetric(1.0, 1 / 64))
    periodic = bool(params.get("periodic", True))
    if periodic:
        period = gx.length
        half = period / 2
        if abs(gx.start + half) > 1e-9 * period:
            raise ConfigurationError("periodic box_kernel_phi needs an x grid symmetric about 0")

        def func(x, y):
            v = periodic_box_phi(x, y, period)
            return np.where(np.abs(np.asarray(x, dtype=float)) <= half * (1 + 1e-12), v, 0.0)
    else:
        period = None

        def func(x, y):
            return box_phi(x, y) + 0j

    f = Field2D.from_function(gx, gy, func, meta={
        "builder": "box_kernel_phi",
        "kernel_support": {"box": ((0.0, 1.0), (0.0, 1.0)), "lam": 1.0},
        "period": period,
        "grid_hint": "x window >= 1024 keeps the truncated norm within 1e-3"})
    return f


def lambda_profile_slices(gx: Grid1D, gy: Grid1D, cells: int, lam_min: float):
    """Cell midpoints, weights and slices of the lam-profile construction."""
    lams = (np.arange(cells) + 0.5) / cells
    keep = lams >= lam_min
    lams = lams[keep]
    X, Y = gx.points[:, None], gy.points[None, :]
    slices = np.stack([lam ** -0.5 * box_phi(X, Y, lam) for lam in lams])
    return lams, slices * (1.0 / cells)


def _lambda_profile_psi(params, grids, rng):
    lam_min = float(params.get("lam_min", 1 / 64))
    cells = int(params.get("cells", 64))
    if not lam_min > 0:
        raise ConfigurationError("lam_min must be positive")
    if lam_min >= 1:
        raise ConfigurationError("lam_min must be below 1")
    if cells < 1:
        raise ConfigurationError("cells must be positive")
    if grids is None:
        gx = Grid1D.symmetric(2048.0, 0.5)
        gy = Grid1D.symmetric(1.0, 1 / 8)
        gt = Grid1D.symmetric(cells / 2, 0.5)
    else:
        gx, gy, gt = _grids3d(grids)
    if abs(gt.length * cells - cells * cells) > 1e-9 * cells * cells:
        raise ConfigurationError("the t grid must span exactly one period (length = cells)")
    lams, slices = lambda_profile_slices(gx, gy, cells, lam_min)
    spec = SliceSpectrum(lams, slices)
    return Field3D((gx, gy, gt), spec.synthesize(gt.points), spectrum=spec, meta={
        "builder": "lambda_profile_psi",
        "kernel_support": {"box": ((0.0, 1.0), (0.0, 1.0)), "lam": None},
        "r_range_max": 0, "t_periodic": True, "lam_min": lam_min, "cells": cells})


def _random_bandlimited(params, grids, rng):
    gx, gy = _grids2d(grids, 8.0, 1 / 16)
    band = float(params.get("band", 1.0))
    width = float(params.get("width", 1.5))
    terms = int(params.get("terms", 8))
    if band <= 0 or width <= 0 or terms < 1:
        raise ConfigurationError("band, width and terms must be positive")
    freqs = rng.uniform(-band, band, size=(terms, 2))
    centers = rng.uniform(-1.0, 1.0, size=(terms, 2))
    coef = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)

    def func(x, y):
        out = 0j
        for (a, b), (cx, cy), c in zip(freqs, centers, coef):
            env = np.exp(-math.pi * (((x - cx) / width) ** 2 + ((y - cy) / width) ** 2))
            out = out + c * env * np.exp(2j * math.pi * (a * x + b * y))
        return out

    return Field2D.from_function(gx, gy, func, meta={"builder": "random_bandlimited"})


BUILDERS: dict[str, Callable] = {
    "gaussian2d": _gaussian2d,
    "gaussian3d": _gaussian3d,
    "hermite2d": _hermite2d,
    "box_kernel_phi": _box_kernel_phi,
    "lambda_profile_psi": _lambda_profile_psi,
    "random_bandlimited": _random_bandlimited,
}


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Counter-based generator so equal seeds give identical streams."""
    return np.random.Generator(np.random.Philox(0 if seed is None else int(seed)))


def build_signal(spec, grids=None) -> Field:
    """Construct the field described by ``spec``.

    Args:
        spec: :class:`SignalSpec` or its JSON dictionary.
        grids: optional per-axis grids (sequence or ``{"x":..,"y":..,"t":..}``);
            each builder has documented defaults.

    Raises:
        ConfigurationError: unknown builder or invalid parameters.
    """
    if not isinstance(spec, SignalSpec):
        spec = SignalSpec.from_dict(spec)
    if spec.file is not None:
        from .io import read_hwg
        return read_hwg(spec.file)
    try:
        builder = BUILDERS[spec.builder]
    except KeyError:
        raise ConfigurationError(f"unknown builder {spec.builder!r}") from None
    try:
        f = builder(spec.params, grids, make_rng(spec.seed))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid parameters for {spec.builder}: {exc}") from exc
    if spec.normalize:
        f = normalized(f)
    return f


def normalized(f: Field) -> Field:
    nrm = sample_inner(f.samples, f.samples, f.grids).real
    if nrm <= 0:
        raise ConfigurationError("cannot normalize a zero field")
    return f.scaled_by(1.0 / math.sqrt(nrm))
