"""Operators on the plane and the kernel identities they satisfy.

* twisted translation ``(T_(k,l))^lam phi(x,y) = e^{pi i lam (x l - y k)} phi(x-k, y-l)``
* dyadic dilation ``D_{2^j} phi(x,y) = 2^j phi(2^j x, 2^j y)``
* modulation ``e(a,b) phi(x,y) = e^{2 pi i (a x + b y)} phi(x,y)``

The ``kernel_of_*`` functions evaluate the right-hand sides of the kernel
identities directly from the kernel of the untransformed function; the
``*_two_path`` functions compare them with the kernel of the transformed
function and return the maximum absolute difference.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .heisenberg import check_scale, t_transform, wavelet_element
from .numerics import Field2D, Field3D, Grid1D, resample_axis, sample_inner
from .weyl import WeylKernel, kernel_of


class TwistIndex(NamedTuple):
    k: int
    l: int


class ModulationParams(NamedTuple):
    a: float
    b: float


def _plain_meta(phi):
    """Metadata that survives a transformation (support hints do not)."""
    return {k: v for k, v in phi.meta.items() if k != "kernel_support"}


def _pullback2d(phi: Field2D, ax, bx, ay, by, scale, phase=None, check=False, tol=1e-6):
    """``scale * phase(x,y) * phi(ax x + bx, ay y + by)`` on the grid of phi."""
    gx, gy = phi.grids
    x, y = gx.points[:, None], gy.points[None, :]
    if phi.func is not None:
        base = phi.func

        def func(xx, yy, _b=base):
            val = scale * _b(ax * xx + bx, ay * yy + by)
            return val * phase(xx, yy) if phase is not None else val

        samples = np.broadcast_to(func(x, y), phi.shape).astype(complex)
    else:
        func = None
        arr = resample_axis(phi.samples, 0, gx, ax * gx.points + bx)
        arr = resample_axis(arr, 1, gy, ay * gy.points + by)
        samples = scale * arr
        if phase is not None:
            samples = samples * phase(x, y)
    out = Field2D(phi.grids, samples, func=func, meta=_plain_meta(phi))
    if check:
        before = sample_inner(phi.samples, phi.samples, phi.grids).real
        after = sample_inner(out.samples, out.samples, phi.grids).real
        if before > 0 and abs(after - before) > tol * before:
            from .errors import DomainCoverageError
            raise DomainCoverageError(
                f"resampled field lost relative mass {abs(after - before) / before:.3e}")
    return out


def twisted_translate(phi: Field2D, k: int, l: int, lam: float, check: bool = False,
                      tol: float = 1e-6) -> Field2D:
    """``(T_(k,l))^lam phi`` on the grid of ``phi`` (integer shifts are exact)."""
    k, l = int(k), int(l)

    def phase(x, y):
        return np.exp(1j * np.pi * lam * (x * l - y * k))

    return _pullback2d(phi, 1.0, -k, 1.0, -l, 1.0, phase, check, tol)


def dilate_2d(phi: Field2D, j: int, check: bool = False, tol: float = 1e-6) -> Field2D:
    """``D_{2^j} phi(x, y) = 2^j phi(2^j x, 2^j y)``."""
    j = check_scale(j)
    a = 2.0 ** j
    return _pullback2d(phi, a, 0.0, a, 0.0, a, None, check, tol)


def modulate(phi: Field2D, p) -> Field2D:
    """``e(a,b) phi`` (pointwise unimodular factor)."""
    a, b = float(p[0]), float(p[1])

    def phase(x, y):
        return np.exp(2j * np.pi * (a * x + b * y))

    gx, gy = phi.grids
    samples = phi.samples * phase(gx.points[:, None], gy.points[None, :])
    func = None
    if phi.func is not None:
        base = phi.func
        func = lambda xx, yy: base(xx, yy) * phase(xx, yy)  # noqa: E731
    meta = _plain_meta(phi)
    sup = phi.meta.get("kernel_support")
    if sup is not None and sup.get("lam") == 1.0:
        # K_{e(a,b) phi}(xi, eta) = e^{2 pi i b (eta - xi)} K_phi(xi + a, eta + a)
        (a0, a1), (b0, b1) = sup["box"]
        meta["kernel_support"] = {"box": ((a0 - a, a1 - a), (b0 - a, b1 - a)), "lam": 1.0}
    return Field2D(phi.grids, samples, func=func, meta=meta)


# ---------------------------------------------------------------------------
# Right-hand sides of the kernel identities
# ---------------------------------------------------------------------------


def _default_grids(phi, grid_xi, grid_eta):
    return grid_xi or phi.grid_y, grid_eta or phi.grid_y


def kernel_of_dilated(phi: Field2D, j: int, lam: float, grid_xi: Grid1D | None = None,
                      grid_eta: Grid1D | None = None, method: str = "direct") -> WeylKernel:
    """``K^{lam 4^-j}_phi(2^j xi, 2^j eta)`` sampled on the (xi, eta) grid."""
    j = check_scale(j)
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    a = 2.0 ** j
    K = kernel_of(phi, lam / (a * a), gxi.scaled(a), geta.scaled(a), method)
    return WeylKernel(lam, gxi, geta, K.samples)


def kernel_of_twisted_translate(phi: Field2D, k: int, l: int, j: int,
                                grid_xi: Grid1D | None = None, grid_eta: Grid1D | None = None,
                                method: str = "direct") -> WeylKernel:
    """Kernel (at parameter 1) of ``(T_(k,l))^{4^-j} phi`` from the kernel of a modulation.

    Evaluates
    ``e^{pi i q k l} e^{pi i k (1+q) xi} e^{pi i k (1-q) eta} K_{e((q-1) l/2, 0) phi}(xi + l, eta)``
    with ``q = 4^-j``.
    """
    j = check_scale(j)
    k, l = int(k), int(l)
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    q = 4.0 ** (-j)
    mod = modulate(phi, ((q - 1) * l / 2, 0.0))
    K = kernel_of(mod, 1.0, gxi.shifted(l), geta, method)
    xi = gxi.points[:, None]
    eta = geta.points[None, :]
    ph = np.exp(1j * np.pi * (q * k * l + k * (1 + q) * xi + k * (1 - q) * eta))
    return WeylKernel(1.0, gxi, geta, ph * K.samples)


def kernel_of_dilated_twisted(phi: Field2D, k: int, l: int, j: int, lam: float,
                              grid_xi: Grid1D | None = None, grid_eta: Grid1D | None = None,
                              method: str = "direct") -> WeylKernel:
    """Kernel of ``D_{2^j} (T_(k,l))^{lam 4^-j} phi`` at parameter ``lam``.

    Evaluates ``e^{pi i L k (2^{j+1} xi + l)} K^L_phi(2^j xi + l, 2^j eta)``
    with ``L = lam 4^-j``.
    """
    j = check_scale(j)
    k, l = int(k), int(l)
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    a = 2.0 ** j
    L = lam / (a * a)
    K = kernel_of(phi, L, gxi.scaled(a).shifted(l), geta.scaled(a), method)
    xi = gxi.points[:, None]
    ph = np.exp(1j * np.pi * L * k * (2 * a * xi + l))
    return WeylKernel(lam, gxi, geta, ph * K.samples)


# ---------------------------------------------------------------------------
# Two-path comparisons
# ---------------------------------------------------------------------------


def dilation_two_path(phi: Field2D, j: int, lam: float, grid_xi=None, grid_eta=None,
                      method: str = "direct") -> float:
    """Max |K^lam_{D_{2^j} phi} - kernel_of_dilated(phi, j, lam)| on the grid."""
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    lhs = kernel_of(dilate_2d(phi, j), lam, gxi, geta, method)
    rhs = kernel_of_dilated(phi, j, lam, gxi, geta, method)
    return float(np.max(np.abs(lhs.samples - rhs.samples)))


def twisted_translate_two_path(phi: Field2D, k: int, l: int, j: int, grid_xi=None,
                               grid_eta=None, method: str = "direct") -> float:
    """Max |K_{(T_(k,l))^{4^-j} phi} - kernel_of_twisted_translate(phi, k, l, j)|."""
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    lhs = kernel_of(twisted_translate(phi, k, l, 4.0 ** (-j)), 1.0, gxi, geta, method)
    rhs = kernel_of_twisted_translate(phi, k, l, j, gxi, geta, method)
    return float(np.max(np.abs(lhs.samples - rhs.samples)))


def dilated_twisted_two_path(phi: Field2D, k: int, l: int, j: int, lam: float, grid_xi=None,
                             grid_eta=None, method: str = "direct") -> float:
    """Max |K^lam_{D_{2^j}(T_(k,l))^{lam 4^-j} phi} - kernel_of_dilated_twisted(...)|."""
    gxi, geta = _default_grids(phi, grid_xi, grid_eta)
    comp = dilate_2d(twisted_translate(phi, k, l, lam * 4.0 ** (-j)), j)
    lhs = kernel_of(comp, lam, gxi, geta, method)
    rhs = kernel_of_dilated_twisted(phi, k, l, j, lam, gxi, geta, method)
    return float(np.max(np.abs(lhs.samples - rhs.samples)))


def element_transform_rhs(psi: Field3D, j: int, idx, lam: float) -> Field2D:
    """``2^-j e^{2 pi i lam 4^-j m} D_{2^j} (T_(k,l))^{lam 4^-j} psi^{lam 4^-j}``."""
    j = check_scale(j)
    k, l, m = (int(v) for v in idx)
    L = lam * 4.0 ** (-j)
    base = t_transform(psi, L)
    out = dilate_2d(twisted_translate(base, k, l, L), j)
    c = 2.0 ** (-j) * np.exp(2j * np.pi * L * m)
    return Field2D(out.grids, c * out.samples)


def element_t_grid(psi: Field3D, j: int, idx) -> Grid1D:
    """A t grid that resolves ``delta_{2^j} L_(k,l,m) psi`` over the (x,y) box.

    The element's t profile is psi's profile scaled by ``4^-j`` and shifted
    by ``4^-j (m - 2^j (y k - x l) / 2)``, so the step is ``4^-j`` times
    psi's step and the range covers every shift met on the (x,y) grid.
    """
    j = check_scale(j)
    k, l, m = (int(v) for v in idx)
    gx, gy, gt = psi.grids
    c = 4.0 ** (-j)
    xmax = max(abs(gx.start), abs(gx.stop))
    ymax = max(abs(gy.start), abs(gy.stop))
    shear = abs(m) + 2.0 ** j * (ymax * abs(k) + xmax * abs(l)) / 2
    step = c * gt.step
    n = int(np.ceil(c * (max(abs(gt.start), abs(gt.stop)) + shear) / step))
    return Grid1D(-n * step, step, 2 * n + 1)


def element_transform_errors(psi: Field3D, j: int, idx, lams) -> list:
    """:func:`element_transform_two_path` for several ``lam`` sharing one element.

    The element is sampled once and its t transforms for all ``lams`` come
    from one matrix product.
    """
    if psi.func is not None:
        gx, gy, _ = psi.grids
        src = Field3D.from_function(gx, gy, element_t_grid(psi, j, idx), psi.func)
    else:
        src = psi
    elem = wavelet_element(src, j, idx, check=False)
    lams = [float(v) for v in lams]
    gt = elem.grid_t
    nx, ny, nt = elem.shape
    w = gt.weights()[:, None] * np.exp(2j * np.pi * np.outer(gt.points, lams))
    w[:, np.abs(lams) >= 0.5 / gt.step] = 0.0
    lhs = (elem.samples.reshape(nx * ny, nt) @ w).T
    errs = []
    for i, lam in enumerate(lams):
        rhs = element_transform_rhs(psi, j, idx, lam).samples.reshape(-1)
        errs.append(float(np.max(np.abs(lhs[i] - rhs))))
    return errs


def element_transform_two_path(psi: Field3D, j: int, idx, lam: float) -> float:
    """Max |(delta_{2^j} L_(k,l,m) psi)^lam - element_transform_rhs| on the (x,y) grid.

    With a closed form the left side is sampled on :func:`element_t_grid`
    so the t quadrature resolves the element at every scale; otherwise the
    element is resampled on psi's own grid.
    """
    return element_transform_errors(psi, j, idx, [lam])[0]


def lemma_grid(half_width: float = 4.0, step: float = 1 / 16) -> Grid1D:
    """Default (xi, eta) comparison grid for the kernel identities."""
    if half_width <= 0:
        raise ConfigurationError("half width must be positive")
    return Grid1D.symmetric(half_width, step)
