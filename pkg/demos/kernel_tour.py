"""A short tour: kernels, twisted diagnostics and a Gram matrix.

Run with ``python3 demos/kernel_tour.py``.
"""

import math

import numpy as np

from hwave import oracle
from hwave.diagnostics_t import check_twisted_translates, compute_R
from hwave.numerics import Grid1D, TruncationPolicy, squared_norm
from hwave.signals import build_signal
from hwave.weyl import kernel_inner, kernel_of


def main() -> None:
    gauss = build_signal({"builder": "gaussian2d", "params": {}, "normalize": True})
    box = build_signal({"builder": "box_kernel_phi", "params": {}, "normalize": False})

    g = Grid1D.symmetric(2.0, 1 / 16)
    K = kernel_of(gauss, 1.0, g, g)
    i0 = g.count // 2
    print(f"Gaussian kernel at (0, 0): {K.samples[i0, i0].real:.12f} (sqrt 2 = {math.sqrt(2):.12f})")
    for lam in (0.5, 1.0, 2.0):
        hs = kernel_inner(gauss, gauss, lam).real
        print(f"lam = {lam}: kernel norm^2 = {hs:.8f}, ||phi||^2 / lam = {1 / lam:.8f}")

    for name, phi in (("box", box), ("gaussian", gauss)):
        reps = check_twisted_translates(phi, tol=1e-3)
        print(f"{name}: " + ", ".join(f"{r.condition} {r.verdict} ({r.max_deviation:.2e})"
                                      for r in reps))

    r = compute_R(gauss, 1, 0, pol=TruncationPolicy(m_range=32))
    print(f"mean of R at j = 1: {r.mean().real:.6f} (target {15 / 64 * squared_norm(gauss):.6f})")

    G = oracle.gram_2d(gauss, {"j": [0], "k": [0, 1], "l": [0]})
    print("Gaussian twisted Gram, k in {0, 1}:")
    print(np.array2string(G.entries, precision=6))
    print(f"exp(-5 pi / 8) = {math.exp(-5 * math.pi / 8):.6f}")


if __name__ == "__main__":
    main()
