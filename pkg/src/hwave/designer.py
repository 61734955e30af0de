"""Derivative-free search for generators that satisfy the twisted conditions.

A candidate is ``phi(theta) = sum_i theta_i h_i / ||sum_i theta_i h_i||`` over
tensor Hermite functions ``h_i``.  Kernel rows are linear in phi, so the rows
of every basis function are computed once and each residual evaluation only
forms weighted sums of cached rows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import diagnostics_t as dt
from .errors import ConfigurationError, DegenerateCandidateError
from .numerics import Field2D, TruncationPolicy, sample_inner
from .rows import Factor, RowEngine
from .signals import hermite_basis, make_rng

log = logging.getLogger(__name__)

CONDITIONS = ("twisted_translates.i", "twisted_translates.ii", "twisted_wavelet.iii",
              "twisted_wavelet.iv", "twisted_wavelet.v")
DEFAULT_CONDITIONS = CONDITIONS[:2]


@dataclass
class DesignProblem:
    """Search specification.

    Attributes:
        basis_size: number of Hermite elements (1..36).
        window: ``{"conditions": [...], "l": [...], "j1": [...], "dj": [...],
            "j": [...]}``; conditions default to (i) and (ii), plus (iii)-(v)
            when dilation keys are present.
        weights: per-condition weights (default 1 for every included one).
        budget: maximum residual evaluations.
        seed: seed of the random initial point.
        xi_cells: midpoint cells of the xi grid.
        m_range: ring half-width of the m sums.
        grids: optional Hermite grids (x, y).
    """

    basis_size: int = 6
    window: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    budget: int = 500
    seed: int = 0
    xi_cells: int = 64
    m_range: int = 8
    grids: Optional[list] = None

    def __post_init__(self):
        if int(self.basis_size) != self.basis_size or self.basis_size < 1:
            raise ConfigurationError("basis_size must be a positive integer")
        conds = self.conditions
        for c in conds:
            if c not in CONDITIONS:
                raise ConfigurationError(f"unknown design condition {c!r}")
        for c, w in self.weights.items():
            if c not in CONDITIONS:
                raise ConfigurationError(f"weight given for unknown condition {c!r}")
            if not w >= 0:
                raise ConfigurationError("weights must be non-negative")
        if not any(self.weight(c) > 0 for c in conds):
            raise ConfigurationError("at least one included condition needs a positive weight")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ConfigurationError("budget must be a positive integer")

    @property
    def conditions(self) -> list[str]:
        """Included conditions; (iii)-(v) join by default when the window has dilations."""
        if "conditions" in self.window:
            return list(self.window["conditions"])
        if any(k in self.window for k in ("j", "j1", "dj")):
            return list(CONDITIONS)
        return list(DEFAULT_CONDITIONS)

    def weight(self, cond: str) -> float:
        return float(self.weights.get(cond, 1.0))

    def to_dict(self) -> dict:
        return {"basis_size": self.basis_size, "window": self.window, "weights": self.weights,
                "budget": self.budget, "seed": self.seed, "xi_cells": self.xi_cells,
                "m_range": self.m_range}

    @classmethod
    def from_dict(cls, d: dict) -> "DesignProblem":
        known = {"basis_size", "window", "weights", "budget", "seed", "xi_cells", "m_range",
                 "grids"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown design fields {sorted(extra)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# Linear row combinations
# ---------------------------------------------------------------------------


class _CombinedRows(RowEngine):
    """Row engine for ``sum_i c_i h_i`` built from per-basis engines."""

    def __init__(self, engines: Sequence[RowEngine]):
        e0 = engines[0]
        self.engines = list(engines)
        self.cells = e0.cells
        self.bound = e0.bound
        self.method = e0.method
        self.h = e0.h
        self.ny = e0.ny
        self.y0_idx = e0.y0_idx
        self.wy = e0.wy
        self.coef = np.zeros(len(engines))
        self._ranges: dict = {}

    def clear(self) -> None:
        for e in self.engines:
            e.clear()
        self._ranges.clear()

    def ring_range(self, lam, scale, l):
        key = (lam, scale, l)
        r = self._ranges.get(key)
        if r is None:
            parts = [e.ring_range(lam, scale, l) for e in self.engines]
            parts = [p for p in parts if p[1] >= p[0]]
            if not parts:
                r = (0, -1, False)
            else:
                r = (min(p[0] for p in parts), max(p[1] for p in parts), any(p[2] for p in parts))
            self._ranges[key] = r
        return r

    def factor(self, lam, scale, l, s_lo, s_hi) -> Factor:
        rows = None
        for c, e in zip(self.coef, self.engines):
            part = e.span_rows(e.factor(lam, scale, l, s_lo, s_hi), s_lo, s_hi)
            rows = c * part if rows is None else rows + c * part
        return Factor(rows, s_lo, s_hi)


class _CombinedS(dt.SRows):
    """S-rows of ``sum_i c_i h_i`` from per-basis S-rows."""

    def __init__(self, parts: Sequence[dt.SRows]):
        p0 = parts[0]
        self.parts = list(parts)
        self.xigrid = p0.xigrid
        self.pol = p0.pol
        self.method = p0.method
        self.h = p0.h
        self.wy = p0.wy
        self.coef = np.zeros(len(parts))
        self._ranges: dict = {}

    def ring_range(self, j, l):
        key = (j, l)
        r = self._ranges.get(key)
        if r is None:
            ps = [p.ring_range(j, l) for p in self.parts]
            ps = [p for p in ps if p[1] >= p[0]]
            r = (min(p[0] for p in ps), max(p[1] for p in ps), any(p[2] for p in ps)) if ps \
                else (0, -1, False)
            self._ranges[key] = r
        return r

    def rows(self, j, l, m_lo, m_hi):
        out = None
        for c, p in zip(self.coef, self.parts):
            part = p.rows(j, l, m_lo, m_hi)
            out = c * part if out is None else out + c * part
        return out


# ---------------------------------------------------------------------------
# Residual
# ---------------------------------------------------------------------------


class Objective:
    """Residual evaluator with cached basis rows for one problem."""

    def __init__(self, problem: DesignProblem):
        self.problem = problem
        self.basis = hermite_basis(problem.basis_size, problem.grids)
        self.xigrid = dt.XiGrid(problem.xi_cells)
        self.pol = TruncationPolicy(m_range=problem.m_range)
        grids = self.basis[0].grids
        flat = np.stack([b.samples.ravel() for b in self.basis])
        w = np.outer(grids[0].weights(), grids[1].weights()).ravel()
        self._gram = (flat * w) @ flat.conj().T
        self.engine = _CombinedRows([dt.make_engine(b, self.xigrid, self.pol)
                                     for b in self.basis])
        self.srows = _CombinedS([dt.SRows(b, self.xigrid, self.pol) for b in self.basis])
        win = problem.window
        self.ls = [int(v) for v in win.get("l", range(-2, 3))]
        self.ptuples = dt.default_p_window(win) if CONDITIONS[2] in problem.conditions else []
        js = [int(v) for v in win.get("j", (-2, -1, 1, 2))]
        if 0 in js:
            raise ConfigurationError("conditions (iv) and (v) exclude j = 0")
        self.js = js

    def candidate(self, theta) -> Field2D:
        """The normalized field ``phi(theta)``."""
        c = self._coefficients(theta)
        samples = sum(ci * b.samples for ci, b in zip(c, self.basis))
        return Field2D(self.basis[0].grids, samples, meta={"builder": "hermite_design"})

    def _coefficients(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.basis),):
            raise ConfigurationError(f"theta must have {len(self.basis)} entries")
        if not np.all(np.isfinite(theta)):
            raise DegenerateCandidateError("non-finite coefficients")
        norm2 = float(np.real(theta @ self._gram @ theta))
        if not norm2 > 0:
            raise DegenerateCandidateError("zero coefficient vector has no normalization")
        return theta / math.sqrt(norm2)

    def terms(self, theta) -> dict:
        """Per-condition sums of squared deviations over the xi grid and the window."""
        c = self._coefficients(theta)
        self.engine.coef = c
        self.srows.coef = c
        conds = self.problem.conditions
        out = {}
        ls_nz = [l for l in self.ls if l != 0]
        if CONDITIONS[0] in conds:
            t0 = dt.compute_T(None, 0, self.xigrid, self.pol, engine=self.engine)
            out[CONDITIONS[0]] = _msd(t0.values, 1.0)
        if CONDITIONS[1] in conds:
            out[CONDITIONS[1]] = sum(
                _msd(dt.compute_T(None, l, self.xigrid, self.pol, engine=self.engine).values, 0.0)
                for l in ls_nz)
        if CONDITIONS[2] in conds:
            out[CONDITIONS[2]] = sum(
                _msd(dt.compute_P(None, *t, self.xigrid, self.pol, engine=self.engine).values, 0.0)
                for t in self.ptuples)
        if CONDITIONS[3] in conds:
            out[CONDITIONS[3]] = sum(
                _msd(dt.compute_Q(None, j, a, b, srows=self.srows).values, 0.0)
                for j in self.js for a in self.ls for b in self.ls if a != b)
        if CONDITIONS[4] in conds:
            out[CONDITIONS[4]] = sum(
                _msd(dt.compute_R(None, j, l, srows=self.srows).values, dt.r_target(j))
                for j in self.js for l in self.ls)
        return out

    def __call__(self, theta) -> float:
        t = self.terms(theta)
        return float(math.fsum(self.problem.weight(k) * v for k, v in t.items()))


def _msd(values: np.ndarray, target: float) -> float:
    """Sum of ``|values - target|^2`` over the xi grid points."""
    return float(math.fsum((np.abs(values - target) ** 2).tolist()))


def residual(theta, problem: DesignProblem, objective: Objective | None = None) -> float:
    """Weighted sum of squared condition deviations of ``phi(theta)``.

    Each included condition contributes its weight times the sum, over the
    index window and the xi grid points, of ``|value(xi) - target|^2``.  The result is invariant under ``theta -> c theta``
    for ``c > 0``.

    Raises:
        DegenerateCandidateError: theta is zero (no normalization exists).
    """
    return (objective or Objective(problem))(theta)


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------


@dataclass
class DesignResult:
    theta: np.ndarray
    residual: float
    initial_residual: float
    trace: list
    exhausted: bool
    evaluations: int

    def running_best(self) -> list[float]:
        out, best = [], math.inf
        for v in self.trace:
            best = min(best, v)
            out.append(best)
        return out

    def to_dict(self) -> dict:
        return {"theta": [float(v) for v in self.theta], "residual": self.residual,
                "initial_residual": self.initial_residual,
                "ratio": self.residual / self.initial_residual if self.initial_residual else None,
                "trace": [float(v) if math.isfinite(v) else str(v) for v in self.trace],
                "budget_exhausted": self.exhausted, "evaluations": self.evaluations}


def initial_theta(problem: DesignProblem) -> np.ndarray:
    """Seeded standard-normal starting coefficients."""
    return make_rng(problem.seed).standard_normal(problem.basis_size)


def optimize(problem: DesignProblem, init=None, objective: Objective | None = None) -> DesignResult:
    """Nelder-Mead search (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

    Every evaluation is recorded in the trace; the returned coefficients are
    those of the best evaluation, so a starting point that no vertex
    improves on comes back unchanged.

    Args:
        problem: the search specification; ``budget`` caps evaluations.
        init: starting coefficients (default: :func:`initial_theta`).

    Returns:
        DesignResult with ``exhausted`` set when the budget ran out.
    """
    if problem.budget < problem.basis_size + 1:
        raise ConfigurationError("budget must cover the initial simplex (basis_size + 1)")
    obj = objective or Objective(problem)
    x0 = np.array(initial_theta(problem) if init is None else init, dtype=float)
    trace: list[float] = []
    best = [math.inf, x0.copy()]

    def f(theta):
        if len(trace) >= problem.budget:
            return best[0]
        try:
            v = obj(theta)
        except DegenerateCandidateError:
            v = math.inf
        trace.append(v)
        if v < best[0]:
            best[0] = v
            best[1] = np.array(theta, dtype=float)
        return v

    f0 = f(x0)
    if not math.isfinite(f0):
        raise DegenerateCandidateError("initial coefficients are degenerate")
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"maxfev": problem.budget - 1, "xatol": 1e-10, "fatol": 1e-14,
                            "adaptive": False})
    exhausted = len(trace) >= problem.budget or res.status == 1
    return DesignResult(best[1], float(best[0]), float(f0), trace, bool(exhausted), len(trace))


def projection_theta(phi: Field2D, problem: DesignProblem) -> np.ndarray:
    """Real coefficients of the best approximation of phi in the basis.

    The complex projection ``<phi, h_i>`` is made real by a common phase
    chosen to maximize the captured norm, since candidates are real
    combinations.
    """
    basis = hermite_basis(problem.basis_size, problem.grids)
    coef = np.array([sample_inner(phi.samples if phi.grids == b.grids else
                                  _resample_like(phi, b), b.samples, b.grids)
                     for b in basis])
    # phase maximizing |Re(e^{-i a} coef)|^2: half the angle of sum coef^2
    a = 0.5 * np.angle(np.sum(coef * coef))
    return np.real(np.exp(-1j * a) * coef)


def _resample_like(phi: Field2D, b: Field2D) -> np.ndarray:
    if phi.func is None:
        raise ConfigurationError("projection needs phi on the basis grid or a closed form")
    gx, gy = b.grids
    return np.asarray(phi.func(gx.points[:, None], gy.points[None, :]), dtype=complex)
