"""Diagnostic curves and condition reports shared by both diagnostic modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import NumericalError
from .io import complex_pair

PASS, FAIL, UNCONVERGED = "pass", "fail", "unconverged"


@dataclass
class DiagnosticCurve:
    """Complex values of a diagnostic on a unit-interval midpoint grid.

    Attributes:
        axis: ``"lambda"`` or ``"xi"``.
        points: evaluation points in (0, 1).
        values: complex values, one per point.
        indices: label record such as ``{"k": 0, "l": 1}``.
        converged: every inner lattice sum passed its tail test.
        ranges: achieved truncation half-widths (for auditing).
    """

    axis: str
    points: np.ndarray
    values: np.ndarray
    indices: dict
    converged: bool = True
    ranges: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.points.shape:
            raise ValueError("curve values and points differ in shape")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite values in diagnostic {self.name or self.indices}")

    @property
    def cells(self) -> int:
        return len(self.points)

    def mean(self) -> complex:
        """Midpoint-rule integral over (0, 1)."""
        return complex(np.mean(self.values))

    def fourier_coefficient(self, m: float) -> complex:
        """Midpoint rule for ``int_0^1 values(x) e^{2 pi i x m} dx``."""
        return complex(np.mean(self.values * np.exp(2j * np.pi * self.points * m)))

    def label(self) -> str:
        idx = ",".join(f"{k}={v}" for k, v in self.indices.items())
        return f"{self.name}[{idx}]" if self.name else idx

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "axis": self.axis,
            "indices": dict(self.indices),
            "converged": bool(self.converged),
            "ranges": dict(self.ranges),
            "points": [float(p) for p in self.points],
            "values": [complex_pair(v) for v in self.values],
        }


@dataclass
class ConditionReport:
    """Outcome of checking one condition against its target."""

    condition: str
    max_deviation: float
    mean_deviation: float
    tolerance: float
    converged: bool = True
    details: dict = field(default_factory=dict)
    curves: list = field(default_factory=list, repr=False)

    @property
    def verdict(self) -> str:
        if not (self.max_deviation < self.tolerance):
            return FAIL
        return PASS if self.converged else UNCONVERGED

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "max_deviation": _finite_or_str(self.max_deviation),
            "mean_deviation": _finite_or_str(self.mean_deviation),
            "tolerance": self.tolerance,
            "converged": bool(self.converged),
            "verdict": self.verdict,
            "details": self.details,
        }


def _finite_or_str(x: float):
    return float(x) if math.isfinite(x) else str(x)


def report_from_curves(condition: str, curves: Iterable[DiagnosticCurve], target, tol: float,
                       details: Optional[dict] = None) -> ConditionReport:
    """Max/mean deviation of all curve values from ``target``.

    ``target`` is a number or a callable mapping a curve to its target value.
    An empty curve set yields a failing report with infinite deviation, since
    no evidence was collected.
    """
    curves = list(curves)
    if not curves:
        return ConditionReport(condition, math.inf, math.inf, tol, True,
                               dict(details or {}, curves=0))
    devs = []
    worst = None
    for c in curves:
        t = target(c) if callable(target) else target
        d = np.abs(c.values - t)
        devs.append(d)
        cmax = float(d.max())
        if worst is None or cmax > worst[0]:
            worst = (cmax, c.label())
    alld = np.concatenate(devs)
    info = dict(details or {})
    info.update({"curves": len(curves), "worst": worst[1]})
    return ConditionReport(condition, float(alld.max()), float(alld.mean()), tol,
                           all(c.converged for c in curves), info, curves)


def overall(reports: Iterable[ConditionReport]) -> str:
    """Combined verdict: fail beats unconverged beats pass."""
    verdicts = [r.verdict for r in reports]
    if FAIL in verdicts:
        return FAIL
    if UNCONVERGED in verdicts:
        return UNCONVERGED
    return PASS
