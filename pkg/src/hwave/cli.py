"""Command-line front end: run configurations, write reports, set exit codes.

Exit codes: 0 every requested check passed, 1 a condition failed,
2 configuration error, 3 numerical error (non-finite values, or unconverged
lattice sums under ``--strict``).

The JSON report is deterministic for a fixed configuration and thread
count: keys are sorted, output paths are not echoed, and wall-clock data
goes to a separate ``timings.json``.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from . import designer as des
from . import diagnostics_h as dh
from . import diagnostics_t as dt
from . import oracle, twisted
from .curves import FAIL, PASS, UNCONVERGED, ConditionReport, overall
from .errors import ConfigurationError, HwaveError, NumericalError
from .io import dump_json, write_curve_csv
from .numerics import FT_METHODS, Field, Grid1D, TruncationPolicy
from .parallel import set_threads, thread_map
from .signals import SignalSpec, build_signal
from .weyl import LambdaGrid

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CHECKS = ("classical", "thm-translates-h", "thm-wavelet-h", "thm-twisted-translates",
          "thm-twisted-wavelet", "lemmas", "bridges", "gram", "design")
SIGNAL_FREE = {"classical", "design"}
RANK = {"thm-translates-h": 3, "thm-wavelet-h": 3, "thm-twisted-translates": 2,
        "thm-twisted-wavelet": 2, "bridges": 3}
DEFAULT_TOL = {"classical": 1e-12, "lemmas": 1e-6, "bridges": 1e-3}
CONFIG_KEYS = {"signal", "grids", "lambda_grid", "xi_grid", "truncation", "checks", "indices",
               "tolerance", "output", "design", "method"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def parse_grid(d) -> Grid1D:
    """Grid record ``{"start", "step", "count"}`` or ``{"half_width", "step"}``."""
    if isinstance(d, dict) and "half_width" in d:
        try:
            return Grid1D.symmetric(float(d["half_width"]), float(d["step"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"invalid grid record {d!r}") from exc
    if isinstance(d, dict):
        return Grid1D.from_dict(d)
    raise ConfigurationError(f"grid record must be an object, got {d!r}")


@dataclass
class RunConfig:
    """Validated run configuration (see :func:`parse_config`)."""

    checks: list
    signal: Optional[SignalSpec] = None
    grids: Optional[dict] = None
    lambda_grid: LambdaGrid = field(default_factory=LambdaGrid)
    xi_grid: dt.XiGrid = field(default_factory=dt.XiGrid)
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    indices: dict = field(default_factory=dict)
    tolerance: float = dt.DEFAULT_TOL
    output: dict = field(default_factory=dict)
    design: dict = field(default_factory=dict)
    method: str = "auto"

    def window(self, check: str) -> dict:
        """Shared index ranges overlaid with the check's own entry."""
        base = {k: v for k, v in self.indices.items() if not isinstance(v, dict)}
        own = self.indices.get(check, {})
        return {**base, **own}

    def tol(self, check: str) -> float:
        own = self.indices.get(check, {})
        if "tol" in own:
            return float(own["tol"])
        return DEFAULT_TOL.get(check, self.tolerance)

    def echo(self) -> dict:
        """Configuration with defaults filled in (output paths omitted)."""
        return {
            "checks": list(self.checks),
            "signal": self.signal.to_dict() if self.signal else None,
            "grids": {k: g.to_dict() for k, g in self.grids.items()} if self.grids else None,
            "lambda_grid": self.lambda_grid.to_dict(),
            "xi_grid": self.xi_grid.to_dict(),
            "truncation": self.truncation.to_dict(),
            "indices": self.indices,
            "tolerance": self.tolerance,
            "design": self.design,
            "method": self.method,
        }


def parse_config(d) -> RunConfig:
    """Validate a configuration dictionary.

    Raises:
        ConfigurationError: unknown keys, missing or unknown checks, bad
            grids or truncation fields, or a signal missing where needed.
    """
    if not isinstance(d, dict):
        raise ConfigurationError("configuration must be a JSON object")
    extra = set(d) - CONFIG_KEYS
    if extra:
        raise ConfigurationError(f"unknown configuration keys {sorted(extra)}")
    checks = d.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigurationError("'checks' must be a non-empty list")
    for c in checks:
        if c not in CHECKS:
            raise ConfigurationError(f"unknown check {c!r}; expected one of {list(CHECKS)}")
    if len(set(checks)) != len(checks):
        raise ConfigurationError("checks must not repeat")
    signal = SignalSpec.from_dict(d["signal"]) if d.get("signal") is not None else None
    if signal is None and any(c not in SIGNAL_FREE for c in checks):
        raise ConfigurationError("a signal is required for the requested checks")
    grids = None
    if d.get("grids") is not None:
        if not isinstance(d["grids"], dict):
            raise ConfigurationError("'grids' must map axis names to grid records")
        bad = set(d["grids"]) - {"x", "y", "t"}
        if bad:
            raise ConfigurationError(f"unknown grid axes {sorted(bad)}")
        grids = {k: parse_grid(v) for k, v in sorted(d["grids"].items())}
    try:
        lg = LambdaGrid(**d.get("lambda_grid", {}))
        xg = dt.XiGrid(**d.get("xi_grid", {}))
        pol = TruncationPolicy(**d.get("truncation", {}))
    except TypeError as exc:
        raise ConfigurationError(f"invalid grid or truncation fields: {exc}") from exc
    indices = d.get("indices", {}) or {}
    if not isinstance(indices, dict):
        raise ConfigurationError("'indices' must be an object")
    for k, v in indices.items():
        if isinstance(v, dict) and k not in CHECKS:
            raise ConfigurationError(f"per-check index entry for unknown check {k!r}")
    tol = d.get("tolerance", dt.DEFAULT_TOL)
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigurationError("tolerance must be a positive number")
    method = d.get("method", "auto")
    if method not in FT_METHODS:
        raise ConfigurationError(f"unknown summation method {method!r}")
    design = d.get("design", {}) or {}
    if "design" in checks:
        des.DesignProblem.from_dict(design)  # validate early
    return RunConfig(list(checks), signal, grids, lg, xg, pol, indices, float(tol),
                     dict(d.get("output", {}) or {}), design, method)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"configuration {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    """Reports, curves, matrices and tables produced by one check."""

    name: str
    reports: list = field(default_factory=list)
    curves: list = field(default_factory=list)
    grams: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return overall(self.reports)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reports": [r.to_dict() for r in self.reports],
            "curves": [c.to_dict() for c in self.curves],
            "grams": {k: g.to_dict() for k, g in self.grams.items()},
            "tables": self.tables,
            **self.extra,
        }


def _ints(window: dict, key: str, default) -> list[int]:
    v = window.get(key, default)
    if isinstance(v, (int, float)):
        v = [v]
    out = []
    for x in v:
        if int(x) != x:
            raise ConfigurationError(f"index entry {key} must hold integers")
        out.append(int(x))
    return out


def _floats(window: dict, key: str, default) -> list[float]:
    v = window.get(key, default)
    if isinstance(v, (int, float)):
        v = [v]
    return [float(x) for x in v]


def _max_report(name: str, errors: list[float], tol: float, details: dict) -> ConditionReport:
    if not errors:
        return ConditionReport(name, math.inf, math.inf, tol, True, dict(details, count=0))
    return ConditionReport(name, float(max(errors)), float(np.mean(errors)), tol, True,
                           dict(details, count=len(errors)))


def _gaussian_hat(xi):
    return 2 ** 0.25 * np.exp(-np.pi * np.asarray(xi, dtype=float) ** 2) + 0j


CLASSICAL_WAVELETS = {"shannon": dh.shannon_hat, "gaussian": _gaussian_hat}


def check_classical(cfg: RunConfig, _signal) -> CheckResult:
    w = cfg.window("classical")
    name = w.get("wavelet", "shannon")
    if name not in CLASSICAL_WAVELETS:
        raise ConfigurationError(f"unknown classical wavelet {name!r}")
    reps = dh.classical_check(CLASSICAL_WAVELETS[name], jmax=int(w.get("jmax", 3)),
                              tol=cfg.tol("classical"), cells=int(w.get("cells", 64)))
    return CheckResult("classical", reps, extra={"wavelet": name})


def _require_rank(f: Field, rank: int, check: str) -> None:
    if f.rank != rank:
        raise ConfigurationError(f"check {check} needs a {rank}D signal, got {f.rank}D")


def check_translates_h(cfg: RunConfig, psi) -> CheckResult:
    reps = dh.check_translates_h(psi, cfg.window("thm-translates-h"), cfg.lambda_grid,
                                 cfg.truncation, cfg.tol("thm-translates-h"), cfg.method)
    return CheckResult("thm-translates-h", reps, [c for r in reps for c in r.curves])


def check_wavelet_h(cfg: RunConfig, psi) -> CheckResult:
    reps = dh.check_wavelet_h(psi, cfg.window("thm-wavelet-h"), cfg.lambda_grid,
                              cfg.truncation, cfg.tol("thm-wavelet-h"), cfg.method)
    return CheckResult("thm-wavelet-h", reps, [c for r in reps for c in r.curves])


def check_twisted_translates(cfg: RunConfig, phi) -> CheckResult:
    reps = dt.check_twisted_translates(phi, cfg.window("thm-twisted-translates"), cfg.xi_grid,
                                       cfg.tol("thm-twisted-translates"), cfg.truncation,
                                       cfg.method)
    return CheckResult("thm-twisted-translates", reps, [c for r in reps for c in r.curves])


def check_twisted_wavelet(cfg: RunConfig, phi) -> CheckResult:
    reps = dt.check_twisted_wavelet(phi, cfg.window("thm-twisted-wavelet"), cfg.xi_grid,
                                    cfg.truncation, cfg.tol("thm-twisted-wavelet"), cfg.method)
    return CheckResult("thm-twisted-wavelet", reps, [c for r in reps for c in r.curves])


def check_lemmas(cfg: RunConfig, f) -> CheckResult:
    """Two-path comparisons of the kernel and partial-transform identities."""
    w = cfg.window("lemmas")
    tol = cfg.tol("lemmas")
    js = _ints(w, "j", (-1, 0, 1))
    ks = _ints(w, "k", (-1, 0, 1))
    ls = _ints(w, "l", (-1, 0, 1))
    if f.rank == 3:
        ms = _ints(w, "m", (-1, 0, 1))
        lams = _floats(w, "lambda", [float(x) for x in cfg.lambda_grid.points[::16]])
        items = [(j, (k, l, m)) for j in js for k in ks for l in ls for m in ms]
        errs = [e for row in thread_map(
            lambda it: twisted.element_transform_errors(f, *it, lams), items) for e in row]
        rep = _max_report("lemma.element_transform", errs, tol,
                          {"j": js, "k": ks, "l": ls, "m": ms, "lambda": lams})
        return CheckResult("lemmas", [rep])
    lams = _floats(w, "lambda", (0.25, 0.5, 1.0))
    g = twisted.lemma_grid(float(w.get("half_width", 4.0)), float(w.get("step", 1 / 16)))
    dil = thread_map(lambda it: twisted.dilation_two_path(f, it[0], it[1], g, g),
                     [(j, lam) for j in js for lam in lams])
    tt = thread_map(lambda it: twisted.twisted_translate_two_path(f, *it, g, g),
                    [(k, l, j) for k in ks for l in ls for j in js])
    dtt = thread_map(lambda it: twisted.dilated_twisted_two_path(f, *it, g, g),
                     [(k, l, j, lam) for k in ks for l in ls for j in js for lam in lams])
    info = {"j": js, "k": ks, "l": ls, "lambda": lams, "grid": g.to_dict()}
    reps = [_max_report("lemma.dilation", dil, tol, info),
            _max_report("lemma.twisted_translate", tt, tol, info),
            _max_report("lemma.dilated_twisted_translate", dtt, tol, info)]
    return CheckResult("lemmas", reps)


def check_bridges(cfg: RunConfig, psi) -> CheckResult:
    """Oracle Gram entries next to their diagnostic-side formulas."""
    w = cfg.window("bridges")
    tol = cfg.tol("bridges")
    ks = _ints(w, "k", (-1, 0, 1))
    ls = _ints(w, "l", (-1, 0, 1))
    ms = _ints(w, "m", (-1, 0, 1))
    pairs_kl = [(k, l) for k in ks for l in ls]
    if (0, 0) not in pairs_kl:
        pairs_kl.append((0, 0))
    gcurves = dh.compute_G_many(psi, pairs_kl, cfg.lambda_grid, cfg.truncation, cfg.method)
    gmap = {(c.indices["k"], c.indices["l"]): c for c in gcurves}
    labels = [((0, k, l, m), (0, 0, 0, 0)) for k in ks for l in ls for m in ms]
    vals, _ = oracle.gram_entries(psi, labels)
    rows, errs = [], []
    for (a, _b), v in zip(labels, vals):
        br = dh.g_bridge(gmap[(a[1], a[2])], a[3])
        d = abs(v - br)
        errs.append(d)
        rows.append({"label": f"G k={a[1]} l={a[2]} m={a[3]}", "oracle": [v.real, v.imag],
                     "bridge": [br.real, br.imag], "difference": float(d)})
    reps = [_max_report("bridge.G", errs, tol, {"entries": len(errs)})]
    norm2 = float(np.real(oracle.gram_entries(psi, [((0, 0, 0, 0), (0, 0, 0, 0))])[0][0]))
    mean00 = gmap[(0, 0)].mean()
    rel = abs(mean00 - norm2) / norm2
    reps.append(ConditionReport("bridge.G_mean", float(rel), float(rel), tol, True,
                                {"mean": [mean00.real, mean00.imag], "norm_squared": norm2}))
    curves = list(gcurves)
    for jp in w.get("j_pairs", []):
        j1, j2 = (int(v) for v in jp)
        tuples = [(j1, j2, k1, k2, l1, l2) for k1 in ks for k2 in ks for l1 in ls for l2 in ls]
        fcurves = dh.compute_F_many(psi, tuples, cfg.lambda_grid, cfg.truncation, cfg.method)
        fmap = {tuple(c.indices.values()): c for c in fcurves}
        pairs, keys = [], []
        for t in tuples:
            for m1 in ms:
                for m2 in ms:
                    pairs.append(((j1, t[2], t[4], m1), (j2, t[3], t[5], m2)))
                    keys.append((t, m1, m2))
        fvals, _ = oracle.gram_entries(psi, pairs)
        ferrs = []
        for v, (t, m1, m2) in zip(fvals, keys):
            br = dh.f_bridge(fmap[t], m1, m2)
            d = abs(v - br)
            ferrs.append(d)
            rows.append({"label": "F " + " ".join(f"{n}={x}" for n, x in
                                                  zip(("j1", "j2", "k1", "k2", "l1", "l2"), t))
                         + f" m1={m1} m2={m2}",
                         "oracle": [v.real, v.imag], "bridge": [br.real, br.imag],
                         "difference": float(d)})
        reps.append(_max_report(f"bridge.F[{j1},{j2}]", ferrs, tol, {"entries": len(ferrs)}))
        curves.extend(fcurves)
    conv = all(c.converged for c in curves)
    for r in reps:
        r.converged = conv
    return CheckResult("bridges", reps, curves, tables={"bridges": rows})


def check_gram(cfg: RunConfig, f) -> CheckResult:
    w = cfg.window("gram")
    tol = cfg.tol("gram")
    win = {k: w[k] for k in ("j", "k", "l", "m", "labels") if k in w}
    if f.rank == 3:
        g = oracle.gram_3d(f, win or None, tol, bool(w.get("two_resolution", True)))
    else:
        g = oracle.gram_2d(f, win or None, bool(w.get("twisted", True)), tol,
                           bool(w.get("two_resolution", True)))
    rep = oracle.orthonormality_verdict(g)
    rep.condition = "gram.orthonormality"
    return CheckResult("gram", [rep], grams={"gram": g})


def check_design(cfg: RunConfig, _signal) -> CheckResult:
    problem = des.DesignProblem.from_dict(cfg.design)
    res = des.optimize(problem)
    target = float(cfg.window("design").get("ratio", 0.5))
    ratio = res.residual / res.initial_residual if res.initial_residual > 0 else 0.0
    rep = ConditionReport("design.residual_ratio", float(ratio), float(ratio),
                          float(np.nextafter(target, math.inf)), True,
                          {"initial_residual": res.initial_residual, "residual": res.residual,
                           "budget_exhausted": res.exhausted, "evaluations": res.evaluations})
    return CheckResult("design", [rep], tables={"trace": [[i, v] for i, v in
                                                          enumerate(res.running_best())]},
                       extra={"result": res.to_dict(), "problem": problem.to_dict()})


RUNNERS = {
    "classical": check_classical,
    "thm-translates-h": check_translates_h,
    "thm-wavelet-h": check_wavelet_h,
    "thm-twisted-translates": check_twisted_translates,
    "thm-twisted-wavelet": check_twisted_wavelet,
    "lemmas": check_lemmas,
    "bridges": check_bridges,
    "gram": check_gram,
    "design": check_design,
}


# ---------------------------------------------------------------------------
# Execution and reporting
# ---------------------------------------------------------------------------


def build_config_signal(cfg: RunConfig) -> Optional[Field]:
    if cfg.signal is None:
        return None
    f = build_signal(cfg.signal, cfg.grids)
    for c in cfg.checks:
        if c in RANK:
            _require_rank(f, RANK[c], c)
    f.check_finite()
    return f


def execute(cfg: RunConfig) -> tuple[list[CheckResult], dict]:
    """Run every requested check in order; returns results and timings."""
    timings = {}
    t0 = time.perf_counter()
    signal = build_config_signal(cfg)
    timings["signal"] = time.perf_counter() - t0
    results = []
    for name in cfg.checks:
        t = time.perf_counter()
        results.append(RUNNERS[name](cfg, signal))
        timings[name] = time.perf_counter() - t
    timings["total"] = time.perf_counter() - t0
    return results, timings


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=,-]+", "_", name).strip("_") or "curve"


def emit_report(cfg: RunConfig, results: list[CheckResult], out_dir: Path,
                timings: dict | None = None, threads: int = 1, strict: bool = False) -> Path:
    """Write ``report.json``, ``timings.json`` and CSV files under ``out_dir``.

    Raises:
        ConfigurationError: the output location is not writable.
    """
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_dir = out_dir / "csv"
        csv_dir.mkdir(exist_ok=True)
        for r in results:
            sub = csv_dir / _safe(r.name)
            sub.mkdir(exist_ok=True)
            seen: dict = {}
            for c in r.curves:
                base = _safe(c.label())
                seen[base] = seen.get(base, 0) + 1
                suffix = "" if seen[base] == 1 else f"_{seen[base]}"
                write_curve_csv(sub / f"{base}{suffix}.csv", c)
            for gname, g in r.grams.items():
                g.write_csv(sub / f"{_safe(gname)}.csv")
            for tname, rows in r.tables.items():
                _write_table(sub / f"{_safe(tname)}.csv", rows)
        report = {
            "config": cfg.echo(),
            "checks": {r.name: r.to_dict() for r in results},
            "verdict": overall([rep for r in results for rep in r.reports]),
            "settings": {"threads": threads, "strict": strict},
            "versions": {"hwave": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__},
        }
        path = out_dir / (cfg.output.get("json") or "report.json")
        dump_json(report, path)
        if timings is not None:
            dump_json({"seconds": timings,
                       "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
                      out_dir / "timings.json")
    except OSError as exc:
        raise ConfigurationError(f"cannot write output under {out_dir}: {exc}") from exc
    return path


def _write_table(path: Path, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if rows and isinstance(rows[0], dict):
            keys = list(rows[0])
            w.writerow(keys)
            for row in rows:
                w.writerow([_cell(row[k]) for k in keys])
        else:
            for row in rows:
                w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, float) for x in v):
        return f"{v[0]:.17g}{v[1]:+.17g}i"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_lines(results: list[CheckResult]) -> list[str]:
    """Human summary; every number printed here is also in the JSON report."""
    lines = []
    for r in results:
        for rep in r.reports:
            lines.append(f"{r.name:24s} {rep.condition:34s} {rep.verdict.upper():11s} "
                         f"max_dev={rep.max_deviation:.3e} tol={rep.tolerance:.1e}")
    return lines


def exit_code(results: list[CheckResult], strict: bool) -> int:
    """Fail wins over pass; unconverged sums count as numerical errors under strict."""
    reports = [rep for r in results for rep in r.reports]
    verdicts = [rep.verdict for rep in reports]
    if strict and (UNCONVERGED in verdicts or not all(rep.converged for rep in reports)):
        return EXIT_NUMERIC
    if FAIL in verdicts:
        return EXIT_FAIL
    return EXIT_PASS


@contextlib.contextmanager
def thread_limits(n: int):
    """Apply a worker count to the package pool and to BLAS/OpenMP pools."""
    set_threads(n)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # optional dependency
        ctx = contextlib.nullcontext()
    else:
        ctx = threadpool_limits(limits=n)
    try:
        with ctx:
            yield
    finally:
        set_threads(None)


def resolve_threads(flag: Optional[int]) -> int:
    """``--threads`` beats ``HWAVE_THREADS``; default 1."""
    if flag is not None:
        if flag < 1:
            raise ConfigurationError("--threads must be positive")
        return int(flag)
    env = os.environ.get("HWAVE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"HWAVE_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigurationError("HWAVE_THREADS must be positive")
        return n
    return 1


def run(config, out_dir=None, strict: bool = False, threads: Optional[int] = None,
        quiet: bool = False) -> int:
    """Execute a configuration and write its report.

    Args:
        config: :class:`RunConfig`, a dictionary, or a path to a JSON file.
        out_dir: output directory (default: ``output.dir`` of the config,
            else ``hwave-out``).
        strict: unconverged lattice sums yield exit code 3.
        threads: worker count (``None``: ``HWAVE_THREADS`` or 1).

    Returns:
        The exit code.
    """
    try:
        if isinstance(config, RunConfig):
            cfg = config
        elif isinstance(config, dict):
            cfg = parse_config(config)
        else:
            cfg = load_config(config)
        n = resolve_threads(threads)
        out = Path(out_dir or cfg.output.get("dir") or "hwave-out")
        with thread_limits(n), np.errstate(all="ignore"):
            results, timings = execute(cfg)
        emit_report(cfg, results, out, timings, n, strict)
    except ConfigurationError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        _err(f"numerical error: {exc}")
        return EXIT_NUMERIC
    except HwaveError as exc:
        _err(f"error: {exc}")
        return EXIT_CONFIG
    if not quiet:
        for line in summary_lines(results):
            print(line)
    return exit_code(results, strict)


def _err(msg: str) -> None:
    print(f"hwave: {msg}", file=sys.stderr)


def _signal_arg(text: str) -> dict:
    """Signal spec from a JSON string, a JSON file, an HWG1 file or a builder name."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--signal is not valid JSON: {exc}") from exc
    p = Path(text)
    if p.suffix == ".json" and p.exists():
        try:
            return json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{p} is not valid JSON: {exc}") from exc
    if p.exists():
        return {"file": str(p)}
    return {"builder": text, "params": {}, "normalize": True}


def _json_arg(text: Optional[str], what: str) -> dict:
    if not text:
        return {}
    try:
        v = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{what} is not valid JSON: {exc}") from exc
    if not isinstance(v, dict):
        raise ConfigurationError(f"{what} must be a JSON object")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (overrides HWAVE_THREADS)")
    common.add_argument("--strict", action="store_true",
                        help="treat unconverged lattice sums as errors (exit 3)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress the summary")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    p = argparse.ArgumentParser(prog="hwave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a JSON configuration")
    r.add_argument("config", help="path to the configuration file")

    lm = sub.add_parser("lemmas", parents=[common], help="two-path lemma identities")
    lm.add_argument("--signal", required=True,
                    help="signal spec: JSON text, JSON file, HWG1 file or builder name")
    lm.add_argument("--window", default=None, help="index window as JSON")

    g = sub.add_parser("gram", parents=[common], help="brute-force Gram matrix")
    g.add_argument("--signal", required=True,
                   help="signal spec: JSON text, JSON file, HWG1 file or builder name")
    g.add_argument("--window", default=None, help="index window as JSON")
    g.add_argument("--tolerance", type=float, default=1e-3, help="orthonormality tolerance")
    g.add_argument("--plain", action="store_true",
                   help="use plain rather than twisted translates (2D signals)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            config = args.config
        elif args.command == "lemmas":
            config = {"signal": _signal_arg(args.signal), "checks": ["lemmas"],
                      "indices": {"lemmas": _json_arg(args.window, "--window")}}
        else:
            win = _json_arg(args.window, "--window")
            if args.plain:
                win["twisted"] = False
            config = {"signal": _signal_arg(args.signal), "checks": ["gram"],
                      "indices": {"gram": win}, "tolerance": args.tolerance}
    except ConfigurationError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    return run(config, args.out, args.strict, args.threads, args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
