"""File formats: HWG1 sampled fields, kernel sidecars, JSON and CSV helpers."""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError
from .numerics import Field, Field2D, Field3D, Grid1D

MAGIC = b"HWG1"
VERSION = 1


def write_hwg(path, field: Field) -> None:
    """Write a rank-2 or rank-3 field in the HWG1 binary format."""
    if field.rank not in (2, 3):
        raise ConfigurationError("HWG1 stores rank 2 or 3 fields only")
    parts = [MAGIC, struct.pack("<IB", VERSION, field.rank)]
    for g in field.grids:
        parts.append(struct.pack("<ddQ", g.start, g.step, g.count))
    data = np.ascontiguousarray(field.samples, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))
        fh.write(data.tobytes(order="C"))


def read_hwg(path) -> Field:
    """Read an HWG1 file into a :class:`Field2D` or :class:`Field3D`."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ConfigurationError(f"{path}: not an HWG1 file")
    if len(raw) < 9:
        raise ConfigurationError(f"{path}: truncated header")
    version, rank = struct.unpack_from("<IB", raw, 4)
    if version != VERSION:
        raise ConfigurationError(f"{path}: unsupported HWG1 version {version}")
    if rank not in (2, 3):
        raise ConfigurationError(f"{path}: invalid rank {rank}")
    off = 9
    grids = []
    for _ in range(rank):
        if len(raw) < off + 24:
            raise ConfigurationError(f"{path}: truncated axis record")
        start, step, count = struct.unpack_from("<ddQ", raw, off)
        off += 24
        grids.append(Grid1D(start, step, count))
    shape = tuple(g.count for g in grids)
    need = int(np.prod(shape)) * 16
    if len(raw) - off != need:
        raise ConfigurationError(f"{path}: expected {need} sample bytes, found {len(raw) - off}")
    samples = np.frombuffer(raw, dtype="<c16", offset=off).reshape(shape).astype(complex)
    cls = Field2D if rank == 2 else Field3D
    return cls(tuple(grids), samples, meta={"source": str(path)})


def write_kernel(path, kernel) -> None:
    """Write a kernel as HWG1 plus a ``.json`` sidecar holding its parameter."""
    write_hwg(path, kernel)
    sidecar = Path(str(path) + ".json")
    sidecar.write_text(json.dumps({"lambda": float(kernel.lam)}, sort_keys=True) + "\n")


def read_kernel(path):
    from .weyl import WeylKernel

    f = read_hwg(path)
    sidecar = Path(str(path) + ".json")
    try:
        lam = float(json.loads(sidecar.read_text())["lambda"])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigurationError(f"{sidecar}: missing or invalid kernel sidecar") from exc
    return WeylKernel(lam, f.grids[0], f.grids[1], f.samples)


# ---------------------------------------------------------------------------
# JSON / CSV
# ---------------------------------------------------------------------------


def complex_pair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def format_complex_cell(z) -> str:
    """Format a complex number as ``re+imi`` (e.g. ``1.5-2e-08i``)."""
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_complex_cell(s: str) -> complex:
    s = s.strip()
    if not s.endswith("i"):
        raise ValueError(f"not a complex cell: {s!r}")
    body = s[:-1]
    # split at the sign that starts the imaginary part (skip exponent signs)
    for pos in range(len(body) - 1, 0, -1):
        if body[pos] in "+-" and body[pos - 1] not in "eE":
            return complex(float(body[:pos]), float(body[pos:]))
    raise ValueError(f"not a complex cell: {s!r}")


def dump_json(obj, path) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_curve_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([curve.axis, "re", "im"])
        for p, v in zip(curve.points, curve.values):
            w.writerow([repr(float(p)), repr(float(v.real)), repr(float(v.imag))])


def write_gram_csv(path, labels: Sequence, entries: np.ndarray) -> None:
    names = [label_name(lab) for lab in labels]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + names)
        for name, row in zip(names, entries):
            w.writerow([name] + [format_complex_cell(z) for z in row])


def read_gram_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    entries = np.array([[parse_complex_cell(c) for c in r[1:]] for r in rows[1:]])
    return labels, entries


def label_name(label: Iterable[int]) -> str:
    return "(" + ",".join(str(int(v)) for v in label) + ")"
