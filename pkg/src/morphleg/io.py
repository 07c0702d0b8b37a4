"""File formats: field CSV/PGM, foot-path and trajectory CSV, atomic writes."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import ScalarField


def fmt(v: float) -> str:
    """9 significant digits, locale independent."""
    return "%.9g" % v


def csv_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write(path, data) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kw = {} if mode == "wb" else {"encoding": "utf-8", "newline": ""}
        with os.fdopen(fd, mode, **kw) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def field_csv(fld: ScalarField) -> str:
    """``x,y,value`` rows, y-major from ``y_min`` upward, x fastest."""
    X, Y = fld.grid.centers()
    rows = zip(X.ravel(), Y.ravel(), fld.values.ravel())
    return csv_text(("x", "y", "value"), rows)


def field_pgm(fld: ScalarField) -> bytes:
    """16-bit binary PGM; finite values scaled min..max to 0..65535, others 0.

    The top image row is the highest ``y``.
    """
    v = fld.values[::-1]
    finite = np.isfinite(v)
    out = np.zeros(v.shape, dtype=">u2")
    if finite.any():
        lo, hi = float(v[finite].min()), float(v[finite].max())
        if hi > lo:
            scaled = np.rint((v[finite] - lo) / (hi - lo) * 65535.0)
        else:
            scaled = np.full(int(finite.sum()), 65535.0)
        out[finite] = scaled.astype(">u2")
    ny, nx = v.shape
    return f"P5\n{nx} {ny}\n65535\n".encode("ascii") + out.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a binary 16-bit PGM produced by :func:`field_pgm`."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, ny = (int(t) for t in parts[1].split())
    if int(parts[2]) != 65535:
        raise ValueError("expected 16-bit PGM")
    return np.frombuffer(parts[3], dtype=">u2").reshape(ny, nx)


def read_csv_columns(text: str) -> dict[str, list[str]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("empty CSV") from None
    cols: dict[str, list[str]] = {h: [] for h in header}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        for h, c in zip(header, row):
            cols[h].append(c.strip())
    return cols


def parse_float(s: str, what: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ValueError(f"{what}: not a number: {s!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{what}: not finite: {s!r}")
    return v
