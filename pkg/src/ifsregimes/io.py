"""Plain-text file formats.

Every float is written with 17 significant digits so a write/read round
trip reproduces the value exactly.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .geometry import PointCloud


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return "none"
    return str(v)


def _lines(path) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{p}: no such file")
    return p.read_text().splitlines()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_series_csv(path) -> np.ndarray:
    """One real per line; a non-numeric first line is taken as a header."""
    lines = _lines(path)
    start = 1 if lines and not _is_number(lines[0].strip()) else 0
    out = []
    for n, line in enumerate(lines[start:], start=start + 1):
        text = line.strip()
        if not text:
            continue
        try:
            out.append(float(text))
        except ValueError:
            raise InputError(f"{path}: line {n}: not a number: {text!r}") from None
    if not out:
        raise InputError(f"{path}: no values")
    arr = np.asarray(out)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: non-finite value")
    return arr


def _parse_rows(path, width: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``t,v1,...`` in any order; ``t`` must cover ``0..n-1`` exactly once."""
    lines = _lines(path)
    start = 1 if lines and not _is_number(lines[0].split(",")[0].strip()) else 0
    ts, rows = [], []
    for n, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        try:
            t = int(cells[0])
            vals = [float(c) for c in cells[1:]]
        except ValueError:
            raise InputError(f"{path}: line {n}: malformed row {line!r}") from None
        if not vals or (width is not None and len(vals) != width) or (rows and len(vals) != len(rows[0])):
            raise InputError(f"{path}: line {n}: wrong number of columns")
        ts.append(t)
        rows.append(vals)
    if not ts:
        raise InputError(f"{path}: no rows")
    ts = np.asarray(ts, dtype=np.int64)
    order = np.argsort(ts, kind="stable")
    ts, data = ts[order], np.asarray(rows)[order]
    dup = np.flatnonzero(np.diff(ts) == 0)
    if dup.size:
        raise InputError(f"{path}: duplicate t={int(ts[dup[0]])}")
    expect = np.arange(ts.size)
    if ts[0] != 0 or np.any(ts != expect):
        missing = int(expect[np.argmax(ts != expect)])
        raise InputError(f"{path}: gap in t, missing t={missing}")
    return ts, data


def parse_cloud_csv(path) -> PointCloud:
    _, data = _parse_rows(path)
    return PointCloud(data)


def parse_indexed_ints(path) -> np.ndarray:
    """Two-column ``t,value`` integer file (truth or labels)."""
    _, data = _parse_rows(path, width=1)
    vals = data[:, 0]
    if np.any(vals != np.round(vals)):
        raise InputError(f"{path}: non-integer value")
    return vals.astype(np.int64)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_series(path, series: Sequence[float]) -> None:
    with open(path, "w") as fh:
        for v in series:
            fh.write(fmt(float(v)) + "\n")


def write_cloud(path, cloud: PointCloud, names: Sequence[str] | None = None) -> None:
    d = cloud.dim
    names = list(names) if names is not None else [f"c{i + 1}" for i in range(d)]
    write_rows(path, ["t", *names], ([t, *row] for t, row in enumerate(cloud.points.tolist())))


def write_indexed(path, name: str, values: Sequence) -> None:
    write_rows(path, ["t", name], enumerate(values))


def write_histogram(path, edges: np.ndarray, counts: np.ndarray) -> None:
    write_rows(path, ["bin_left", "bin_right", "count"], zip(edges[:-1], edges[1:], counts))


def write_keyvalues(path, items: Mapping[str, object]) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={fmt(v)}\n")


def read_keyvalues(path) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for n, line in enumerate(_lines(path), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise InputError(f"{path}: line {n}: expected key=value")
        k, v = text.split("=", 1)
        out[k.strip()] = v.strip()
    return out
