"""Reading and writing grids, sample batches, JSON reports and figure data.

Grid files are plain CSV with one lattice row per line and 1-based color
labels, optionally preceded by a metadata line::

    # potts-grid width=30 height=30 K=4 boundary=periodic
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import DegenerateDataError
from .lattice import BOUNDARIES, PERIODIC, Grid

PathLike = Union[str, os.PathLike]

_HEADER_RE = re.compile(r"^#\s*potts-grid\b(.*)$")


# --- grids ------------------------------------------------------------------


def format_grid(grid: Grid, header: bool = True) -> str:
    lines = []
    if header:
        lines.append(f"# potts-grid width={grid.width} height={grid.height} "
                     f"K={grid.num_colors} boundary={grid.boundary}")
    for row in grid.labels:
        lines.append(",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict:
    m = _HEADER_RE.match(line.strip())
    if m is None:
        raise ValueError(f"unrecognized comment line: {line.strip()!r}")
    meta = {}
    for token in m.group(1).split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"malformed header field {token!r}")
        meta[key] = value
    unknown = set(meta) - {"width", "height", "K", "boundary"}
    if unknown:
        raise ValueError(f"unknown header fields: {sorted(unknown)}")
    return meta


def parse_grid(text: str, *, num_colors: Optional[int] = None,
               boundary: Optional[str] = None) -> Grid:
    """Parse grid-CSV text.

    Without a header the shape comes from the rows, ``K`` from the largest
    label and the boundary defaults to periodic.  Explicit arguments
    override the header.
    """
    meta = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            if rows or meta:
                raise ValueError(f"line {lineno}: header must be the first line")
            meta = _parse_header(line)
            continue
        try:
            rows.append([int(v) for v in line.split(",")])
        except ValueError:
            raise ValueError(f"line {lineno}: expected comma-separated integers") from None
    if not rows:
        raise ValueError("grid file has no rows")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("grid rows have different lengths")
    labels = np.array(rows, dtype=np.int64)
    if "width" in meta and int(meta["width"]) != labels.shape[1]:
        raise ValueError(f"header width={meta['width']} but rows have {labels.shape[1]} values")
    if "height" in meta and int(meta["height"]) != labels.shape[0]:
        raise ValueError(f"header height={meta['height']} but file has {labels.shape[0]} rows")
    if num_colors is None and "K" in meta:
        num_colors = int(meta["K"])
    if num_colors is None and labels.max() < 2:
        raise DegenerateDataError("grid uses a single color; pass the number of colors explicitly")
    if boundary is None:
        boundary = meta.get("boundary", PERIODIC)
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    return Grid.from_labels(labels, num_colors, boundary)


def read_grid(path: PathLike, **kwargs) -> Grid:
    return parse_grid(Path(path).read_text(), **kwargs)


def write_grid(path: PathLike, grid: Grid, header: bool = True) -> Path:
    path = Path(path)
    path.write_text(format_grid(grid, header))
    return path


# --- sample batches ---------------------------------------------------------


def write_batch_csv(path: PathLike, batch) -> Path:
    """One row per draw: ``draw,t_1..t_K,s`` with draws numbered from 1."""
    path = Path(path)
    k = batch.num_colors
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["draw", *[f"t_{i + 1}" for i in range(k)], "s"])
        for i, (t, s) in enumerate(zip(batch.t, batch.s), 1):
            w.writerow([i, *map(int, t), int(s)])
    return path


def read_batch_csv(path: PathLike):
    """Return ``(t, s)`` integer arrays from a batch CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return data[:, 1:-1], data[:, -1]


def write_grid_dumps(directory: PathLike, batch, prefix: str = "grid") -> list:
    """Write every stored draw as ``<prefix>_0001.csv`` and so on."""
    if batch.grids is None:
        raise ValueError("batch was drawn with keep_grids=False")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(batch))))
    return [write_grid(directory / f"{prefix}_{i + 1:0{width}d}.csv", batch.grid(i))
            for i in range(len(batch))]


# --- JSON -------------------------------------------------------------------


def to_jsonable(obj):
    """Convert numpy values and non-finite floats (to ``None``) recursively."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path: PathLike):
    return json.loads(Path(path).read_text())


# --- figure data --------------------------------------------------------------


def count_rows(batch, beta: Optional[float] = None) -> Iterable[tuple]:
    """Tidy rows ``(beta, draw, color, count)`` for per-color boxplots."""
    beta = batch.params.beta if beta is None else beta
    for i, t in enumerate(batch.t, 1):
        for k, v in enumerate(t, 1):
            yield beta, i, k, int(v)


def write_counts_csv(path: PathLike, batches) -> Path:
    """Stack one or more batches (e.g. a sweep over beta) into a tidy table."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["beta", "draw", "color", "count"])
        for batch in batches:
            w.writerows(count_rows(batch))
    return path


def histogram_rows(t: np.ndarray, num_cells: int, bins: int = 30) -> list:
    """Rows ``(color, bin_left, bin_right, count)`` on common bins over ``[0, M]``."""
    t = np.asarray(t)
    edges = np.linspace(0, num_cells, bins + 1)
    rows = []
    for k in range(t.shape[1]):
        counts, _ = np.histogram(t[:, k], bins=edges)
        rows.extend((k + 1, float(lo), float(hi), int(c))
                    for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    return rows


def write_histogram_csv(path: PathLike, batch, bins: int = 30) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["color", "bin_left", "bin_right", "count"])
        w.writerows(histogram_rows(batch.t, batch.width * batch.height, bins))
    return path
