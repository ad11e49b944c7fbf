"""Readers for the text files the polarmoments CLI emits.

The formats are a stable contract: a tag line ``# <name> v1``, header
lines ``# key: value``, then whitespace-separated numeric columns.
This module re-implements the reader side independently so rendering
has no import-level coupling to the producer.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCAN_TAG = "polarization-scan"
OBSERVATIONS_TAG = "polarization-observations"
COUNTS_TAG = "polarization-counts"


class ParserError(ValueError):
    """Raised for files that do not follow the emitted schema."""


def _read_tagged(path, expected_tag):
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ParserError(f"{path}: missing tag line")
    tag = lines[0][2:].strip()
    m = re.fullmatch(r"(\S+) v(\d+)", tag)
    if m is None or m.group(1) != expected_tag:
        raise ParserError(f"{path}: expected '# {expected_tag} v1', got {tag!r}")
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParserError(f"{path}:{lineno}: {exc}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParserError(f"{path}:{lineno}: expected {width} columns, "
                              f"got {len(row)}")
        rows.append(row)
    if not rows:
        raise ParserError(f"{path}: no data rows")
    return meta, np.array(rows)


def expected_grid_points(grid: str) -> int | None:
    """Row count implied by a grid label; None when not derivable."""
    kind, _, rest = grid.partition(":")
    try:
        if kind == "icosphere":
            return 10 * 4 ** int(rest) + 2
        if kind == "latlong":
            t, p = rest.split("x")
            return (int(t) - 2) * int(p) + 2
        if kind == "cut":
            return int(rest.split(":")[1])
        if kind == "custom":
            return int(rest)
    except (ValueError, IndexError):
        return None
    return None


@dataclass
class ScanFile:
    """One scan or cut: directions on the sphere and a value per row."""

    state: str
    label: str
    order: int
    grid: str
    kind: str
    points: np.ndarray   # (rows, 3) unit vectors
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def thetas(self) -> np.ndarray:
        return np.arccos(np.clip(self.points[:, 2], -1.0, 1.0))

    @property
    def phis(self) -> np.ndarray:
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    @property
    def is_cut(self) -> bool:
        return self.grid.startswith("cut:")

    @property
    def cut_plane(self) -> str | None:
        return self.grid.split(":")[1] if self.is_cut else None


def parse_scan_file(path) -> ScanFile:
    meta, data = _read_tagged(path, SCAN_TAG)
    if data.shape[1] != 6:
        raise ParserError(f"{path}: scans carry 6 columns "
                          f"(theta phi n1 n2 n3 value), got {data.shape[1]}")
    if not np.isfinite(data).all():
        raise ParserError(f"{path}: non-finite entries")
    points = data[:, 2:5]
    norms = np.linalg.norm(points, axis=1)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ParserError(f"{path}: direction rows are not unit vectors")
    grid = meta.get("grid", f"custom:{len(data)}")
    want = expected_grid_points(grid)
    if want is not None and want != len(data):
        raise ParserError(f"{path}: grid {grid!r} implies {want} rows, "
                          f"file has {len(data)}")
    try:
        order = int(meta["order"])
    except (KeyError, ValueError):
        raise ParserError(f"{path}: missing or bad 'order' header")
    return ScanFile(state=meta.get("state", ""), label=meta.get("label", ""),
                    order=order, grid=grid, kind=meta.get("kind", "radii"),
                    points=points, values=data[:, 5], meta=meta)


@dataclass
class ObservationsFile:
    """Measured moments: per-direction values (and errors) by order."""

    state: str
    directions: np.ndarray          # (k, 2) theta, phi
    values: dict                    # order -> (k,) array
    stderr: dict | None
    meta: dict = field(default_factory=dict)


def parse_observations_file(path) -> ObservationsFile:
    meta, data = _read_tagged(path, OBSERVATIONS_TAG)
    if data.shape[1] != 5:
        raise ParserError(f"{path}: observations carry 5 columns "
                          f"(theta phi order value stderr)")
    dir_index: dict[tuple, int] = {}
    for th, ph in data[:, :2]:
        dir_index.setdefault((th, ph), len(dir_index))
    k = len(dir_index)
    orders = sorted(set(int(o) for o in data[:, 2]))
    values = {r: np.full(k, np.nan) for r in orders}
    stderr = {r: np.full(k, np.nan) for r in orders}
    for th, ph, o, v, e in data:
        values[int(o)][dir_index[(th, ph)]] = v
        stderr[int(o)][dir_index[(th, ph)]] = e
    for r in orders:
        if not np.isfinite(values[r]).all():
            raise ParserError(f"{path}: order {r} misses some directions")
    have_err = all(np.isfinite(stderr[r]).all() for r in orders)
    return ObservationsFile(state=meta.get("state", ""),
                            directions=np.array(list(dir_index)),
                            values=values,
                            stderr=stderr if have_err else None, meta=meta)


@dataclass
class CountsFile:
    """Raw and calibrated counting records."""

    state: str
    rows: np.ndarray   # run theta phi photons k raw calibrated
    meta: dict = field(default_factory=dict)

    @property
    def runs(self) -> np.ndarray:
        return np.unique(self.rows[:, 0].astype(int))


def parse_counts_file(path) -> CountsFile:
    meta, data = _read_tagged(path, COUNTS_TAG)
    if data.shape[1] != 7:
        raise ParserError(f"{path}: counts carry 7 columns "
                          f"(run theta phi photons k raw calibrated)")
    if not np.isfinite(data[:, :6]).all():   # calibrated may be nan
        raise ParserError(f"{path}: non-finite entries")
    if (data[:, 5] < 0).any():
        raise ParserError(f"{path}: negative raw counts")
    return CountsFile(state=meta.get("state", ""), rows=data, meta=meta)


def in_plane_angles(points: np.ndarray, plane: str) -> np.ndarray:
    """Angle of each direction within a coordinate plane, from its
    first axis toward its second."""
    if plane not in ("12", "13", "23"):
        raise ParserError(f"unknown plane {plane!r}; use 12, 13 or 23")
    i, j = int(plane[0]) - 1, int(plane[1]) - 1
    return np.mod(np.arctan2(points[:, j], points[:, i]), 2.0 * math.pi)
