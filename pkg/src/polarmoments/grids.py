"""Direction grids on the unit sphere.

Scans and isotropy checks need reproducible, reasonably uniform point
sets.  Three families are provided: subdivided icosahedra (quasi-uniform),
latitude/longitude products, and great-circle cuts through a coordinate
plane.  All functions return ``(k, 3)`` arrays of unit vectors in a
deterministic order.
"""

import math
from functools import lru_cache

import numpy as np

from .errors import FileFormatError
from .stokes import Direction

# vertex counts per subdivision level: 10 * 4**level + 2
_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _icosahedron() -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    g = _GOLDEN
    verts = np.array([
        (-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0),
        (0, -1, g), (0, 1, g), (0, -1, -g), (0, 1, -g),
        (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1),
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return verts, faces


@lru_cache(maxsize=None)
def icosphere(level: int) -> np.ndarray:
    """Vertices of a level-``level`` subdivided icosahedron.

    Level 0 is the icosahedron itself (12 points); each level quadruples
    the faces, giving ``10 * 4**level + 2`` vertices.  Points are sorted
    lexicographically for reproducibility and returned read-only.
    """
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    verts, faces = _icosahedron()
    verts = [tuple(v) for v in verts]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.array(verts[i]) + np.array(verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pts = np.array(verts)
    order = np.lexsort(np.round(pts, 12).T[::-1])
    pts = pts[order]
    pts.setflags(write=False)
    return pts


def icosphere_level_for(min_points: int) -> int:
    """Smallest subdivision level with at least ``min_points`` vertices."""
    level = 0
    while 10 * 4 ** level + 2 < min_points:
        level += 1
    return level


def latlong(n_theta: int, n_phi: int) -> np.ndarray:
    """Latitude/longitude product grid with poles included once."""
    if n_theta < 2 or n_phi < 1:
        raise ValueError("need at least 2 latitudes and 1 longitude")
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    rows = [np.array([0.0, 0.0, 1.0])]
    for t in thetas[1:-1]:
        st, ct = math.sin(t), math.cos(t)
        rows.extend(np.array([st * math.cos(p), st * math.sin(p), ct]) for p in phis)
    rows.append(np.array([0.0, 0.0, -1.0]))
    return np.array(rows)


def great_circle_cut(plane: str, n_points: int) -> np.ndarray:
    """Evenly spaced directions around a coordinate great circle.

    ``plane`` names the two axes spanning the circle: ``"12"``, ``"13"``
    or ``"23"``.  The first named axis is at parameter zero.
    """
    if plane not in ("12", "13", "23"):
        raise FileFormatError(f"unknown cut plane {plane!r}; use 12, 13 or 23")
    if n_points < 4:
        raise ValueError("a cut needs at least 4 points")
    i, j = int(plane[0]) - 1, int(plane[1]) - 1
    t = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    pts = np.zeros((n_points, 3))
    pts[:, i] = np.cos(t)
    pts[:, j] = np.sin(t)
    return pts


def nearest_neighbor_gap(points: np.ndarray) -> float:
    """Largest angular distance from any point to its nearest neighbor."""
    dots = np.clip(points @ points.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    return float(np.arccos(dots.max(axis=1)).max())


def to_directions(points: np.ndarray) -> list[Direction]:
    return [Direction.from_vector(p) for p in np.asarray(points, dtype=float)]


def parse_grid(label: str) -> np.ndarray:
    """Grid from a compact label.

    ``icosphere:L``, ``latlong:TxP`` and ``cut:PLANE:K`` are accepted,
    e.g. ``icosphere:3``, ``latlong:24x48``, ``cut:13:360``.
    """
    parts = label.split(":")
    try:
        if parts[0] == "icosphere" and len(parts) == 2:
            return icosphere(int(parts[1]))
        if parts[0] == "latlong" and len(parts) == 2:
            nt, np_ = parts[1].split("x")
            return latlong(int(nt), int(np_))
        if parts[0] == "cut" and len(parts) == 3:
            return great_circle_cut(parts[1], int(parts[2]))
    except (ValueError, IndexError) as exc:
        raise FileFormatError(f"bad grid label {label!r}: {exc}") from exc
    raise FileFormatError(f"unknown grid label {label!r}")
