"""Figure builders: radial sphere surfaces and planar cut overlays.

Both renderers return the arrays they plotted so tests can check the
numbers rather than pixels. Styles follow the solid / dashed / dotted
convention (theory, measured, aligned) unless overridden.

Cuts through grids that do not contain the requested plane are
resampled by great-circle nearest-neighbor interpolation with a linear
blend of the two closest grid directions; exact at grid points. That
scheme is a presentation choice, not a physics statement.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .parser import ParserError, ScanFile, in_plane_angles, parse_scan_file

DEFAULT_STYLES = ("solid", "dashed", "dotted", "dashdot")

_PLANE_AXES = {"12": ("S1", "S2"), "13": ("S1", "S3"), "23": ("S2", "S3")}


def _as_scan(source) -> ScanFile:
    if isinstance(source, ScanFile):
        return source
    return parse_scan_file(source)


def resample(points: np.ndarray, values: np.ndarray,
             targets: np.ndarray) -> np.ndarray:
    """Blend the two nearest grid values for each target direction.

    Weights are linear in angular distance, so a target sitting on a
    grid point reproduces its value exactly.
    """
    dots = np.clip(targets @ points.T, -1.0, 1.0)
    angles = np.arccos(dots)
    idx = np.argsort(angles, axis=1)[:, :2]
    rows = np.arange(len(targets))[:, None]
    d = angles[rows, idx]
    near, far = d[:, 0], d[:, 1]
    total = near + far
    w_near = np.where(total > 1e-12, far / np.where(total > 0, total, 1.0), 1.0)
    v = values[idx]
    return w_near * v[:, 0] + (1.0 - w_near) * v[:, 1]


@dataclass
class SurfaceRender:
    """Mesh actually handed to the 3D plotter."""

    thetas: np.ndarray   # (t,)
    phis: np.ndarray     # (p,)
    radii: np.ndarray    # (t, p)
    signed: np.ndarray   # same mesh before the absolute value
    out: str


def _structured_mesh(scan: ScanFile, mesh: tuple[int, int]):
    """Rebuild a latlong grid exactly; resample anything else."""
    grid = scan.grid
    if grid.startswith("latlong:"):
        t_count, p_count = (int(x) for x in grid.split(":")[1].split("x"))
        thetas = np.linspace(0.0, math.pi, t_count)
        phis = np.linspace(0.0, 2.0 * math.pi, p_count, endpoint=False)
        values = np.empty((t_count, p_count))
        values[0] = scan.values[0]
        values[-1] = scan.values[-1]
        body = scan.values[1:-1].reshape(t_count - 2, p_count)
        values[1:-1] = body
        return thetas, phis, values
    t_count, p_count = mesh
    thetas = np.linspace(0.0, math.pi, t_count)
    phis = np.linspace(0.0, 2.0 * math.pi, p_count, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    targets = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp),
                        np.cos(tt)], axis=-1).reshape(-1, 3)
    values = resample(scan.points, scan.values, targets)
    return thetas, phis, values.reshape(t_count, p_count)


def render_surface(source, out, signed: bool = False,
                   mesh: tuple[int, int] = (61, 120), cmap: str = "viridis",
                   title: str | None = None) -> SurfaceRender:
    """Radial surface r(theta, phi) = value (|value| unless ``signed``)."""
    scan = _as_scan(source)
    if scan.is_cut:
        raise ParserError("cut files are one-dimensional; use render_cut")
    thetas, phis, raw_mesh = _structured_mesh(scan, mesh)
    radii = raw_mesh if signed else np.abs(raw_mesh)

    # close the seam for drawing only
    phis_c = np.concatenate([phis, phis[:1] + 2.0 * math.pi])
    r_c = np.concatenate([radii, radii[:, :1]], axis=1)
    tt, pp = np.meshgrid(thetas, phis_c, indexing="ij")
    x = r_c * np.sin(tt) * np.cos(pp)
    y = r_c * np.sin(tt) * np.sin(pp)
    z = r_c * np.cos(tt)

    fig = plt.figure(figsize=(6.0, 5.4))
    ax = fig.add_subplot(projection="3d")
    span = max(r_c.max(), 1e-12)
    ax.plot_surface(x, y, z, rstride=1, cstride=1,
                    facecolors=plt.get_cmap(cmap)(r_c / span),
                    linewidth=0.0, antialiased=False, shade=False)
    ax.set_xlabel("S1")
    ax.set_ylabel("S2")
    ax.set_zlabel("S3")
    lim = 1.05 * span
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_zlim(-lim, lim)
    ax.set_box_aspect((1, 1, 1))
    ax.set_title(title if title is not None
                 else f"order {scan.order} {scan.kind} ({scan.label})")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return SurfaceRender(thetas=thetas, phis=phis, radii=radii,
                         signed=raw_mesh, out=str(out))


@dataclass
class CutSeries:
    """One curve of a cut figure.

    ``rotation`` (a 3x3 matrix, e.g. the misalignment fit from a
    reconstruction report) resamples the series at rotated directions,
    drawing the curve as it would look after aligning frames.
    """

    source: object                 # path or ScanFile
    label: str | None = None
    style: str | None = None
    rotation: np.ndarray | None = None


@dataclass
class CutRender:
    angles: np.ndarray
    series: list = field(default_factory=list)   # (label, style, values)
    out: str = ""


def render_cut(sources, plane: str, out, n_points: int | None = None,
               title: str | None = None) -> CutRender:
    """Polar overlay of one or more scans in a coordinate plane.

    ``sources`` is a sequence of :class:`CutSeries` (bare paths or
    parsed scans are promoted). Styles default to solid, dashed,
    dotted in order.
    """
    if plane not in _PLANE_AXES:
        raise ParserError(f"unknown plane {plane!r}; use 12, 13 or 23")
    series = [s if isinstance(s, CutSeries) else CutSeries(s) for s in sources]
    if not series:
        raise ParserError("render_cut needs at least one scan")
    scans = [_as_scan(s.source) for s in series]

    if n_points is None:
        native = [len(sc.points) for sc in scans
                  if sc.is_cut and sc.cut_plane == plane]
        n_points = max(native) if native else 180
    t = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    i, j = int(plane[0]) - 1, int(plane[1]) - 1
    targets = np.zeros((n_points, 3))
    targets[:, i] = np.cos(t)
    targets[:, j] = np.sin(t)

    fig = plt.figure(figsize=(5.6, 5.6))
    ax = fig.add_subplot(projection="polar")
    rendered = CutRender(angles=t.copy(), out=str(out))
    for k, (spec, scan) in enumerate(zip(series, scans)):
        where = targets
        if spec.rotation is not None:
            rot = np.asarray(spec.rotation, dtype=float)
            if rot.shape != (3, 3):
                raise ParserError("rotation must be a 3x3 matrix")
            # value plotted at n is the source value at R^T n
            where = targets @ rot
        if scan.is_cut and scan.cut_plane == plane and spec.rotation is None \
                and len(scan.points) == n_points:
            values = scan.values.copy()
        else:
            values = resample(scan.points, scan.values, where)
        style = spec.style or DEFAULT_STYLES[k % len(DEFAULT_STYLES)]
        label = spec.label or scan.label or f"series {k}"
        ax.plot(np.concatenate([t, t[:1]]),
                np.concatenate([np.abs(values), np.abs(values[:1])]),
                linestyle=style, label=label)
        rendered.series.append((label, style, values))
    a1, a2 = _PLANE_AXES[plane]
    ax.set_xticks([0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
    ax.set_xticklabels([f"+{a1}", f"+{a2}", f"-{a1}", f"-{a2}"])
    ax.set_title(title if title is not None
                 else f"order {scans[0].order} {scans[0].kind}, plane {plane}")
    ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1), fontsize=8)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return rendered


def rotation_from_report(path) -> np.ndarray:
    """Pull the misalignment rotation out of a reconstruction report."""
    import json

    try:
        with open(path) as fh:
            data = json.load(fh)
        rot = np.asarray(data["misalignment"]["rotation"], dtype=float)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParserError(f"{path}: no misalignment rotation ({exc})")
    if rot.shape != (3, 3):
        raise ParserError(f"{path}: rotation is not 3x3")
    return rot
