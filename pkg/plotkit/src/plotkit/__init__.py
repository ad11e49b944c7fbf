"""Offline rendering of polarization scan files.

Reads the text files the `polarmoments` CLI writes (sphere scans,
great-circle cuts, observations, counts) and draws the standard
figures: radial surfaces over the Poincare sphere and polar cut
overlays with the solid / dashed / dotted convention.
"""

__version__ = "1.0.0"

from .parser import (CountsFile, ObservationsFile, ParserError, ScanFile,
                     expected_grid_points, in_plane_angles, parse_counts_file,
                     parse_observations_file, parse_scan_file)
from .render import (CutRender, CutSeries, SurfaceRender, render_cut,
                     render_surface, resample, rotation_from_report)

__all__ = [
    "CountsFile", "CutRender", "CutSeries", "ObservationsFile",
    "ParserError", "ScanFile", "SurfaceRender", "expected_grid_points",
    "in_plane_angles", "parse_counts_file", "parse_observations_file",
    "parse_scan_file", "render_cut", "render_surface", "resample",
    "rotation_from_report",
]
