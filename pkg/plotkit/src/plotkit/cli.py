"""Standalone rendering scripts.

plotkit-surface scan.txt --out surface.png
plotkit-cut theory.txt measured.txt --plane 13 --out cut.png \
    --labels theory,measured --aligned measured=rec.json

Exit codes: 0 success, 2 usage, 3 malformed input file, 1 anything else.
"""

import argparse
import sys

from .parser import ParserError
from .render import CutSeries, render_cut, render_surface, rotation_from_report


def main_surface(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit-surface",
        description="Render a scan file as a radial surface over the sphere.")
    parser.add_argument("scan", help="scan file from the moments CLI")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--signed", action="store_true",
                        help="keep the sign of the values (default |value|)")
    parser.add_argument("--mesh", default="61x120",
                        help="resampling mesh as THETAxPHI (ignored for "
                             "latlong scans, which render exactly)")
    parser.add_argument("--cmap", default="viridis")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        t, p = (int(x) for x in args.mesh.split("x"))
        out = render_surface(args.scan, args.out, signed=args.signed,
                             mesh=(t, p), cmap=args.cmap, title=args.title)
    except ParserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out.out} ({out.radii.shape[0]}x{out.radii.shape[1]} mesh)")
    return 0


def _parse_aligned(specs, scans):
    """--aligned NAME=REPORT entries -> {scan index: rotation}."""
    rotations = {}
    for spec in specs or ():
        name, _, report = spec.partition("=")
        if not report:
            raise ParserError(f"--aligned wants NAME=REPORT, got {spec!r}")
        matches = [k for k, s in enumerate(scans) if name in s]
        if len(matches) != 1:
            raise ParserError(f"--aligned {name!r} matches {len(matches)} "
                              f"scans, need exactly 1")
        rotations[matches[0]] = rotation_from_report(report)
    return rotations


def main_cut(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit-cut",
        description="Overlay one or more scans in a coordinate plane.")
    parser.add_argument("scans", nargs="+", help="scan/cut files to overlay")
    parser.add_argument("--plane", required=True, choices=("12", "13", "23"))
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--labels", default=None, help="comma separated")
    parser.add_argument("--styles", default=None,
                        help="comma separated (solid, dashed, dotted, ...)")
    parser.add_argument("--aligned", action="append", metavar="NAME=REPORT",
                        help="redraw the scan whose path contains NAME after "
                             "applying the misalignment rotation stored in "
                             "REPORT (adds a dotted aligned curve)")
    parser.add_argument("--points", type=int, default=None,
                        help="curve sample count (default: native)")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    labels = args.labels.split(",") if args.labels else []
    styles = args.styles.split(",") if args.styles else []
    try:
        series = [CutSeries(path,
                            label=labels[k] if k < len(labels) else None,
                            style=styles[k] if k < len(styles) else None)
                  for k, path in enumerate(args.scans)]
        for idx, rot in _parse_aligned(args.aligned, args.scans).items():
            base = series[idx]
            series.append(CutSeries(base.source, rotation=rot,
                                    style="dotted",
                                    label=f"{base.label or 'series'} (aligned)"))
        out = render_cut(series, args.plane, args.out,
                         n_points=args.points, title=args.title)
    except ParserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out.out} ({len(out.series)} curves, "
          f"{len(out.angles)} points)")
    return 0


if __name__ == "__main__":
    sys.exit(main_surface())
