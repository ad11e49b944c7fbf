"""Command-line interface.

Subcommands mirror the library layers: ``moments`` and ``scan`` evaluate
states analytically, ``simulate`` generates counting data, ``reconstruct``
inverts observations back into packs, ``classify`` probes rotational
invariance, and ``counts`` prints parameter-counting arithmetic.

Exit codes: 0 success, 2 usage, 3 malformed spec or data file, 4 state
validation failure, 5 rank-deficient reconstruction, 1 anything else.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .classify import classify3, isotropy_test
from .errors import (FileFormatError, PolarimetryError, RankDeficiencyError,
                     StateSpecError, StateValidationError)
from .experiment import DetectorConfig, EFFICIENCY_PRESETS, run_protocol
from .fock import build_state, state_digest
from .io import (detector_config_from_dict, dump_report, load_detector_config,
                 load_state_spec, parse_observations, write_counts,
                 write_observations, write_scan)
from .moments import (moment_tensors, multi_indices, scan_from_packs,
                      sphere_scan, uncertainty_bounds)
from .tomography import (CONDITION_WARNING, misalignment_fit,
                         named_direction_set, parameter_counts, reconstruct)

_EXIT_SCHEMA = 3
_EXIT_STATE = 4
_EXIT_RANK = 5


def _load_state(path: str):
    return build_state(load_state_spec(path))


def _manifold_arg(args) -> int | None:
    return getattr(args, "manifold", None)


def _pack_report(tensors) -> list[dict]:
    out = []
    for r in tensors.orders:
        out.append({
            "order": r,
            "indices": [list(idx) for idx in multi_indices(r)],
            "raw": tensors.raw[r],
            "central": tensors.central[r],
        })
    return out


def _covariance_report(cov) -> dict:
    return {
        "matrix": cov.matrix,
        "eigenvalues": cov.eigenvalues,
        "axes": cov.axes,
        "degenerate": cov.degenerate,
    }


def cmd_moments(args) -> int:
    state = _load_state(args.state)
    if not state.manifolds:
        print("vacuum has no polarization; all moments vanish")
    manifold = _manifold_arg(args)
    tensors = moment_tensors(state, args.max_order, manifold)
    report = {
        "state": state_digest(state),
        "label": tensors.label,
        "stokes_vector": tensors.mean,
        "packs": _pack_report(tensors),
    }
    if args.max_order >= 2:
        report["covariance"] = _covariance_report(tensors.covariance())
        report["uncertainty"] = vars(uncertainty_bounds(state, manifold))
    text = dump_report(report, args.out, timestamp=not args.no_timestamp)
    if args.out is None:
        print(text, end="")
    return 0


def cmd_scan(args) -> int:
    if (args.state is None) == (args.packs is None):
        raise StateSpecError("scan needs exactly one of --state or --packs")
    if args.state is not None:
        state = _load_state(args.state)
        if not state.manifolds:
            print("vacuum has no polarization; all moments vanish")
        scan = sphere_scan(state, args.order, args.grid, _manifold_arg(args))
        digest = state_digest(state)
    else:
        scan = _scan_from_report(args.packs, args.order, args.grid)
        digest = "reconstructed"
    write_scan(args.out, scan, state=digest, which=args.value,
               timestamp=not args.no_timestamp)
    print(f"wrote {len(scan.points)} directions to {args.out}")
    return 0


def _scan_from_report(path: str, order: int, grid: str):
    """Scan packs stored in a reconstruction report file."""
    import json

    try:
        with open(path) as fh:
            data = json.load(fh)
        packs = {p["order"]: p for p in data["packs"]}
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FileFormatError(f"{path}: not a reconstruction report ({exc})")
    if order not in packs:
        raise FileFormatError(f"{path}: no order-{order} pack")
    return scan_from_packs(packs[order]["raw"], packs[order]["central"],
                           order, grid)


def _detector_config(args) -> DetectorConfig:
    if args.config is not None:
        base = load_detector_config(args.config)
        # command-line acquisition settings override the file
        return DetectorConfig(
            channel_efficiencies=base.channel_efficiencies,
            class_efficiencies=base.class_efficiencies,
            splitter_halving=base.splitter_halving,
            trials=args.trials or base.trials,
            runs=args.runs or base.runs,
            seed=base.seed if args.seed is None else args.seed)
    data: dict = {}
    if args.preset is not None:
        data["preset"] = args.preset
    if args.efficiencies is not None:
        parts = [float(x) for x in args.efficiencies.split(",")]
        data["channel_efficiencies"] = parts
    config = detector_config_from_dict(data)
    config.trials = args.trials or config.trials
    config.runs = args.runs or config.runs
    config.seed = args.seed if args.seed is not None else config.seed
    return config


def cmd_simulate(args) -> int:
    state = _load_state(args.state)
    directions = named_direction_set(args.directions)
    config = _detector_config(args)
    result = run_protocol(state, directions, config, manifold=args.manifold,
                          max_order=args.max_order, exact=args.exact)
    digest = state_digest(state)
    manifold = args.manifold if args.manifold is not None else state.sole_manifold()
    write_observations(args.out_observations, result.observations, state=digest,
                       manifold=manifold, timestamp=not args.no_timestamp)
    print(f"wrote observations for {len(directions)} directions "
          f"to {args.out_observations}")
    if args.out_counts is not None:
        write_counts(args.out_counts, result.counts, state=digest, config=config,
                     timestamp=not args.no_timestamp)
        print(f"wrote counts to {args.out_counts}")
    return 0


def cmd_reconstruct(args) -> int:
    obs, meta = parse_observations(args.observations)
    result = reconstruct(obs, max_order=args.max_order)
    for r, cond in result.conditions.items():
        if cond > CONDITION_WARNING:
            print(f"warning: order {r} design condition {cond:.3g}", file=sys.stderr)
    report = {
        "directions": obs.directions.label,
        "orders": result.tensors.orders,
        "stokes_vector": result.tensors.mean,
        "packs": _pack_report(result.tensors),
        "residuals": {str(r): v for r, v in result.residuals.items()},
        "conditions": {str(r): v for r, v in result.conditions.items()},
        "pack_sizes": {str(r): v for r, v in result.pack_sizes.items()},
    }
    if result.raw_stderr is not None:
        report["raw_stderr"] = {str(r): v for r, v in result.raw_stderr.items()}
    if result.tensors.max_order >= 2:
        report["covariance"] = _covariance_report(result.covariance())
    if args.reference is not None:
        reference = _load_state(args.reference)
        ref_manifold = args.reference_manifold
        if ref_manifold is None and "manifold" in meta:
            ref_manifold = int(meta["manifold"])
        ref_tensors = moment_tensors(reference, min(2, result.tensors.max_order),
                                     ref_manifold)
        if result.tensors.max_order >= 2:
            fit = misalignment_fit(result, ref_tensors)
            report["misalignment"] = {
                "angle_degrees": fit.angle_degrees,
                "axis": fit.axis,
                "rotation": fit.rotation,
                "gamma_residual": fit.gamma_residual,
                "stokes_residual": fit.stokes_residual,
                "restricted": fit.restricted,
                "note": fit.note,
            }
    text = dump_report(report, args.out, timestamp=not args.no_timestamp)
    if args.out is None:
        print(text, end="")
    return 0


def cmd_classify(args) -> int:
    state = _load_state(args.state)
    report = isotropy_test(state, max_order=args.max_order, tol=args.tol,
                           manifold=_manifold_arg(args))
    payload = {
        "state": state_digest(state),
        "label": report.label,
        "tol": report.tol,
        "grid_points": report.grid_points,
        "stokes_norm": report.stokes_norm,
        "orders": report.orders,
        "invariant": {str(r): report.invariant[r] for r in report.orders},
        "raw_spread": {str(r): report.raw_spread[r] for r in report.orders},
        "central_spread": {str(r): report.central_spread[r] for r in report.orders},
        "central_mean": {str(r): report.central_mean[r] for r in report.orders},
    }
    if state.photon_numbers == [3] and state.weight(3) >= 1.0 - 1e-9 \
            and args.max_order >= 3:
        cls = classify3(state, tol=args.tol)
        payload["class"] = {"flags": list(cls.flags), "label": cls.label}
    text = dump_report(payload, args.out, timestamp=not args.no_timestamp)
    if args.out is None:
        print(text, end="")
    return 0


def cmd_counts(args) -> int:
    counts = parameter_counts(args.photons)
    report = {
        "photons": counts.photons,
        "per_order": counts.per_order,
        "cumulative": counts.cumulative,
        "all_manifolds": counts.all_manifolds,
        "state_parameters": counts.state_parameters,
    }
    text = dump_report(report, args.out, timestamp=not args.no_timestamp)
    if args.out is None:
        print(text, end="")
    return 0


def _add_common(sub, state: bool = True) -> None:
    if state:
        sub.add_argument("--state", required=True,
                         help="path to a state-spec JSON file")
    sub.add_argument("--out", default=None, help="output file (default stdout)")
    sub.add_argument("--no-timestamp", action="store_true",
                     help="omit the generated-at header for reproducible files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarmoments",
        description="Polarization moment structure of few-photon light, "
                    "manifold by manifold.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("moments", help="evaluate moment packs of a state")
    _add_common(p)
    p.add_argument("--manifold", type=int, default=None,
                   help="condition on one photon-number manifold "
                        "(default: excitation-averaged)")
    p.add_argument("--max-order", type=int, default=2)
    p.set_defaults(func=cmd_moments)

    p = subs.add_parser("scan", help="tabulate moments over a direction grid")
    p.add_argument("--state", default=None, help="path to a state-spec JSON file")
    p.add_argument("--packs", default=None,
                   help="reconstruction report JSON to scan instead of a state")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--grid", default="icosphere:3",
                   help="icosphere:L, latlong:TxP or cut:PLANE:K")
    p.add_argument("--value", choices=("radii", "central", "raw"), default="radii")
    p.add_argument("--manifold", type=int, default=None)
    p.add_argument("--out", required=True, help="scan file to write")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the generated-at header for reproducible files")
    p.set_defaults(func=cmd_scan)

    p = subs.add_parser("simulate", help="simulate the counting protocol")
    _add_common(p)
    p.add_argument("--directions", default="canonical-2",
                   help="named direction set (canonical-2, canonical-3, "
                        "canonical-3-nested)")
    p.add_argument("--config", default=None, help="detector config JSON")
    p.add_argument("--preset", choices=sorted(EFFICIENCY_PRESETS), default=None)
    p.add_argument("--efficiencies", default=None,
                   help="four channel efficiencies, comma separated")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--manifold", type=int, default=None)
    p.add_argument("--max-order", type=int, default=2)
    p.add_argument("--exact", action="store_true",
                   help="expected counts instead of sampling")
    p.add_argument("--out-observations", required=True)
    p.add_argument("--out-counts", default=None)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("reconstruct", help="solve packs from observations")
    p.add_argument("--observations", required=True)
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--reference", default=None,
                   help="state spec to compare against (misalignment fit)")
    p.add_argument("--reference-manifold", type=int, default=None)
    _add_common(p, state=False)
    p.set_defaults(func=cmd_reconstruct)

    p = subs.add_parser("classify", help="probe rotational invariance")
    _add_common(p)
    p.add_argument("--manifold", type=int, default=None)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_classify)

    p = subs.add_parser("counts", help="parameter-counting arithmetic")
    p.add_argument("--photons", type=int, required=True)
    _add_common(p, state=False)
    p.set_defaults(func=cmd_counts)
    return parser


def main(argv=None) -> int:
    np.set_printoptions(precision=12)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StateSpecError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_SCHEMA
    except StateValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_STATE
    except RankDeficiencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_RANK
    except (PolarimetryError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
