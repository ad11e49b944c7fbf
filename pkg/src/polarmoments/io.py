"""Readers and writers for the package's on-disk formats.

All tabular files are whitespace-delimited text with ``#``-prefixed
header lines: a format tag (``# polarization-<what> v1``), ``key: value``
metadata, a ``columns:`` line, then data rows at 12 significant digits.
Reports are JSON with the same numeric precision.  Every writer has a
parser that round-trips what the writer emits.
"""

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import FileFormatError
from .experiment import CountsRecord, DetectorConfig, EFFICIENCY_PRESETS
from .moments import SphereScan
from .stokes import Direction
from .tomography import DirectionSet, MomentObservations

_FMT = "%.12g"


def _fmt(x: float) -> str:
    return _FMT % float(x)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _header_lines(tag: str, meta: dict, columns: str, timestamp: bool) -> list[str]:
    lines = [f"# {tag} v1"]
    lines += [f"# {k}: {v}" for k, v in meta.items()]
    if timestamp:
        lines.append(f"# generated: {_now()}")
    lines.append(f"# columns: {columns}")
    return lines


def _parse_tagged(path: str, expected_tag: str) -> tuple[dict, list[list[str]]]:
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    tag_seen = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if not tag_seen:
                    if body != f"{expected_tag} v1":
                        raise FileFormatError(
                            f"{path}:{lineno}: expected '{expected_tag} v1', got {body!r}")
                    tag_seen = True
                elif ":" in body:
                    key, _, value = body.partition(":")
                    meta[key.strip()] = value.strip()
                continue
            if not tag_seen:
                raise FileFormatError(f"{path}:1: missing format tag line")
            rows.append(line.split())
    if not tag_seen:
        raise FileFormatError(f"{path}: empty file")
    return meta, rows


def _floats(row: list[str], n: int, path: str) -> list[float]:
    if len(row) != n:
        raise FileFormatError(f"{path}: expected {n} columns, got {len(row)}")
    try:
        return [float(x) for x in row]
    except ValueError as exc:
        raise FileFormatError(f"{path}: non-numeric entry ({exc})") from exc


# ---------------------------------------------------------------------------
# sphere scans

@dataclass
class ParsedScan:
    order: int
    kind: str
    points: np.ndarray
    values: np.ndarray
    label: str
    grid: str
    state: str
    meta: dict


def write_scan(path: str, scan: SphereScan, state: str = "",
               which: str = "radii", timestamp: bool = True) -> None:
    """Write one value column per direction.

    ``which`` selects ``radii`` (absolute central values at odd orders),
    ``central`` (signed) or ``raw``.
    """
    values = {"radii": scan.radii, "central": scan.central, "raw": scan.raw}
    if which not in values:
        raise ValueError(f"unknown value column {which!r}")
    meta = {"state": state or "unspecified", "label": scan.label,
            "order": scan.order, "grid": scan.grid_label, "kind": which}
    lines = _header_lines("polarization-scan", meta,
                          "theta phi n1 n2 n3 value", timestamp)
    thetas, phis = scan.thetas, scan.phis
    for i, point in enumerate(scan.points):
        lines.append(" ".join(_fmt(v) for v in
                              (thetas[i], phis[i], *point, values[which][i])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_scan(path: str) -> ParsedScan:
    meta, rows = _parse_tagged(path, "polarization-scan")
    try:
        order = int(meta["order"])
    except (KeyError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad or missing order header") from exc
    data = np.array([_floats(r, 6, path) for r in rows])
    if data.size == 0:
        raise FileFormatError(f"{path}: scan has no data rows")
    return ParsedScan(order=order, kind=meta.get("kind", "radii"),
                      points=data[:, 2:5], values=data[:, 5],
                      label=meta.get("label", ""), grid=meta.get("grid", ""),
                      state=meta.get("state", ""), meta=meta)


# ---------------------------------------------------------------------------
# moment observations

def write_observations(path: str, obs: MomentObservations, state: str = "",
                       manifold: int | None = None, timestamp: bool = True) -> None:
    meta = {"state": state or "unspecified",
            "directions": obs.directions.label,
            "max_order": obs.max_order}
    if manifold is not None:
        meta["manifold"] = manifold
    lines = _header_lines("polarization-observations", meta,
                          "theta phi order value stderr", timestamp)
    for r in sorted(obs.values):
        errs = obs.stderr[r] if obs.stderr is not None else None
        for i, d in enumerate(obs.directions.directions):
            err = errs[i] if errs is not None else math.nan
            lines.append(" ".join([_fmt(d.theta), _fmt(d.phi), str(r),
                                   _fmt(obs.values[r][i]), _fmt(err)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_observations(path: str) -> tuple[MomentObservations, dict]:
    """Rebuild observations; direction order follows first appearance."""
    meta, rows = _parse_tagged(path, "polarization-observations")
    per_order: dict[int, dict[tuple[float, float], tuple[float, float]]] = {}
    direction_keys: list[tuple[float, float]] = []
    for row in rows:
        theta, phi, order_f, value, err = _floats(row, 5, path)
        order = int(order_f)
        if order < 1 or order != order_f:
            raise FileFormatError(f"{path}: bad order {order_f!r}")
        key = (theta, phi)
        if key not in direction_keys:
            direction_keys.append(key)
        per_order.setdefault(order, {})[key] = (value, err)
    if not per_order:
        raise FileFormatError(f"{path}: no observation rows")
    directions = DirectionSet(meta.get("directions", "from-file"),
                              tuple(Direction(t, p) for t, p in direction_keys))
    values: dict[int, np.ndarray] = {}
    stderr: dict[int, np.ndarray] = {}
    have_err = True
    for order, entries in sorted(per_order.items()):
        missing = [k for k in direction_keys if k not in entries]
        if missing:
            raise FileFormatError(
                f"{path}: order {order} lacks values for {len(missing)} directions")
        values[order] = np.array([entries[k][0] for k in direction_keys])
        errs = np.array([entries[k][1] for k in direction_keys])
        stderr[order] = errs
        if np.isnan(errs).any():
            have_err = False
    obs = MomentObservations(directions=directions, values=values,
                             stderr=stderr if have_err else None)
    return obs, meta


# ---------------------------------------------------------------------------
# counts

def write_counts(path: str, records: list[CountsRecord], state: str = "",
                 config: DetectorConfig | None = None, timestamp: bool = True) -> None:
    meta = {"state": state or "unspecified"}
    if config is not None:
        meta.update(trials=config.trials, runs=config.runs, seed=config.seed)
    lines = _header_lines("polarization-counts", meta,
                          "run theta phi photons k raw calibrated", timestamp)
    for rec in records:
        cal = rec.calibrated
        for i in range(len(rec.ns)):
            cal_i = cal[i] if cal is not None else math.nan
            lines.append(" ".join([str(rec.run), _fmt(rec.direction.theta),
                                   _fmt(rec.direction.phi), str(int(rec.ns[i])),
                                   str(int(rec.ks[i])), _fmt(rec.raw[i]),
                                   _fmt(cal_i)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_counts(path: str) -> tuple[list[CountsRecord], dict]:
    """Rebuild counts records, grouped by run and direction in file order."""
    meta, rows = _parse_tagged(path, "polarization-counts")
    groups: dict[tuple[int, float, float], list[tuple[int, int, float, float]]] = {}
    for row in rows:
        run_f, theta, phi, n_f, k_f, raw, cal = _floats(row, 7, path)
        groups.setdefault((int(run_f), theta, phi), []).append(
            (int(n_f), int(k_f), raw, cal))
    trials = int(meta.get("trials", 0))
    records = []
    for (run, theta, phi), entries in groups.items():
        ns = np.array([e[0] for e in entries], dtype=int)
        ks = np.array([e[1] for e in entries], dtype=int)
        raw = np.array([e[2] for e in entries])
        cal = np.array([e[3] for e in entries])
        records.append(CountsRecord(direction=Direction(theta, phi), run=run,
                                    ns=ns, ks=ks, raw=raw, trials=trials,
                                    calibrated=None if np.isnan(cal).any() else cal))
    return records, meta


# ---------------------------------------------------------------------------
# detector configuration

def detector_config_from_dict(data: dict) -> DetectorConfig:
    """Build a detector configuration from parsed JSON.

    ``preset`` selects named channel efficiencies; ``class_efficiencies``
    keys are ``"N,k"`` strings.
    """
    if not isinstance(data, dict):
        raise FileFormatError("detector config must be a JSON object")
    kwargs: dict = {}
    if "preset" in data:
        name = data["preset"]
        if name not in EFFICIENCY_PRESETS:
            raise FileFormatError(
                f"unknown efficiency preset {name!r}; known: {sorted(EFFICIENCY_PRESETS)}")
        kwargs["channel_efficiencies"] = EFFICIENCY_PRESETS[name]
    if data.get("channel_efficiencies") is not None:
        if "preset" in data:
            raise FileFormatError("give either preset or channel_efficiencies")
        kwargs["channel_efficiencies"] = tuple(data["channel_efficiencies"])
    if data.get("class_efficiencies") is not None:
        parsed = {}
        for key, val in data["class_efficiencies"].items():
            try:
                n_s, k_s = key.split(",")
                parsed[(int(n_s), int(k_s))] = float(val)
            except ValueError as exc:
                raise FileFormatError(f"bad class key {key!r}, want 'N,k'") from exc
        kwargs["class_efficiencies"] = parsed
    for field_name in ("splitter_halving", "trials", "runs", "seed"):
        if field_name in data:
            kwargs[field_name] = data[field_name]
    try:
        return DetectorConfig(**kwargs)
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc


def load_detector_config(path: str) -> DetectorConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    return detector_config_from_dict(data)


# ---------------------------------------------------------------------------
# JSON reports

def json_ready(obj):
    """Recursively convert to JSON-serializable types at 12 significant
    digits; complex numbers become [re, im] pairs."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if not math.isfinite(f) else float(_FMT % f)
    if isinstance(obj, (complex, np.complexfloating)):
        return [json_ready(obj.real), json_ready(obj.imag)]
    return obj


def dump_report(report: dict, path: str | None = None, timestamp: bool = True) -> str:
    """Serialize a report dict; write it when ``path`` is given."""
    payload = dict(report)
    if timestamp:
        payload["generated"] = _now()
    text = json.dumps(json_ready(payload), indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_state_spec(path: str) -> dict:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise FileFormatError(f"{path}: state spec must be a JSON object")
    return data
