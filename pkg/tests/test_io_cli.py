"""File formats and the command-line front end."""

import json
import math

import numpy as np
import pytest

import polarmoments as pm
from polarmoments.cli import main
from polarmoments.errors import FileFormatError
from polarmoments.io import (parse_counts, parse_observations, parse_scan,
                             write_counts, write_observations, write_scan)


@pytest.fixture
def specs(tmp_path):
    paths = {}
    for name, spec in {
        "fock11": {"kind": "fock", "h": 1, "v": 1},
        "fock20": {"kind": "fock", "h": 2, "v": 0},
        "unpol3": {"kind": "unpolarized", "photons": 3},
        "mix": {"kind": "mixture", "components": [
            {"weight": 0.5, "state": {"kind": "fock", "h": 2, "v": 0}},
            {"weight": 0.5, "state": {"kind": "fock", "h": 0, "v": 2}}]},
    }.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(spec))
        paths[name] = str(p)
    return paths


def test_scan_round_trip(tmp_path):
    scan = pm.sphere_scan(pm.fock(2, 0), 2, grid="cut:13:12")
    path = tmp_path / "scan.txt"
    write_scan(path, scan, state="abc", timestamp=False)
    back = parse_scan(path)
    assert back.order == 2
    assert back.kind == "radii"
    assert back.state == "abc"
    np.testing.assert_allclose(back.points, scan.points, atol=1e-10)
    np.testing.assert_allclose(back.values, scan.radii, rtol=1e-10)


def test_observations_round_trip(tmp_path):
    dirs = pm.named_direction_set("canonical-2")
    state = pm.fock(1, 1)
    values = {r: np.array([pm.raw_moment(state, d, r) for d in dirs.directions])
              for r in (1, 2)}
    stderr = {r: np.full(6, 0.01) for r in (1, 2)}
    obs = pm.MomentObservations(dirs, values, stderr)
    path = tmp_path / "obs.txt"
    write_observations(path, obs, state="s", manifold=2, timestamp=False)
    back, meta = parse_observations(path)
    assert meta["manifold"] == "2"
    np.testing.assert_allclose(back.values[2], values[2], rtol=1e-10)
    np.testing.assert_allclose(back.stderr[1], 0.01)
    got = [d.unit_vector for d in back.directions.directions]
    np.testing.assert_allclose(got, dirs.unit_vectors, atol=1e-10)


def test_counts_round_trip(tmp_path):
    state = pm.fock(2, 0)
    dirs = pm.named_direction_set("canonical-2")
    cfg = pm.DetectorConfig(channel_efficiencies=(0.9, 0.9, 0.8, 1.0),
                            trials=5000, runs=2, seed=1)
    res = pm.run_protocol(state, dirs, cfg)
    path = tmp_path / "counts.txt"
    write_counts(path, res.counts, state="s", config=cfg, timestamp=False)
    back, meta = parse_counts(path)
    assert len(back) == len(res.counts)
    np.testing.assert_allclose(back[0].raw, res.counts[0].raw)
    np.testing.assert_allclose(back[0].calibrated, res.counts[0].calibrated)


def test_malformed_files_raise(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# wrong-tag v1\n1 2 3\n")
    with pytest.raises(FileFormatError):
        parse_scan(bad)
    bad2 = tmp_path / "bad2.txt"
    bad2.write_text("# polarization-scan v1\n# columns: theta phi n1 n2 n3 value\n1 2\n")
    with pytest.raises(FileFormatError):
        parse_scan(bad2)


def test_no_timestamp_is_deterministic(tmp_path, specs):
    out1, out2 = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    for out in (out1, out2):
        assert main(["scan", "--state", specs["fock20"], "--order", "2",
                     "--grid", "cut:12:16", "--out", out, "--no-timestamp"]) == 0
    assert (tmp_path / "a.txt").read_text() == (tmp_path / "b.txt").read_text()


def test_cli_moments_json(tmp_path, specs, capsys):
    assert main(["moments", "--state", specs["fock11"], "--no-timestamp"]) == 0
    data = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(data["stokes_vector"], [0, 0, 0], atol=1e-12)
    second = next(p for p in data["packs"] if p["order"] == 2)
    np.testing.assert_allclose(second["raw"], [4, 0, 0, 4, 0, 0], atol=1e-12)
    assert data["uncertainty"]["lower"] == pytest.approx(4.0)


def test_cli_simulate_reconstruct_pipeline(tmp_path, specs, capsys):
    obs = str(tmp_path / "obs.txt")
    cnt = str(tmp_path / "counts.txt")
    assert main(["simulate", "--state", specs["fock11"], "--preset", "pair_source",
                 "--trials", "100000", "--runs", "3", "--seed", "9",
                 "--out-observations", obs, "--out-counts", cnt,
                 "--no-timestamp"]) == 0
    rec = str(tmp_path / "rec.json")
    assert main(["reconstruct", "--observations", obs, "--out", rec,
                 "--no-timestamp"]) == 0
    data = json.loads(open(rec).read())
    pack2 = next(p for p in data["packs"] if p["order"] == 2)
    raw = np.array(pack2["raw"])
    err = np.array(data["raw_stderr"]["2"])
    want = np.array([4.0, 0, 0, 4.0, 0, 0])
    assert (np.abs(raw - want) < 3.5 * np.maximum(err, 1e-9)).all()


def test_cli_scan_from_reconstruction(tmp_path, specs):
    """Reconstructed packs can be scanned like a state."""
    obs = str(tmp_path / "obs.txt")
    rec = str(tmp_path / "rec.json")
    theory = str(tmp_path / "theory.txt")
    measured = str(tmp_path / "measured.txt")
    assert main(["simulate", "--state", specs["fock20"], "--preset",
                 "double_source", "--trials", "200000", "--seed", "3",
                 "--out-observations", obs, "--no-timestamp"]) == 0
    assert main(["reconstruct", "--observations", obs, "--out", rec,
                 "--no-timestamp"]) == 0
    for src, out in (("--state", theory), ("--packs", measured)):
        path = specs["fock20"] if src == "--state" else rec
        assert main(["scan", src, path, "--order", "2", "--grid", "cut:13:24",
                     "--out", out, "--no-timestamp"]) == 0
    a, b = parse_scan(theory), parse_scan(measured)
    np.testing.assert_allclose(a.points, b.points, atol=1e-10)
    np.testing.assert_allclose(a.values, b.values, atol=0.1)
    # neither --state nor --packs is a spec error
    assert main(["scan", "--order", "2",
                 "--out", str(tmp_path / "x.txt")]) == 3


def test_cli_classify(tmp_path, specs, capsys):
    assert main(["classify", "--state", specs["unpol3"], "--no-timestamp"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["class"]["flags"] == [True, True, True]
    assert data["invariant"] == {"1": True, "2": True, "3": True}


def test_cli_misalignment_reference(tmp_path, specs, capsys):
    """Hand-built measured packs compared against the ideal mixture."""
    dirs = pm.named_direction_set("canonical-2")
    s = np.array([-0.11, -0.10, 0.00])
    gamma = np.diag([2.04, 2.05, 3.93])
    gamma[0, 1] = gamma[1, 0] = -0.01 / 2
    gamma[1, 2] = gamma[2, 1] = 0.69 / 2
    gamma[2, 0] = gamma[0, 2] = -0.01 / 2
    units = dirs.unit_vectors
    obs = pm.MomentObservations(dirs, {
        1: units @ s,
        2: np.einsum("kj,jl,kl->k", units, gamma, units)})
    path = tmp_path / "table.txt"
    write_observations(path, obs, state="measured", manifold=2, timestamp=False)
    assert main(["reconstruct", "--observations", str(path),
                 "--reference", specs["mix"], "--no-timestamp"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["misalignment"]["angle_degrees"] == pytest.approx(10.032, abs=0.01)
    np.testing.assert_allclose(data["stokes_vector"], s, atol=1e-9)


def test_cli_exit_codes(tmp_path, specs):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "nope"}')
    assert main(["moments", "--state", str(bad)]) == 3

    notpsd = tmp_path / "notpsd.json"
    notpsd.write_text(json.dumps({"kind": "manifolds", "manifolds": [
        {"photons": 1, "weight": 1.0, "matrix": [[1.5, 0.0], [0.0, -0.5]]}]}))
    assert main(["moments", "--state", str(notpsd)]) == 4

    coplanar = pm.DirectionSet("coplanar", tuple(
        pm.Direction(math.pi / 2, k * 0.4) for k in range(6)))
    state = pm.fock(1, 1)
    obs = pm.MomentObservations(coplanar, {
        1: np.zeros(6),
        2: np.array([pm.raw_moment(state, d, 2) for d in coplanar.directions])})
    path = tmp_path / "rankdef.txt"
    write_observations(path, obs, state="x", timestamp=False)
    assert main(["reconstruct", "--observations", str(path)]) == 5

    missing = tmp_path / "missing.txt"
    assert main(["moments", "--state", str(missing)]) in (1, 3)


def test_cli_counts(capsys):
    assert main(["counts", "--photons", "2", "--no-timestamp"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["per_order"] == [3, 6]
    assert data["cumulative"] == 9
    assert data["all_manifolds"] == 35
    assert data["state_parameters"] == 8


def test_cli_vacuum_notice(tmp_path, capsys):
    vac = tmp_path / "vac.json"
    vac.write_text('{"kind": "fock", "h": 0, "v": 0}')
    assert main(["moments", "--state", str(vac), "--no-timestamp"]) == 0
    out = capsys.readouterr().out
    assert "vacuum has no polarization" in out
