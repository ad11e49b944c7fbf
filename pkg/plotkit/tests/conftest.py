"""Fixtures that drive the producer CLI as an external process.

Everything plotkit consumes is generated here by shelling out to the
`polarmoments` command, so these tests exercise the real file contract
rather than any shared in-process code.
"""

import json
import subprocess
import sys

import pytest


def run_producer(*args) -> subprocess.CompletedProcess:
    cmd = [sys.executable, "-m", "polarmoments.cli", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"{' '.join(cmd)}\n{proc.stderr}"
    return proc


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("files")


@pytest.fixture(scope="session")
def state_specs(workdir):
    specs = {
        "fock20": {"kind": "fock", "h": 2, "v": 0},
        "fock11": {"kind": "fock", "h": 1, "v": 1},
        "unpol2": {"kind": "unpolarized", "photons": 2},
        "mix": {"kind": "mixture", "components": [
            {"weight": 0.5, "state": {"kind": "fock", "h": 2, "v": 0}},
            {"weight": 0.5, "state": {"kind": "fock", "h": 0, "v": 2}}]},
        # |2,0> tilted by 8.1 degrees about axis 2
        "tilted": {"kind": "su2_coherent", "photons": 2,
                   "theta": 0.1413716694115407, "phi": 0.0},
    }
    paths = {}
    for name, spec in specs.items():
        p = workdir / f"{name}.json"
        p.write_text(json.dumps(spec))
        paths[name] = str(p)
    return paths


@pytest.fixture(scope="session")
def emitted_files(workdir, state_specs):
    """One file of every kind the producer CLI can emit."""
    f = {k: str(workdir / n) for k, n in {
        "surface_ico": "surface_ico.txt",
        "surface_ll": "surface_ll.txt",
        "surface_raw": "surface_raw.txt",
        "surface_const": "surface_const.txt",
        "cut_theory": "cut_theory.txt",
        "cut_third": "cut_third.txt",
        "obs": "obs.txt",
        "obs_stamped": "obs_stamped.txt",
        "counts": "counts.txt",
        "rec": "rec.json",
        "cut_measured": "cut_measured.txt",
        "rec_ref": "rec_ref.json",
        "cut_tilted": "cut_tilted.txt",
    }.items()}
    run_producer("scan", "--state", state_specs["fock20"], "--order", "2",
                 "--grid", "icosphere:2", "--out", f["surface_ico"],
                 "--no-timestamp")
    run_producer("scan", "--state", state_specs["fock20"], "--order", "2",
                 "--grid", "latlong:41x80", "--out", f["surface_ll"],
                 "--no-timestamp")
    run_producer("scan", "--state", state_specs["mix"], "--order", "2",
                 "--grid", "latlong:41x80", "--value", "raw",
                 "--out", f["surface_raw"], "--no-timestamp")
    run_producer("scan", "--state", state_specs["unpol2"], "--order", "2",
                 "--grid", "icosphere:1", "--out", f["surface_const"],
                 "--no-timestamp")
    run_producer("scan", "--state", state_specs["fock20"], "--order", "2",
                 "--grid", "cut:13:180", "--out", f["cut_theory"],
                 "--no-timestamp")
    run_producer("scan", "--state", state_specs["fock20"], "--order", "3",
                 "--grid", "cut:13:90", "--value", "central",
                 "--out", f["cut_third"], "--no-timestamp")
    run_producer("simulate", "--state", state_specs["fock20"], "--preset",
                 "pair_source", "--trials", "100000", "--runs", "3",
                 "--seed", "5", "--out-observations", f["obs"],
                 "--out-counts", f["counts"], "--no-timestamp")
    # a timestamped variant must parse just as well
    run_producer("simulate", "--state", state_specs["fock11"], "--preset",
                 "pair_source", "--trials", "20000", "--seed", "6",
                 "--out-observations", f["obs_stamped"])
    run_producer("reconstruct", "--observations", f["obs"], "--out", f["rec"],
                 "--no-timestamp")
    run_producer("scan", "--packs", f["rec"], "--order", "2",
                 "--grid", "cut:13:180", "--out", f["cut_measured"],
                 "--no-timestamp")
    # tilted state: simulate, fit against the ideal, scan its packs
    obs_t = str(workdir / "obs_tilted.txt")
    run_producer("simulate", "--state", state_specs["tilted"], "--preset",
                 "double_source", "--trials", "1000000", "--runs", "3",
                 "--seed", "11", "--out-observations", obs_t, "--no-timestamp")
    run_producer("reconstruct", "--observations", obs_t, "--reference",
                 state_specs["fock20"], "--out", f["rec_ref"],
                 "--no-timestamp")
    run_producer("scan", "--packs", f["rec_ref"], "--order", "2",
                 "--grid", "cut:13:180", "--out", f["cut_tilted"],
                 "--no-timestamp")
    return f
