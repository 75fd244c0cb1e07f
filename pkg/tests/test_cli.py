import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from biququart.cli import main, parse_state
from biququart.states import DensityMatrix, QuquartState


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_stokes_vv(capsys):
    code, out, _ = run(capsys, "stokes", "--state", "VV")
    assert code == 0
    assert out.splitlines() == ["s0,s1,s2,s3,p4", "2,-2,0,0,1"]


def test_qkd_zero_rounds_is_argument_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["qkd", "--rounds", "0"])
    assert exc.value.code == 2


def test_exit_codes_subprocess(workdir):
    ok = subprocess.run([sys.executable, "-m", "biququart", "stokes", "--state", "HV"], capture_output=True)
    assert ok.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "biququart", "qkd", "--rounds", "0"], capture_output=True)
    assert bad.returncode == 2
    dom = subprocess.run([sys.executable, "-m", "biququart", "scan-tilt", "--material", "unobtainium"],
                         capture_output=True)
    assert dom.returncode == 1


def test_prepare_swap_plate(capsys):
    code, out, _ = run(capsys, "prepare", "--input-state", "VV", "--delta1-pi", "0.5", "--delta2-pi", "1")
    assert code == 0
    state = QuquartState.from_json(json.loads(out))
    assert state == QuquartState.product("HV")
    assert json.loads(out)["re"] == [0.0, 1.0, 0.0, 0.0]


def test_prepare_physical_plate(capsys):
    # the solved quartz thickness is close to, but not exactly, the swap plate
    code, out, _ = run(capsys, "prepare", "--thickness-mm", "3.4004")
    state = QuquartState.from_json(json.loads(out))
    assert abs(state.amplitudes[1]) ** 2 > 0.97


def test_prepare_domain_error(capsys):
    code, _, err = run(capsys, "prepare", "--delta1-pi", "0.5")
    assert code == 1 and "error" in err


def test_parse_state_forms(tmp_path):
    assert parse_state("H1V2") == QuquartState.product("HV")
    assert parse_state("III:1") == QuquartState.product("RL")
    assert isinstance(parse_state("mixed"), DensityMatrix)
    f = tmp_path / "s.json"
    f.write_text(json.dumps(QuquartState.product("DA").to_json()))
    assert parse_state(str(f)) == QuquartState.product("DA")
    with pytest.raises(ValueError):
        parse_state("nonsense")


def _read_scan(path):
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def test_scan_default_fits_model(workdir, capsys):
    assert main(["scan-tilt", "--out", "scan.csv"]) == 0
    data = _read_scan(workdir / "scan.csv")
    model = np.sin(data["delta1_rad"]) ** 2 * np.cos(data["delta2_rad"]) ** 2
    c = data["coincidences_norm"]
    r2 = 1 - np.sum((c - model) ** 2) / np.sum((c - c.mean()) ** 2)
    assert r2 > 0.999
    assert (workdir / "scan.csv.manifest.json").is_file()


def test_scan_zero_width(workdir):
    main(["scan-tilt", "--theta-min", "3", "--theta-max", "3", "--out", "one.csv"])
    assert len((workdir / "one.csv").read_text().splitlines()) == 2


def test_scan_bad_range(capsys):
    code, _, _ = run(capsys, "scan-tilt", "--theta-min", "5", "--theta-max", "1")
    assert code == 1


def test_scan_byte_identical(workdir):
    main(["scan-tilt", "--seed", "5", "--out", "a.csv"])
    main(["scan-tilt", "--seed", "5", "--out", "b.csv"])
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


def test_tomography_hv(workdir):
    main(["tomography", "--state", "HV", "--pairs", "1e6", "--noiseless", "--out", "t.json"])
    rep = json.loads((workdir / "t.json").read_text())
    assert rep["fidelity"] >= 0.999
    assert len(rep["records"]) == 16


def test_tomography_rl_depolarized(workdir):
    # isotropic depolarization p gives F = 1 - 3p/4
    main(["tomography", "--state", "RL", "--depolarization", "0.036", "--noiseless", "--out", "t.json"])
    rep = json.loads((workdir / "t.json").read_text())
    assert abs(rep["fidelity"] - 0.97) <= 0.01
    assert rep["target_basis"] == "III"
    assert np.argmax(rep["diagonal_in_target_basis"]) == 1


def test_tomography_mixed(workdir):
    main(["tomography", "--state", "mixed", "--out", "t.json"])
    rep = json.loads((workdir / "t.json").read_text())
    assert rep["fidelity"] == pytest.approx(0.25, abs=1e-9)


def test_tomography_bad_state(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tomography", "--state", "XYZ"])
    assert exc.value.code == 2


def test_qkd_outputs(workdir):
    assert main(["qkd", "--rounds", "2000", "--records-out", "r.jsonl", "--out", "s.json"]) == 0
    summary = json.loads((workdir / "s.json").read_text())
    assert summary["qber"] == 0
    lines = (workdir / "r.jsonl").read_text().splitlines()
    assert len(lines) == 2000
    assert json.loads(lines[0])["round"] == 0


def test_qkd_eve(workdir):
    main(["qkd", "--rounds", "20000", "--eve", "intercept", "--eve-bases", "I", "--out", "s.json"])
    summary = json.loads((workdir / "s.json").read_text())
    assert summary["per_basis"]["I"]["qber"] == 0
    assert summary["qber"] == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("argv", [
    ["stokes", "--state", "RL", "--out", "o.csv"],
    ["prepare", "--tilt-deg", "7", "--out", "o.json"],
    ["scan-tilt", "--theta-step", "1", "--seed", "3", "--out", "o.csv"],
    ["tomography", "--state", "DA", "--pairs", "5000", "--seed", "4", "--out", "o.json"],
    ["qkd", "--rounds", "500", "--depolarization", "0.3", "--seed", "6", "--records-out", "r.jsonl",
     "--out", "o.json"],
])
def test_manifest_replay(workdir, argv, capsys):
    assert main(argv) == 0
    manifest = json.loads((workdir / "o.json.manifest.json").read_text()) if "o.json" in argv else \
        json.loads((workdir / "o.csv.manifest.json").read_text())
    assert manifest["argv"] == argv
    assert manifest["command"] == argv[0]
    name = "o.json" if "o.json" in argv else "o.csv"
    before = {p: (workdir / p).read_bytes() for p in manifest["outputs"]}
    assert main(["replay", f"{name}.manifest.json"]) == 0
    assert {p: (workdir / p).read_bytes() for p in manifest["outputs"]} == before
    # nothing written beyond the declared outputs and the manifest
    assert sorted(p.name for p in workdir.iterdir()) == sorted(manifest["outputs"] + [f"{name}.manifest.json"])


def test_replay_detects_tampering(workdir, capsys):
    main(["stokes", "--out", "o.csv"])
    (workdir / "o.csv").write_text("tampered\n")
    assert main(["replay", "o.csv.manifest.json"]) == 1
