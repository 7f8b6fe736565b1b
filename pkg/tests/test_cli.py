import json
from pathlib import Path

import pytest

from seqlearn.cli import main

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_example1(tmp_path):
    code, out = run(tmp_path, "example1")
    assert code == 0
    vals = json.loads((out / "values.json").read_text())
    assert all(vals["checks"].values())
    for f in ("cdf_gaussian.csv", "sosd.json", "cdfs.svg", "gaussian_cross_sections.csv"):
        assert (out / f).exists()
    assert "Date" not in (out / "cdfs.svg").read_text()[:400]


def test_example1_outputs_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "example1", name="a")
    _, b = run(tmp_path, "example1", name="b")
    assert manifest(a)["outputs"] == manifest(b)["outputs"]


def test_dp_verify_default_and_negative_control(tmp_path):
    assert run(tmp_path, "dp-verify", name="ok")[0] == 0
    code, out = run(tmp_path, "dp-verify", "--scenario", str(SCEN / "dp_nonconvex.json"),
                    name="bad")
    assert code == 1
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["verdict"] == "FAIL" and cert["witness"]["gain"] > 0


def test_dp_verify_degenerate_notes(tmp_path):
    code, out = run(tmp_path, "dp-verify", "--scenario", str(SCEN / "dp_degenerate.json"))
    assert code == 0
    assert json.loads((out / "certificate.json").read_text())["notes"]


def test_dp_verify_budget_is_input_error(tmp_path):
    p = tmp_path / "big.json"
    p.write_text(json.dumps({"c": 0.25, "I_bar": 1.0, "T": 12, "grids": {"p": 40}}))
    assert run(tmp_path, "dp-verify", "--scenario", str(p))[0] == 2


def test_target_with_sweeps(tmp_path):
    code, out = run(tmp_path, "target", "--scenario", str(SCEN / "target_sweep.json"))
    assert code == 0
    sweep = json.loads((out / "prior_sweep.json").read_text())
    assert sweep["comparative_static_holds"]
    rates = json.loads((out / "rate_sweep.json").read_text())["rows"]
    assert sorted(a[1] for a in rates[0]["atoms"]) == pytest.approx([0.0, 1.0])


def test_target_nonconvergence(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"target_opts": {"max_iter": 1}}))
    code, out = run(tmp_path, "target", "--scenario", str(p))
    assert code == 1 and (out / "nonconvergence.json").exists()
    assert "non-convergence" in capsys.readouterr().err


def test_mc_small_run_is_reproducible(tmp_path):
    args = ("mc", "--paths", "2000", "--dt", "0.01", "--seed", "9")
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    assert manifest(a)["outputs"] == manifest(b)["outputs"]
    audit = json.loads((a / "audit.json").read_text())
    assert audit["poisson"]["ks"]["n"] == 2000


def test_mc_single_path_smoke(tmp_path):
    code, out = run(tmp_path, "mc", "--paths", "1", "--dt", "0.01")
    assert code in (0, 1) and (out / "audit.json").exists()


def test_sosd_default_chain_and_pair(tmp_path):
    assert run(tmp_path, "sosd", name="chain")[0] == 0
    code, out = run(tmp_path, "sosd", "--scenario", str(SCEN / "sosd_pair.json"), name="pair")
    assert code == 0
    assert json.loads((out / "sosd.json").read_text())["verdict"] == "d2_mps_of_d1"


def test_sosd_reads_csv(tmp_path):
    _, ex = run(tmp_path, "example1", name="ex")
    p = tmp_path / "pair.json"
    p.write_text(json.dumps({"sosd": {"d1": str(ex / "cdf_pure_accumulation.csv"),
                                      "d2": str(ex / "cdf_poisson.csv")}}))
    code, out = run(tmp_path, "sosd", "--scenario", str(p), name="csv")
    assert code == 0
    assert json.loads((out / "sosd.json").read_text())["verdict"] == "d2_mps_of_d1"


@pytest.mark.parametrize("argv", [
    ("target", "--seed", "-1"),
    ("mc", "--paths", "0"),
    ("mc", "--dt", "-0.1"),
    ("target", "--scenario", "/nonexistent/scenario.json"),
])
def test_input_errors(tmp_path, argv):
    assert run(tmp_path, *argv)[0] == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["sosd", "--out", str(blocker / "sub")]) == 2


def test_manifest_has_no_timestamps(tmp_path):
    _, out = run(tmp_path, "sosd")
    m = manifest(out)
    assert set(m) == {"command", "inputs", "scenario", "versions", "exit_code", "outputs"}
