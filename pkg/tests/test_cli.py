import json
import subprocess
import sys

import numpy as np
import pytest

from rescode import codesim
from rescode.cli import main
from rescode.entropy import relative_entropy
from rescode.qcore import channel_to_json, kraus_channel, random_density_matrix, save_matrix
from rescode.twirl import uniform_superposition, z_group


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_entropy_plus_dephased(capsys):
    code, out, _ = run(capsys, "entropy", "--rho", "plus", "--sigma", "dephased")
    rep = json.loads(out)
    assert code == 0
    assert rep["D"] == pytest.approx(1.0, abs=1e-9) and rep["V"] == pytest.approx(0.0, abs=1e-9)
    assert set(rep) >= {"D", "V", "D2", "Ds", "DH"}


def test_entropy_bell_local(capsys):
    code, out, _ = run(capsys, "entropy", "--rho", "bell", "--sigma", "local-twirled")
    assert code == 0 and json.loads(out)["D"] == pytest.approx(2.0, abs=1e-9)


def test_entropy_file_round_trip(capsys, tmp_path, rng):
    rho, sigma = random_density_matrix(3, rng), random_density_matrix(3, rng)
    save_matrix(tmp_path / "rho.json", rho)
    save_matrix(tmp_path / "sigma.json", sigma)
    code, out, _ = run(capsys, "entropy", "--rho", str(tmp_path / "rho.json"), "--sigma", str(tmp_path / "sigma.json"))
    assert code == 0 and json.loads(out)["D"] == float(relative_entropy(rho, sigma))


def test_entropy_support_violation_reports_undefined(capsys, tmp_path):
    save_matrix(tmp_path / "a.json", np.diag([1.0, 0.0]))
    save_matrix(tmp_path / "b.json", np.diag([0.0, 1.0]))
    code, out, _ = run(capsys, "entropy", "--rho", str(tmp_path / "a.json"), "--sigma", str(tmp_path / "b.json"))
    rep = json.loads(out)
    assert code == 0 and rep["V"] is None and "V" in rep["undefined"]


def test_bound_coherence_csv(capsys):
    code, out, _ = run(capsys, "bound", "--rho", "plus", "--rdm", "dephasing", "--N", "1:1000", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "N,first_order,second_order,lower,upper"
    assert len(lines) == 1001
    assert all(abs(float(l.split(",")[1]) - 1) < 1e-9 for l in lines[1:])


def test_bound_superdense_json(capsys):
    code, out, _ = run(capsys, "bound", "--rho", "bell", "--rdm", "local(2,2)", "--N", "1,10", "--eps", "0.1")
    rep = json.loads(out)
    assert code == 0
    assert all(r["first_order"] == pytest.approx(2.0) == r["second_order"] for r in rep["rates"])
    assert rep["report"]["log2_upper"] == pytest.approx(np.log2(4 / 0.9))


def test_bound_thermo(capsys):
    code, out, _ = run(capsys, "bound", "--rho", "gibbs(1.0)", "--rdm", "depolarizing", "--beta", "1.0", "--N", "5")
    assert code == 0 and json.loads(out)["thermo_bound"][0]["bits"] == 0.0
    code, out, _ = run(capsys, "bound", "--rho", "plus", "--rdm", "depolarizing", "--beta", "0", "--N", "5")
    assert json.loads(out)["thermo_bound"][0]["bits"] == pytest.approx(5.0)


def test_bound_custom_channel_file(capsys, tmp_path):
    ch = kraus_channel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    (tmp_path / "ch.json").write_text(json.dumps(channel_to_json(ch)))
    code, out, _ = run(capsys, "bound", "--rho", "plus", "--rdm", str(tmp_path / "ch.json"))
    assert code == 0 and json.loads(out)["report"]["log2_upper"] > 1


def test_simulate_bell_codebook(capsys):
    code, out, _ = run(capsys, "simulate", "--rho", "bell", "--rdm", "local(2,2)", "--codebook", "0,1,2,3")
    rep = json.loads(out)
    assert code == 0 and rep["success_direct"] == pytest.approx(1.0, abs=1e-10)


def test_simulate_matches_library_and_is_deterministic(capsys):
    args = ("simulate", "--rho", "plus", "--rdm", "dephasing", "--M", "3", "--trials", "40", "--seed", "9")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args, "--threads", "3")
    assert first == second
    lib = codesim.monte_carlo_achievability(np.outer(uniform_superposition(2), uniform_superposition(2).conj()),
                                            z_group(2), 3, 40, 9)
    assert json.loads(first)["mean_success"] == lib.mean_success


def test_simulate_sweep_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--rho", "plus", "--rdm", "dephasing", "--M", "1:4", "--trials", "20",
                       "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "M,mean_success,stderr" and len(out.splitlines()) == 5


def test_simulate_find(capsys):
    code, out, _ = run(capsys, "simulate", "--rho", "plus", "--copies", "2", "--rdm", "dephasing", "--find",
                       "--eps", "0.01", "--strategy", "distinct", "--trials", "5")
    rep = json.loads(out)
    assert code == 0 and rep["log2_M"] == 2 and rep["sandwich"] is not None


def test_schurweyl_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "schurweyl", "demo3qubit")
    rep = json.loads(out)
    assert code == 0 and max(rep["residuals"].values()) < 1e-8
    code, _, _ = run(capsys, "schurweyl", "table", "--n", "4", "--d", "2", "--out", str(tmp_path / "t.json"))
    assert json.loads((tmp_path / "t.json").read_text())["sum_f_squared"] == 24


@pytest.mark.parametrize("argv", [
    ("schurweyl", "table", "--n", "0"),
    ("schurweyl", "table", "--n", "x"),
    ("entropy", "--rho", "nosuchstate", "--sigma", "dephased"),
    ("bound", "--rho", "plus", "--rdm", "local(3,3)"),
    ("bound", "--rho", "plus", "--rdm", "dephasing", "--delta", "0.2", "--eps", "0.1"),
    ("simulate", "--rho", "plus", "--rdm", "nosuchmap"),
])
def test_usage_errors_exit_2(capsys, argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_unknown_builder_lists_vocabulary(capsys):
    code, _, err = run(capsys, "entropy", "--rho", "nosuch", "--sigma", "dephased")
    assert code == 2 and "uniform_superposition(d)" in err


def test_numerical_failure_exit_1(capsys):
    code, _, err = run(capsys, "simulate", "--rho", "plus", "--rdm", "dephasing", "--M", "300",
                       "--trials", "1")
    assert code == 1 and "SizeGuardError" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rescode", "schurweyl", "table", "--n", "3", "--d", "2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["sum_f_s"] == 8
