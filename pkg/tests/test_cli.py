import csv
import json

import numpy as np
import pytest

from genhopf.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, SCHEMA, main


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_vdp_case_one(tmp_path):
    code, rep, out = run(tmp_path, "vdp", "--mu", "1", "--beta", "3", "--alpha", "2", "--c1", "0",
                         "--c2", "0", "--x0", "-2", "--x1", "2", "--n", "400")
    assert code == EXIT_OK
    assert rep["schema"] == SCHEMA and rep["status"] == "pass" and rep["exit_code"] == 0
    header, data = read_csv(out / rep["files"][0])
    assert {"x", "P", "U", "phi", "psi", "residual"} <= set(header)
    assert data.shape[0] == 400
    assert rep["residual"]["pass"]
    assert rep["oracle"]["rel_linf"] <= 1e-6
    assert isinstance(rep["printed_vs_recomputed"], list)


def test_painleve_example_two(tmp_path):
    code, rep, _ = run(tmp_path, "painleve3", "--alpha=-1", "--beta", "1", "--gamma", "1",
                       "--P", "sin(x)", "--x0", "0.5", "--x1", "3")
    assert code == EXIT_OK
    assert rep["delta"] == -1.0
    assert rep["residual"]["pass"]


def test_burgers_exponential_family(tmp_path):
    code, rep, out = run(tmp_path, "burgers", "--family", "expH", "--C", "2", "--alphaH", "1",
                         "--phi0", "exp(x)", "--t-end", "0.5", "--nx", "400", "--nt", "400")
    assert code == EXIT_OK
    assert rep["family"]["accepted"]
    assert {"psi.csv", "phi.csv", "residual.csv"} <= set(rep["files"])
    header, data = read_csv(out / "psi.csv")
    x = np.array(header[1:], dtype=float)
    assert np.allclose(data[:, 1:], 2 * np.exp(-x), atol=1e-9)


def test_burgers_time_dependent_boundary(tmp_path):
    code, rep, _ = run(tmp_path, "burgers", "--family", "custom", "--M", "1", "--H", "1",
                       "--phi0", "1+exp(-x)", "--phi-left", "1+exp(t)",
                       "--phi-right", "1+exp(t-1)", "--nx", "100", "--nt", "100",
                       "--threshold", "1e-5")
    assert code == EXIT_OK
    code, rep, _ = run(tmp_path, "burgers", "--family", "custom", "--phi-left", "1",
                       name="half")
    assert code == EXIT_CONFIG


def test_convective_example(tmp_path):
    code, rep, out = run(tmp_path, "convective", "--mode", "forward", "--F", "1", "--W", "1",
                         "--V", "4", "--S", "0", "--U0", "2")
    assert code == EXIT_OK
    header, data = read_csv(out / "solution.csv")
    x = data[:, header.index("x")]
    assert np.allclose(data[:, header.index("U")], np.exp(-2 * x) + 1, rtol=1e-12)


def test_convective_constraint_violation(tmp_path):
    code, rep, out = run(tmp_path, "convective", "--F", "1", "--W", "1", "--V", "0")
    assert code == EXIT_VALIDATION
    assert rep["status"] == "fail" and "error" in rep
    assert (out / "constraint.csv").exists()


def test_burgers_incompatible_family(tmp_path):
    code, rep, _ = run(tmp_path, "burgers", "--family", "custom", "--H", "x^2", "--x0", "1",
                       "--x1", "2")
    assert code == EXIT_VALIDATION
    assert rep["family"]["compat_norm"] > 1e-8


@pytest.mark.parametrize("args", [
    ("vdp", "--n", "8"),
    ("vdp", "--x0", "1", "--x1", "0"),
    ("vdp", "--tol", "1e-3"),
    ("lienard", "--P", "x +* 2"),
    ("lienard", "--P", "k*x"),
    ("vdp", "--param", "k"),
])
def test_bad_configuration(tmp_path, args):
    code, _, _ = run(tmp_path, *args)
    assert code == EXIT_CONFIG


def test_unknown_flag_exits_with_config_code(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["vdp", "--wobble", "1", "--out", str(tmp_path)])
    assert info.value.code == EXIT_CONFIG


def test_bound_parameter(tmp_path):
    code, rep, _ = run(tmp_path, "lienard", "--P", "k*x", "--param", "k=0.5", "--x0", "0.1",
                       "--x1", "1")
    assert code == EXIT_OK
    assert rep["params"] == {"k": 0.5}


def test_pole_gives_partial_oracle(tmp_path):
    # U = 0 with phi = 1 - x: psi has a pole at x = 1 that the direct integration cannot pass
    code, rep, _ = run(tmp_path, "vdp", "--P", "0", "--beta", "0", "--alpha", "0", "--x0", "0",
                       "--x1", "3", "--dphi0=-1")
    assert code == EXIT_OK
    assert rep["residual"]["mask_fraction"] > 0
    assert rep["oracle"]["complete"] is False
    assert 0.99 < rep["oracle"]["x_stop"] <= 1.0


def test_numerical_failure_code(tmp_path):
    # psi'' = psi psi' + psi^2 from psi = 10 escapes before x = 2
    code, rep, _ = run(tmp_path, "convective", "--mode", "reduce", "--W", "1", "--psi0", "10")
    assert code == EXIT_NUMERIC
    assert rep["status"] == "fail" and "blew up" in rep["error"]


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"mu": 1, "beta": 3, "alpha": 2, "n": 64, "x0": -1, "x1": 1}))
    code, rep, _ = run(tmp_path, "vdp", "--config", str(cfg), "--n", "80")
    assert code == EXIT_OK
    assert rep["config"]["n"] == 80 and rep["config"]["x0"] == -1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"wobble": 1}))
    assert run(tmp_path, "vdp", "--config", str(bad), name="b")[0] == EXIT_CONFIG
    assert run(tmp_path, "vdp", "--config", str(tmp_path / "missing.json"), name="c")[0] \
        == EXIT_CONFIG


@pytest.mark.parametrize("args", [
    ("vdp", "--n", "64"),
    ("vdp-forced", "--g", "x", "--branch", "minus"),
    ("lienard", "--c2", "1", "--P", "tanh(x)"),
    ("convective", "--mode", "reverse", "--P", "x", "--Q", "-2", "--U", "0"),
    ("convective", "--mode", "reduce", "--V1=-2/x", "--x0", "1", "--x1", "2"),
    ("burgers", "--family", "rationalH", "--nx", "64", "--nt", "64", "--t-end", "0.1",
     "--phi0", "exp(x/3)", "--boundary", "dirichlet", "--threshold", "1"),
])
def test_runs_are_byte_identical(tmp_path, args):
    first = run(tmp_path, *args, name="a")
    second = run(tmp_path, *args, name="b")
    assert first[0] == second[0] == EXIT_OK
    for name in ["report.json", *first[1]["files"]]:
        a = (first[2] / name).read_bytes()
        b = (second[2] / name).read_bytes()
        if name == "report.json":
            a = a.replace(str(first[2]).encode(), b"")
            b = b.replace(str(second[2]).encode(), b"")
        assert a == b


def test_csv_uses_round_trip_decimals(tmp_path):
    _, rep, out = run(tmp_path, "convective", "--mode", "reverse", "--P", "x", "--Q", "-2",
                      "--U", "0", "--n", "17")
    header, _ = read_csv(out / "coefficients.csv")
    with open(out / "coefficients.csv") as fh:
        fh.readline()
        fields = fh.readline().strip().split(",")
    for text in fields:
        assert repr(float(text)) == text or float(text) == 0.0
