from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from chiral_eq.cli import main
from chiral_eq.io import read_table


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_to_file(argv, tmp_path, name="out.txt"):
    path = tmp_path / name
    code = main([*argv, "--output-path", str(path)])
    return code, path


# ---------------------------------------------------------------- density


def test_density_semicircle(capsys):
    code, out, err = run(["density", "--beta", "2", "--c", "0", "--grid", "101"], capsys)
    assert code == 0 and err == ""
    table = read_table(out)
    assert table.columns == ("t", "f", "F")
    assert len(table.rows) == 101
    row0 = next(r for r in table.rows if r[0] == 0)
    assert row0[1] == pytest.approx(0.4501581580, abs=1e-10)
    assert row0[2] == pytest.approx(0.5, abs=1e-12)
    assert table.header["b"] == pytest.approx(math.sqrt(2))
    ts = table.column("t")
    assert ts[0] == pytest.approx(-math.sqrt(2) - 0.25) and ts[-1] == pytest.approx(math.sqrt(2) + 0.25)


def test_density_two_cut_header(capsys):
    code, out, _ = run(["density", "--beta", "2", "--c", "1", "--grid", "101"], capsys)
    header = read_table(out).header
    assert code == 0
    assert header["a"] == pytest.approx(0.5176380902, abs=1e-10)
    assert header["b"] == pytest.approx(1.9318516526, abs=1e-10)
    assert set(header) >= {"beta", "c", "a", "b"}


def test_missing_beta_writes_nothing(tmp_path, capsys):
    code, path = run_to_file(["density", "--c", "1"], tmp_path)
    err = capsys.readouterr().err
    assert code == 2
    assert not path.exists()
    assert len(err.strip().splitlines()) == 1 and "--beta" in err


# ---------------------------------------------------------------- energy and potential


def test_energy(capsys):
    code, out, _ = run(["energy", "--beta", "2", "--c", "1"], capsys)
    table = read_table(out)
    assert code == 0
    values = dict(table.rows)
    assert abs(values["closed_form"] - values["quadrature"]) <= 1e-4
    assert table.summary["E_star"] == pytest.approx(1.5109903019, abs=1e-9)


def test_verify_variational_passes(capsys):
    code, out, _ = run(["verify-variational", "--beta", "2", "--c", "1"], capsys)
    table = read_table(out)
    assert code == 0
    assert table.columns == ("x", "phi", "region")
    assert set(table.column("region")) == {"support", "gap", "exterior"}
    assert table.summary["flatness"] <= 1e-5
    assert table.summary["min_excess_off_support"] >= -1e-6


def test_verify_variational_semicircle_constant(capsys):
    code, out, _ = run(["verify-variational", "--beta", "2", "--c", "0"], capsys)
    assert code == 0
    assert read_table(out).summary["C"] == pytest.approx(0.5 + 0.5 * math.log(2), abs=1e-10)


def test_verify_variational_failure_exit_code(capsys, monkeypatch):
    import chiral_eq.cli as cli

    monkeypatch.setattr(cli, "FLATNESS_TOL", 1e-30)
    code, out, _ = run(["verify-variational", "--beta", "2", "--c", "1", "--grid", "10"], capsys)
    assert code == 1
    assert read_table(out).summary["passed"] is False


def test_grid_zero(capsys):
    code, out, err = run(["verify-variational", "--beta", "2", "--c", "0", "--grid", "0"], capsys)
    assert code == 2 and out == "" and err.startswith("chiral-eq: error:")


def test_transform(capsys):
    code, out, _ = run(["transform", "--beta", "2", "--c", "1", "--grid", "41"], capsys)
    table = read_table(out)
    assert code == 0
    assert table.columns == ("x", "re_G", "im_G", "inversion", "f")
    assert table.summary["max_abs_error"] <= 1e-4


# ---------------------------------------------------------------- sampling


def test_compare_passes(capsys):
    code, out, _ = run(["compare", "--beta", "2", "--c", "0", "--n", "64", "--sweeps", "50000", "--seed", "7"], capsys)
    table = read_table(out)
    assert code == 0
    assert table.summary["ks"] <= 0.05
    assert table.columns == ("bin_lo", "bin_hi", "empirical_density", "theory_density")
    assert len(table.rows) == 80


def test_compare_insufficient_mixing(capsys):
    code, out, _ = run(["compare", "--beta", "2", "--c", "0", "--n", "64", "--sweeps", "10", "--seed", "7"], capsys)
    assert code == 1
    assert read_table(out).summary["ks"] > 0.05


def test_compare_threshold_flag(capsys):
    argv = ["compare", "--beta", "2", "--c", "0", "--n", "16", "--sweeps", "10", "--seed", "7", "--ks-threshold", "1"]
    assert run(argv, capsys)[0] == 0


@pytest.mark.parametrize("command", ["compare", "sample"])
def test_seed_required(command, capsys):
    code, out, err = run([command, "--beta", "2", "--n", "8", "--sweeps", "100"], capsys)
    assert code == 2 and out == "" and "--seed" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--beta", "2", "--seed", "1"],
        ["energy", "--beta", "2", "--seed", "1"],
        ["fekete", "--beta", "2", "--n", "4", "--seed", "1"],
        ["free-energy", "--c", "0", "--n-max", "10", "--seed", "1"],
    ],
)
def test_seed_forbidden(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2 and out == "" and "--seed" in err


def test_sample_output(capsys):
    code, out, _ = run(["sample", "--beta", "2", "--c", "1", "--n", "4", "--sweeps", "200", "--seed", "3", "--chains", "2"], capsys)
    table = read_table(out)
    assert code == 0
    assert table.columns == ("chain_id", "sweep", "i", "lambda")
    assert len(table.rows) == 2 * 180 * 4
    assert {r[0] for r in table.rows} == {0, 1}
    assert table.header["seed"] == 3
    assert 0 <= table.summary["acceptance_rate"] <= 1


def test_sample_resource_cap(capsys):
    code, _, err = run(["sample", "--beta", "2", "--n", "100000", "--sweeps", "100000", "--seed", "1"], capsys)
    assert code == 2 and "cap" in err


# ---------------------------------------------------------------- fekete and free energy


def test_fekete(capsys):
    code, out, _ = run(["fekete", "--beta", "2", "--c", "1", "--n", "16"], capsys)
    table = read_table(out)
    assert code == 0
    assert len(table.rows) == 16
    assert table.summary["grad_norm"] <= 1e-6
    assert table.summary["tau_n"] == pytest.approx(table.summary["k_n"] / (16 * 15))


def test_fekete_nonconvergence_exit_1(capsys):
    code, out, _ = run(["fekete", "--beta", "2", "--c", "1", "--n", "16", "--max-iters", "1"], capsys)
    assert code == 1
    assert read_table(out).summary["converged"] is False


def test_fekete_n1(capsys):
    assert run(["fekete", "--beta", "2", "--n", "1"], capsys)[0] == 2


def test_free_energy_c0(capsys):
    code, out, _ = run(["free-energy", "--c", "0", "--n-max", "400"], capsys)
    table = read_table(out)
    assert code == 0
    assert table.columns == ("n", "log_An", "scaled", "gap")
    assert table.summary["E_star"] == pytest.approx(1.0965735903, abs=1e-10)
    assert abs(table.summary["final_gap"]) <= 0.02
    assert table.rows[0][0] == 2 and table.rows[-1][0] == 400


def test_free_energy_c1(capsys):
    code, out, _ = run(["free-energy", "--c", "1", "--n-max", "400"], capsys)
    assert code == 0
    assert read_table(out).summary["E_star"] == pytest.approx(1.5109896942, abs=1e-6)


def test_free_energy_small_n_max_not_gap_checked(capsys):
    code, out, _ = run(["free-energy", "--c", "0", "--n-max", "20"], capsys)
    summary = read_table(out).summary
    assert code == 0 and abs(summary["final_gap"]) > 0.02


def test_free_energy_n_max_1(capsys):
    assert run(["free-energy", "--c", "0", "--n-max", "1"], capsys)[0] == 2


# ---------------------------------------------------------------- usage errors


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["density", "--beta", "0"],
        ["density", "--beta", "-1"],
        ["density", "--beta", "nan"],
        ["density", "--beta", "two"],
        ["density", "--beta", "2", "--c", "-1"],
        ["density", "--beta", "2", "--format", "xml"],
        ["density", "--beta", "2", "--grid", "-3"],
        ["transform", "--beta", "2", "--eps", "0"],
        ["compare", "--beta", "2", "--n", "8", "--sweeps", "10", "--burn-in", "10", "--seed", "1"],
        ["sample", "--beta", "2", "--n", "8", "--sweeps", "10", "--seed", "-4"],
        ["free-energy", "--beta", "2", "--c", "0", "--n-max", "10"],
    ],
)
def test_usage_errors(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2
    assert out == ""
    assert len(err.strip().splitlines()) == 1


# ---------------------------------------------------------------- reproducibility and formats


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--beta", "2", "--c", "1", "--grid", "31"],
        ["energy", "--beta", "4", "--c", "0.5"],
        ["verify-variational", "--beta", "2", "--c", "1", "--grid", "20"],
        ["transform", "--beta", "2", "--c", "1", "--grid", "15"],
        ["sample", "--beta", "2", "--c", "0.5", "--n", "6", "--sweeps", "300", "--seed", "9", "--chains", "3"],
        ["compare", "--beta", "2", "--c", "0.5", "--n", "6", "--sweeps", "300", "--seed", "9"],
        ["fekete", "--beta", "2", "--c", "1", "--n", "12"],
        ["free-energy", "--c", "0.5", "--n-max", "60"],
    ],
)
def test_byte_identical_and_cross_format(argv, tmp_path):
    paths = {}
    for fmt in ("csv", "json"):
        for k in range(2):
            code, path = run_to_file([*argv, "--format", fmt], tmp_path, f"{fmt}{k}")
            assert code in (0, 1)
            paths[fmt, k] = path
        assert paths[fmt, 0].read_bytes() == paths[fmt, 1].read_bytes()
    csv_t = read_table(paths["csv", 0].read_text(), "csv")
    json_t = read_table(paths["json", 0].read_text(), "json")
    assert csv_t.columns == json_t.columns
    assert csv_t.header == json_t.header
    assert csv_t.summary == json_t.summary
    assert len(csv_t.rows) == len(json_t.rows)
    for r1, r2 in zip(csv_t.rows, json_t.rows):
        assert list(r1) == list(r2)
    json.loads(paths["json", 0].read_text())


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "d.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "chiral_eq.cli", "density", "--beta", "2", "--grid", "5", "--output-path", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert out.read_text().startswith("# {")
    proc = subprocess.run([sys.executable, "-m", "chiral_eq.cli", "density"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout == ""
