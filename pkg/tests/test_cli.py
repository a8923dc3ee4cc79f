import csv
import io
import subprocess
import sys

import pytest

from conftest import PAPER_CFG
from phonon_optics.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, main, parse_config

BASE = PAPER_CFG.read_text()
# trap frequencies on a 1e5 rad/s grid keep the full-model scan quick
GRID = """\
m = 1.1650347089159927e-26
w0 = 1.5e-6
mu_x = 7e5
mu_y = 4e5
nu_x = 13e5
nu_y = 9e5
omega0 = 1e15
Omega = 1e6
n_max = 2
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_parse_paper_config(paper_run):
    assert paper_run.n_max == 4 and paper_run.ell == 2
    assert paper_run.trap.Omega == 1e7
    assert paper_run.regime.lifetime == 1e-2


@pytest.mark.parametrize(
    "text, message",
    [
        (BASE.replace("mu_x = 7.5e5", "mu_x = -1"), "mu_x must be positive"),
        (BASE + "mu_x = 7.5e5\n", "duplicate key 'mu_x'"),
        (BASE + "colour = blue\n", "unknown key 'colour'"),
        (BASE.replace("n_max = 4", "n_max = 1"), "n_max must be >= 2"),
        (BASE + "steps = 4\n", "steps must be >= 16"),
        (BASE + "just words\n", "expected 'key = value'"),
        (BASE.replace("w0 = 1.5e-6", "w0 = wide"), "w0 must be a number"),
        ("\n".join(l for l in BASE.splitlines() if not l.startswith("omega0")), "missing required key(s): omega0"),
        (BASE.replace("w0 = 1.5e-6", "w0 = 1.5e-9"), "Lamb-Dicke"),
    ],
)
def test_parse_errors(tmp_path, text, message):
    assert text != BASE
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, text))
    assert message in str(exc.value)


def test_parse_error_names_line(tmp_path):
    with pytest.raises(ConfigError, match=r"run.cfg:\d+: mu_x must be positive"):
        parse_config(write(tmp_path, BASE.replace("mu_x = 7.5e5", "mu_x = -1")))


def test_bad_config_exit_code(tmp_path, capsys):
    code, out, err = run(["regime", "--config", write(tmp_path, BASE.replace("mu_x = 7.5e5", "mu_x = -1"))], capsys)
    assert code == EXIT_USAGE and out == "" and "mu_x" in err
    code, _, err = run(["regime", "--config", tmp_path / "absent.cfg"], capsys)
    assert code == EXIT_USAGE and "cannot read" in err


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["truth-table", "--gate", "toffoli", "--config", str(PAPER_CFG)])
    assert exc.value.code == EXIT_USAGE


def test_truth_table_csv_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["truth-table", "--gate", "cnot", "--config", str(PAPER_CFG), "--out", str(a)]) == EXIT_OK
    assert main(["truth-table", "--gate", "cnot", "--config", str(PAPER_CFG), "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("# phonon-optics 0.1.0 truth-table config-sha256=")
    rows = rows_of(text)
    assert rows[0].keys() == {"row", "col", "magnitude", "phase"}
    flipped = [r for r in rows if (r["row"], r["col"]) in {("2", "3"), ("3", "2")}]
    assert all(float(r["magnitude"]) > 1 - 1e-10 for r in flipped)


@pytest.mark.parametrize("gate", ["x", "z", "s"])
def test_truth_table_gates(gate, capsys):
    code, out, _ = run(["truth-table", "--gate", gate, "--config", PAPER_CFG], capsys)
    assert code == EXIT_OK
    assert any(r["row"] == "global_phase" for r in rows_of(out))


@pytest.mark.parametrize(
    "extra",
    [["--kind", "pbs"], ["--kind", "hwp-cm", "--theta", "0.3927"], ["--kind", "hwp-br"],
     ["--kind", "qwp-cm"], ["--kind", "qwp-br", "--k", "2"]],
)
def test_verify_element_passes(extra, capsys):
    code, out, _ = run(["verify-element", "--config", PAPER_CFG, *extra], capsys)
    rows = rows_of(out)
    assert code == EXIT_OK, [r for r in rows if r["pass"] != "true"]
    assert all(r["pass"] == "true" for r in rows)
    assert any(r["check_name"] == "decoupling_purity_loss" for r in rows)


def test_verify_element_deliberate_failure(capsys):
    # the ground state is not the decoupling eigenstate, so purity drops
    code, out, _ = run(["verify-element", "--kind", "pbs", "--prep", "ground", "--config", PAPER_CFG], capsys)
    assert code == EXIT_FAIL
    failed = {r["check_name"] for r in rows_of(out) if r["pass"] == "false"}
    assert "decoupling_purity_loss" in failed


def test_regime_command(capsys):
    code, out, _ = run(["regime", "--config", PAPER_CFG], capsys)
    assert code == EXIT_OK
    assert all(r["pass"] == "true" for r in rows_of(out))


def test_regime_failure_and_skip(tmp_path, capsys):
    code, out, _ = run(["regime", "--config", write(tmp_path, BASE.replace("lifetime = 1e-2", "lifetime = 1e-6"))], capsys)
    assert code == EXIT_FAIL
    bare = "\n".join(l for l in BASE.splitlines() if not l.startswith(("lifetime", "damping", "distance", "n_principal")))
    code, out, _ = run(["regime", "--config", write(tmp_path, bare, "bare.cfg")], capsys)
    assert code == EXIT_OK
    assert all(r["pass"] == "skipped" for r in rows_of(out))


@pytest.mark.parametrize("omegas", ["1e5", "1e5,1e5", "1e5,abc", "1e5,-1"])
def test_rwa_scan_usage_errors(omegas, capsys):
    code, _, err = run(["rwa-scan", "--omegas", omegas, "--config", PAPER_CFG], capsys)
    assert code == EXIT_USAGE and "--omegas" in err


def test_rwa_scan_runs(tmp_path, capsys):
    cfg = write(tmp_path, GRID)
    args = ["rwa-scan", "--kind", "hwp-cm", "--n-max", "2", "--omegas", "3e5,3e4", "--config", cfg]
    code, out, _ = run(args, capsys)
    assert code == EXIT_OK
    rows = rows_of(out)
    assert [float(r["omega"]) for r in rows] == [3e5, 3e4]
    assert float(rows[0]["infidelity"]) > float(rows[1]["infidelity"])
    code, again, _ = run(args, capsys)
    assert again == out


def test_rwa_scan_degenerate_notice(tmp_path, capsys):
    cfg = write(tmp_path, GRID.replace("nu_y = 9e5", "nu_y = 4e5"))
    code, _, err = run(["rwa-scan", "--n-max", "2", "--omegas", "1e5,1e4", "--config", cfg], capsys)
    assert code == EXIT_OK and "degenerate" in err


def test_module_entry_point_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "phonon_optics", "verify-element", "--kind", "pbs", "--prep", "ground",
         "--config", str(PAPER_CFG)],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_FAIL
    assert proc.stdout.startswith("# phonon-optics")
