import csv
import io
import json

import pytest

from yamabe_bubbles.cli import EXIT_OK, EXIT_TOL, EXIT_USAGE, EXIT_VERIFY, FIT_HEADER, SWEEP_HEADER, main
from yamabe_bubbles.config import OUTPUT_DIR_ENV


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(autouse=True)
def _no_output_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def test_spectrum_flags_degenerate_product():
    code, out, _ = run("spectrum", "--kind", "product", "--n", "6", "--r", "0.5")
    assert code == EXIT_OK
    assert "verdict: degenerate (i=1)" in out


def test_spectrum_nondegenerate_product():
    code, out, _ = run("spectrum", "--kind", "product", "--n", "6", "--r", "0.7")
    assert code == EXIT_OK and "verdict: nondegenerate" in out


def test_constants_ten_prints_weyl_ratio():
    code, out, _ = run("constants", "--n", "10")
    assert code == EXIT_OK
    (line,) = [ln for ln in out.splitlines() if "5/567" in ln]
    ratio = float(line.split("=")[1].split("(")[0])
    assert ratio == pytest.approx(5 / 567, rel=1e-12)


def test_constants_six():
    code, out, _ = run("constants", "--n", "6")
    keys = {ln.split(" = ")[0] for ln in out.splitlines() if " = " in ln}
    assert code == EXIT_OK and {"K_n", "beta_n", "c3", "c4", "c5", "six_factor"} <= keys
    assert "weyl_coeff" not in keys


def test_verify_all_quick_exits_zero():
    code, out, _ = run("verify-all", "--quick")
    assert code == EXIT_OK
    assert out.rstrip().splitlines()[-1].startswith("== overall: PASS")


def test_verify_exit_code_constant():
    assert EXIT_VERIFY == 1


def test_expand_csv_header_and_rows():
    code, out, _ = run("expand", "--n", "5", "--t", "0.5,1", "--eps", "logspace(-4,-2,3)")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == SWEEP_HEADER and len(rows) == 7
    assert rows[1][0] == "0.0001" and rows[1][1] == "0.5"


def test_sweep_output_is_byte_identical():
    argv = ("residual", "--kind", "product", "--n", "5", "--r", "0.7", "--eps", "1e-3,1e-2", "--t", "1")
    assert run(*argv)[1] == run(*argv)[1]
    assert run(*argv)[1].splitlines()[0] == ",".join(SWEEP_HEADER)


def test_energy_skips_inadmissible_eps():
    code, out, err = run("energy", "--n", "9", "--kind", "product", "--r", "0.26", "--t", "2",
                         "--eps", "1e-4,0.5")
    assert code == EXIT_OK
    assert len(out.splitlines()) == 2 and "skipped eps=0.5" in err


def test_rates_header():
    code, out, _ = run("rates", "--kind", "product", "--n", "5", "--r", "0.7", "--t", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK and tuple(rows[0]) == FIT_HEADER
    assert set(FIT_HEADER) >= {"slope", "intercept", "model", "rss"}
    assert rows[1][3] == "power_log" and abs(float(rows[1][1]) - 1) <= 0.1


def test_reduce_reports_prediction_on_stderr():
    code, out, err = run("reduce", "--kind", "product", "--n", "4", "--r", "0.7", "--regime", "Geometric39",
                         "--u0-amplitude", "0.2", "--xi-count", "16")
    assert code == EXIT_OK
    assert "xi* =" in err and "strict_local_min = True" in err
    assert out.splitlines()[0] == "xi,phi,t_star,g_min"


def test_reduce_no_certificate():
    code, _, err = run("reduce", "--n", "10", "--regime", "Dim10Weyl", "--weyl2", "1e6")
    assert code == EXIT_OK and "no blow-up certificate" in err


def test_json_output():
    code, out, _ = run("expand", "--n", "4", "--t", "1", "--eps", "1e-3,1e-2", "--json")
    data = json.loads(out)
    assert code == EXIT_OK and list(data[0]) == list(SWEEP_HEADER) and len(data) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    code, out, _ = run("expand", "--n", "4", "--t", "1", "--eps", "1e-3,1e-2")
    assert code == EXIT_OK and "wrote" in out
    assert (tmp_path / "expand.csv").read_text().splitlines()[0] == ",".join(SWEEP_HEADER)


def test_explicit_output_file(tmp_path):
    target = tmp_path / "sub" / "x.csv"
    code, _, _ = run("expand", "--n", "4", "--t", "1", "--eps", "1e-3,1e-2", "--output", str(target))
    assert code == EXIT_OK and target.exists()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[manifold]\nkind = product\nn = 5\nr = 0.7\n\n[grids]\nt = 1\neps = 1e-3, 1e-2\n")
    code, out, _ = run("expand", "--config", str(cfg))
    assert code == EXIT_OK and len(out.splitlines()) == 3
    code, out, _ = run("expand", "--config", str(cfg), "--kind", "sphere")
    assert code == EXIT_OK


@pytest.mark.parametrize("argv", [
    ("spectrum", "--kind", "product", "--n", "5"),            # product needs r
    ("constants", "--n", "2"),
    ("expand", "--n", "7", "--regime", "Generic36"),
    ("expand", "--eps", "logspace(1,2)"),
    ("energy", "--n", "4", "--non-conformal"),
    ("residual", "--kind", "product", "--n", "4", "--r", "0.5", "--non-conformal"),
    ("reduce", "--xi-count", "2"),
    ("expand", "--config", "/nonexistent/run.ini"),
    ("bogus",),
    ("spectrum", "--n", "four"),
])
def test_usage_errors_exit_two(argv):
    assert run(*argv)[0] == EXIT_USAGE


def test_tolerance_failure_exits_three():
    code, _, err = run("residual", "--n", "4", "--eps", "1e-3", "--t", "1", "--max-depth", "2", "--rel-tol", "1e-14")
    assert code == EXIT_TOL and "tolerance failure" in err
    code, _, _ = run("energy", "--n", "4", "--eps", "1e-3", "--t", "1", "--max-depth", "2", "--rel-tol", "1e-14")
    assert code == EXIT_TOL
