import csv
import io
import subprocess
import sys

import pytest

from lambertmc.cli import PRICE_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    lines = out.splitlines()
    assert lines[0].startswith("# lambertmc ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


STOCK_SWEEP = ("price", "--preset", "table1", "--gamma", "0.5", "--payoff", "stock",
               "--sweep", "rho", "-0.95", "0.95", "39", "--seed", "7", "--samples", "500")


def test_price_sweep_structure(capsys):
    code, out, _ = run(capsys, *STOCK_SWEEP)
    assert code == 0
    rows = table(out)
    assert len(rows) == 39
    assert list(rows[0]) == list(PRICE_COLUMNS)
    rhos = [float(r["rho"]) for r in rows]
    assert rhos == sorted(rhos) and rhos[0] == -0.95 and rhos[-1] == pytest.approx(0.95)
    assert sum(int(r["rho_star_marker"]) for r in rows) == 1
    for r in rows:
        assert float(r["D"]) <= float(r["g"])
        assert float(r["p_lambert_ci_lo"]) <= float(r["p_lambert"]) <= float(r["p_lambert_ci_hi"])


def test_header_records_parameters(capsys):
    _, out, _ = run(capsys, *STOCK_SWEEP)
    head = out.splitlines()[0]
    for token in ("command=price", "gamma=0.5", "seed=7", "samples=500", "sweep=rho:-0.95:0.95:39", "T=0.25"):
        assert token in head


def test_byte_identical_reruns_and_threads(capsys):
    a = run(capsys, *STOCK_SWEEP)[1]
    b = run(capsys, *STOCK_SWEEP)[1]
    c = run(capsys, *STOCK_SWEEP, "--threads", "4")[1]
    assert a == b == c


def test_simulate_thread_invariance(capsys):
    args = ("simulate", "--preset", "table2", "--gamma", "0.1", "--rho", "0.2", "--paths", "3000",
            "--steps", "20", "--seed", "3")
    assert run(capsys, *args)[1] == run(capsys, *args, "--threads", "3")[1]


def test_put_sweep_flags_violations(capsys):
    code, out, _ = run(capsys, "price", "--preset", "table2", "--gamma", "0.1", "--payoff", "put", "--K", "1",
                       "--sweep", "rho", "-0.8", "0.8", "3", "--samples", "200")
    assert code == 0
    rows = table(out)
    assert rows[-1]["condition_violated"] == "1"
    assert rows[-1]["p_lambert"] == ""
    assert rows[-1]["p_direct"] != ""


def test_put_point_violation_exits_2(capsys):
    code, _, err = run(capsys, "price", "--preset", "table2", "--gamma", "0.1", "--payoff", "put", "--K", "1",
                       "--rho", "0.8", "--samples", "200")
    assert code == 2
    assert "put admissibility" in err


def test_put_point_ok(capsys):
    code, out, _ = run(capsys, "price", "--preset", "table1", "--gamma", "0.5", "--payoff", "put", "--K", "110",
                       "--rho", "0.0", "--samples", "2000")
    rows = table(out)
    assert code == 0 and len(rows) == 1 and rows[0]["condition_violated"] == "0"


def test_rho_star_table(capsys):
    code, out, _ = run(capsys, "analyze", "rho-star", "--preset", "table2", "--gamma", "0.2",
                       "--T-list", "0.01,0.1,0.5,0.8,1")
    assert code == 0
    got = [float(r["rho_star"]) for r in table(out)]
    assert got == pytest.approx([0.310, 0.321, 0.357, 0.379, 0.391], abs=1e-3)


def test_ratio_bounds_summary(capsys):
    code, out, _ = run(capsys, "analyze", "ratio-bounds", "--preset", "table3")
    summary = [r for r in table(out) if r["kind"] == "summary"][0]
    assert float(summary["lower_e"]) == pytest.approx(0.6376, abs=5e-5)
    assert float(summary["upper_e"]) == pytest.approx(3.2112, abs=5e-5)


def test_gamma_profile_check(capsys):
    code, out, _ = run(capsys, "analyze", "gamma-profile", "--preset", "table1", "--check-decreasing")
    assert code == 0
    assert len(table(out)) >= 2


@pytest.mark.parametrize("what", ["limits", "monotonicity", "lower-bounds", "taylor", "call-thresholds"])
def test_other_analyses_run(capsys, what):
    extra = ("--K", "100") if what == "call-thresholds" else ()
    code, out, _ = run(capsys, "analyze", what, "--preset", "table1", "--gamma", "0.5", *extra)
    assert code == 0
    assert table(out)


def test_value_analysis(capsys):
    code, out, _ = run(capsys, "analyze", "value", "--preset", "table2", "--gamma", "0.1", "--rho", "-0.8",
                       "--round", "4")
    rows = table(out)
    assert code == 0
    assert float(rows[0]["V_D"]) == pytest.approx(-1.035, abs=5e-4)
    assert float(rows[0]["V_G"]) == pytest.approx(-0.982, abs=5e-4)


def test_round_flag(capsys):
    _, out, _ = run(capsys, "analyze", "ratio-bounds", "--preset", "table1", "--round", "4")
    row = table(out)[0]
    assert row["lower_e"] == "0.9888"


def test_simulate_superhedge_columns(capsys):
    code, out, _ = run(capsys, "simulate", "--preset", "table2", "--gamma", "0.1", "--rho", "0.2", "--paths", "500",
                       "--steps", "20", "--seed", "3", "--superhedge", "--initial-wealth", "auto")
    row = table(out)[0]
    assert code == 0
    assert float(row["superhedge_ci_lo"]) <= float(row["superhedge_prob"]) <= float(row["superhedge_ci_hi"])
    assert float(row["initial_wealth"]) < 0


def test_simulate_single_path_rejected(capsys):
    code, _, err = run(capsys, "simulate", "--preset", "table2", "--gamma", "0.1", "--paths", "1")
    assert code == 2
    assert "n_paths >= 2" in err


def test_terminals_csv(capsys, tmp_path):
    path = tmp_path / "terms.csv"
    code, _, _ = run(capsys, "simulate", "--preset", "table2", "--gamma", "0.1", "--rho", "0.2", "--paths", "50",
                     "--steps", "5", "--terminals-csv", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert len([ln for ln in lines if not ln.startswith("#")]) == 51


def test_scenario_file_matches_preset(capsys, tmp_path):
    f = tmp_path / "market.txt"
    f.write_text("# reference market\nr=0.001\nT=0.25\ns0=100\nnu=0.2\neta=0.3\nmu=0.1\nsigma=0.2\nlambda=2\n"
                 "gamma=0.5\n")
    a = run(capsys, "analyze", "ratio-bounds", "--scenario-file", str(f), "--round", "6")[1]
    b = run(capsys, "analyze", "ratio-bounds", "--preset", "table1", "--gamma", "0.5", "--round", "6")[1]
    assert table(a) == table(b)


def test_flag_overrides_preset(capsys):
    _, out, _ = run(capsys, "analyze", "limits", "--preset", "table1", "--gamma", "0.5", "--T", "0.5")
    assert "T=0.5" in out.splitlines()[0]


def test_domain_errors_exit_2(capsys):
    assert run(capsys, "price", "--preset", "table1", "--gamma", "-1")[0] == 2
    assert run(capsys, "price", "--preset", "table1", "--gamma", "0.5", "--rho", "1.5")[0] == 2
    assert run(capsys, "price", "--preset", "table1", "--gamma", "0.5", "--payoff", "put")[0] == 2


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "analyze", "limits", "--preset", "table1", "--gamma", "0.5", "-o", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("# lambertmc ")


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "lambertmc", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
