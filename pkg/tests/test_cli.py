import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from supchain.chaining import ChainingParams, tail_bound
from supchain.cli import BOUND_COLUMNS, REPORT_COLUMNS, fmt, main, read_report_csv
from supchain.metric import build_partition_family
from supchain.montecarlo import ExperimentConfig, theory_for

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv_rows(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def test_bound_acceptance_matches_tail_bound(capsys):
    assert main(["bound", "--config", str(CONFIGS / "acceptance.toml")]) == 0
    header, rows = read_csv_rows(capsys.readouterr().out)
    assert tuple(header) == BOUND_COLUMNS
    exp = ExperimentConfig(replicates=10_000)
    fam = build_partition_family(n_max=20)
    for row in rows:
        eps = float(row["eps"])
        b, v, _ = theory_for(exp, eps, fam)
        rep = tail_bound(exp.params, fam, b, v)
        assert float(row["b_eps"]) == b and float(row["var_t0"]) == v
        assert float(row["total_bound"]) == rep.total_bound
        assert float(row["chain_bound"]) == rep.chain_bound
        assert float(row["constant_C"]) == rep.constant


def test_bound_rows_zero_b(capsys):
    assert main(["bound", "--config", str(CONFIGS / "bound_rows.toml")]) == 0
    _, rows = read_csv_rows(capsys.readouterr().out)
    first = rows[0]
    assert float(first["chain_bound"]) == 0.0
    assert float(first["total_bound"]) == float(first["center_bound"]) == pytest.approx(4 * 0.01 / 0.25)
    fam = build_partition_family(n_max=20)
    rep = tail_bound(ChainingParams(1.0, 2.0, 0.5, 0.5), fam, 1e-6, 1e-3)
    assert float(rows[1]["total_bound"]) == rep.total_bound


def test_bound_hypothesis_violation(tmp_path, capsys):
    cfg = write(tmp_path, "[chaining]\nalpha = 1.0\nbeta = 2.0\ngamma = 1.0\ndelta = 0.5\n")
    assert main(["bound", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "hypothesis violation" in err and "gamma < alpha" in err


def test_unknown_key_names_key(tmp_path, capsys):
    cfg = write(tmp_path, "[chaining]\nalpha = 1.0\nbogus_key = 3\n")
    assert main(["bound", "--config", cfg]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_out_of_range_value_names_key(tmp_path, capsys):
    cfg = write(tmp_path, "[experiment]\nreplicates = 10\n")
    assert main(["sweep", "--config", cfg]) == 2
    assert "replicates" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["bound", "--config", str(tmp_path / "nope.toml")]) == 1


def test_unwritable_out_is_io_error(tmp_path, capsys):
    cfg = str(CONFIGS / "acceptance.toml")
    assert main(["bound", "--config", cfg, "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == 1


SMALL = ["--reps", "300", "--grid-exponent", "6"]


def test_sweep_csv_and_json(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(CONFIGS / "acceptance.toml"), "--out", str(out), *SMALL]) == 0
    rows = read_report_csv(out)
    assert out.read_text().splitlines()[0] == ",".join(REPORT_COLUMNS)
    assert [r["eps"] for r in rows] == [0.2, 0.1, 0.05, 0.02]
    assert all(r["replicates"] == 300 and r["seed"] == 20100531 for r in rows)
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["pass"] is True
    assert {c["name"] for c in summary["checks"]} >= {"bound_domination", "vanishing_limit"}


def test_sweep_byte_identical_rerun(tmp_path):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    base = ["sweep", "--config", str(CONFIGS / "acceptance.toml"), *SMALL]
    assert main([*base, "--out", str(a)]) == 0
    assert main([*base, "--out", str(b), "--workers", "3"]) == 0
    assert main([*base, "--out", str(c), "--seed", "7"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_csv_round_trip(tmp_path):
    from supchain.montecarlo import run_sweep

    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(CONFIGS / "acceptance.toml"), "--out", str(out), *SMALL]) == 0
    res = run_sweep(ExperimentConfig(replicates=300, grid_exponent=6))
    for parsed, row in zip(read_report_csv(out), res.rows):
        for col in REPORT_COLUMNS:
            assert parsed[col] == getattr(row, col)


@pytest.mark.parametrize("x", [0.1, 1 / 3, 2.0**-1074, 1e308, math.pi * 1e-7])
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_sweep_indicator_all_one(tmp_path):
    out = tmp_path / "i.csv"
    assert main(["sweep", "--config", str(CONFIGS / "indicator.toml"), "--out", str(out), "--reps", "300"]) == 0
    assert all(r["empirical_prob"] == 1.0 for r in read_report_csv(out))
    summary = json.loads(out.with_suffix(".json").read_text())
    dom = next(c for c in summary["checks"] if c["name"] == "bound_domination")
    assert not dom["hard"]


def test_sweep_stdout_mode(capsys):
    assert main(["sweep", "--config", str(CONFIGS / "acceptance.toml"), *SMALL]) == 0
    cap = capsys.readouterr()
    header, rows = read_csv_rows(cap.out)
    assert tuple(header) == REPORT_COLUMNS and len(rows) == 4
    assert json.loads(cap.err)["pass"] is True


def test_audit_linear(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["audit", "--config", str(CONFIGS / "acceptance.toml"), "--out", str(out), "--reps", "2000"]) == 0
    kernel = (tmp_path / "a.kernel.csv").read_text().splitlines()
    rec = dict(zip(kernel[0].split(","), kernel[1].split(",")))
    assert float(rec["worst_ratio"]) == 1.0 and rec["passed"] == "true"
    _, rows = read_csv_rows(out.read_text())
    same = next(r for r in rows if r["s"] == r["t"])
    assert float(same["mc_moment"]) == 0.0


def test_audit_indicator_bound_column(capsys):
    assert main(["audit", "--config", str(CONFIGS / "indicator.toml"), "--reps", "2000"]) == 0
    _, rows = read_csv_rows(capsys.readouterr().out)
    row = next(r for r in rows if (float(r["s"]), float(r["t"])) == (0.2, 0.25))
    assert float(row["bound"]) == pytest.approx(0.1)


def test_audit_misdeclared_kernel(capsys):
    assert main(["audit", "--config", str(CONFIGS / "sinusoid_misdeclared.toml"), "--reps", "200"]) == 3
    err = capsys.readouterr().err
    assert "worst" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "supchain", "bound", "--config", str(CONFIGS / "bound_rows.toml")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith(",".join(BOUND_COLUMNS))
