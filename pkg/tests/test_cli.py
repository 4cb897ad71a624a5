import csv
import io
import json
import subprocess
import sys

import pytest

from beamsnr.cli import main, parse_snr_grid


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_snr_grid():
    assert parse_snr_grid("0:10:5") == [0.0, 5.0, 10.0]
    assert parse_snr_grid("-10:30:2")[-1] == 30.0
    assert parse_snr_grid("0, 10,20") == [0.0, 10.0, 20.0]
    for bad in ("1:0:1", "0:10", "a,b", "0:10:0"):
        with pytest.raises(Exception):
            parse_snr_grid(bad)


def test_schedule_command(capsys):
    code, out, _ = run(["schedule", "--M", "64"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert (float(row["gamma1"]), float(row["gamma2"]), float(row["gamma3"])) == (4.0, 1.0, 0.5)
    assert (row["M1"], row["M2"], row["z1"]) == ("16", "24", "2")
    code, out, _ = run(["schedule", "--M", "64", "--alpha", "0.01", "--M1", "32", "--M2", "56",
                        "--format", "json"], capsys)
    d = json.loads(out)
    assert d["z"] == [-5, -6, -5] and d["alpha"] == 0.01


def test_sweep_csv_to_file(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, stdout, _ = run(["--seed", "5", "sweep", "--M", "16", "--L", "2", "--snr", "0,10", "--trials", "20",
                           "--estimators", "proposed_dynamic,mad", "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["estimator"] for r in rows] == ["proposed_dynamic", "mad"] * 2
    assert all(r["trials"] == "20" for r in rows)


def test_sweep_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"M": 16, "L": 2, "snr_grid": [0], "trials": 10, "estimators": ["mad"]}))
    code, out, _ = run(["sweep", "--config", str(cfg), "--trials", "7", "--format", "json"], capsys)
    body = json.loads(out)
    assert code == 0 and body["config"]["trials"] == 7 and body["records"][0]["trials"] == 7


def test_sweep_seed_controls_output(capsys):
    args = ["sweep", "--M", "16", "--L", "2", "--snr", "10", "--trials", "30", "--estimators", "mad"]
    a = run(["--seed", "1"] + args, capsys)[1]
    b = run(args + ["--seed", "1"], capsys)[1]
    c = run(["--seed", "2"] + args, capsys)[1]
    assert a == b and a != c


def test_orderstat_command(capsys):
    code, out, err = run(["orderstat", "--M", "8", "--trials", "20000", "--seed", "3"], capsys)
    assert code == 0 and "mean_ok=True" in err
    assert len(out.strip().splitlines()) == 8


def test_estimate_command(tmp_path, capsys):
    f = tmp_path / "w.txt"
    f.write_text("1,0\n" * 6 + "10,0\n10,0\n")
    code, out, _ = run(["estimate", str(f), "--domain", "beamspace", "--gamma", "4", "--format", "json"], capsys)
    d = json.loads(out)
    assert code == 0 and d["estimate"]["m_star"] == 6 and d["estimate"]["n0_hat"] == 1.0
    trace = tmp_path / "t.txt"
    code, out, _ = run(["estimate", str(f), "--domain", "beamspace", "--gamma", "4", "--fx", "headroom",
                        "--trace", str(trace)], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["fx_m_star"] == "6"
    assert trace.read_text().splitlines()[-1].endswith("done flags=-")


def test_estimate_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1,0\n1,0\n1;0\n1,0\n")
    out = tmp_path / "o.json"
    code, _, err = run(["estimate", str(bad), "--out", str(out)], capsys)
    assert code == 2 and "line 3, column 4" in err and not out.exists()
    odd = tmp_path / "odd.txt"
    odd.write_text("1,0\n" * 3)
    code, _, err = run(["estimate", str(odd)], capsys)
    assert code == 2 and "power of two" in err
    code, _, err = run(["estimate", str(tmp_path / "missing.txt")], capsys)
    assert code == 2
    code, _, err = run(["estimate", str(odd), "--trace", "t.txt"], capsys)
    assert code == 2 and "--fx" in err


def test_fxcompare_command(capsys):
    code, out, _ = run(["fxcompare", "--M", "64", "--snr", "0", "--trials", "100", "--seed", "4"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(row["sort_exact"]) == 1.0


def test_invalid_config_exit_code(capsys):
    code, _, err = run(["sweep", "--M", "12"], capsys)
    assert code == 2 and "power of two" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "beamsnr", "schedule", "--M", "8"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("M,alpha")
