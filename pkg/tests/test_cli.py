import csv
import subprocess
import sys

import pytest

from fovloc.cli import main
from fovloc.replay import LOG_COLUMNS

GOLDEN_DEFAULTS = """\
sensor=fov
policy=greedy
area_side_m=200.0
cell_side_m=5.0
cone_width_deg=120.0
mistake_rate=0.1
sigma_deg=5.0
rotation_time_s=24.0
sample_rate_hz=1.0
speed_mps=5.0
heading_rate_dps=10.0
maxnorm_threshold=0.5
timeout_s=3600.0
source_placement=cell
bearing_filter=binned
seed=0
trials=1000
jobs=1
"""


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as e:
        code = e.code
    out, err = capsys.readouterr()
    return code, out, err


def test_dump_config_golden(capsys):
    code, out, _ = run(capsys, "dump-config")
    assert code == 0 and out == GOLDEN_DEFAULTS


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# baseline tweaks\ncone_width_deg = 180\nmistake_rate=0.01\nseed=7\n")
    code, out, _ = run(capsys, "dump-config", "--config", str(cfg), "--mu", "0.05")
    assert code == 0
    assert "cone_width_deg=180.0\n" in out and "mistake_rate=0.05\n" in out and "seed=7\n" in out


@pytest.mark.parametrize("text", ["bogus_key=1\n", "cone_width_deg\n", "seed=abc\n"])
def test_bad_config_file_is_usage_error(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(capsys, "dump-config", "--config", str(cfg))
    assert code == 2 and "bad.cfg:1" in err


@pytest.mark.parametrize("argv", [
    ["simulate", "--trials", "0"],
    ["simulate", "--sensor", "radar"],
    ["simulate", "--alpha", "200"],
    ["simulate", "--sensor", "rfb", "--policy", "random"],
    ["sweep", "spiral"],
    ["sweep", "cone", "--alphas", "120,abc"],
    ["sweep", "cone", "--alphas", "200"],
    ["sweep", "rate", "--rates", "0"],
    ["replay", "--log", "x.csv", "--alpha", "200"],
    ["replay"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_replay_missing_file_exit_1(tmp_path, capsys):
    code, out, err = run(capsys, "replay", "--log", str(tmp_path / "nope.csv"))
    assert code == 1 and out == "" and "nope.csv" in err


def test_replay_malformed_exit_1(tmp_path, capsys):
    p = tmp_path / "log.csv"
    p.write_text(",".join(LOG_COLUMNS) + "\n0,0,0,0,10,0,7\n")
    code, _, err = run(capsys, "replay", "--log", str(p))
    assert code == 1 and "line 2" in err


def test_replay_report_and_csv(tmp_path, capsys):
    p = tmp_path / "flight.csv"
    p.write_text(",".join(LOG_COLUMNS) + ",tag\n0,0,0,0,10,0,1,a\n1,0,0,0,-10,0,1,b\n2,0,0,0,0,10,1,a\n")
    out_csv = tmp_path / "stats.csv"
    code, out, _ = run(capsys, "replay", "--log", str(p), "--alpha", "120", "--out", str(out_csv),
                       "--by-tag")
    assert code == 0
    assert "mistake rate estimate:   0.5000" in out and "fraction z=1:            1.0000" in out
    assert "[tag a]" in out and "[tag b]" in out
    row = next(csv.DictReader(open(out_csv)))
    assert row["in_cone_total"] == "2" and row["mistake_rate_hat"] == "0.5"


def test_simulate_writes_csv_and_is_deterministic(tmp_path, capsys):
    out = tmp_path / "runs" / "fov.csv"
    argv = ["simulate", "--trials", "3", "--seed", "7", "--out", str(out)]
    code, stdout, _ = run(capsys, *argv, "--trajectory-dir", str(tmp_path / "traj"),
                          "--belief-dir", str(tmp_path / "bel"))
    assert code == 0 and stdout.startswith("fov-greedy n=3 mean_s=")
    first = out.read_bytes()
    rows = list(csv.DictReader(open(out)))
    assert [r["seed"] for r in rows] == ["7", "8", "9"]
    assert sorted(p.name for p in (tmp_path / "traj").iterdir()) == [
        "trajectory_7.csv", "trajectory_8.csv", "trajectory_9.csv"]
    assert len((tmp_path / "bel" / "belief_8.csv").read_text().splitlines()) == 1601
    code, _, _ = run(capsys, *argv, "--jobs", "2")
    assert code == 0 and out.read_bytes() == first


def test_sweep_rate_rows(tmp_path, capsys):
    out = tmp_path / "rate.csv"
    code, stdout, _ = run(capsys, "sweep", "rate", "--rates", "1,5", "--trials", "2", "--out", str(out))
    assert code == 0 and len(stdout.splitlines()) == 2
    rows = list(csv.DictReader(open(out)))
    assert [r["sample_rate_hz"] for r in rows] == ["1.0", "5.0"]


def test_sweep_cone_rows(tmp_path, capsys):
    out = tmp_path / "cone.csv"
    code, _, _ = run(capsys, "sweep", "cone", "--alphas", "160,180", "--mus", "0.1,0.01",
                     "--trials", "1", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    assert [(r["mu"], r["alpha_deg"]) for r in rows] == [
        ("0.1", "160.0"), ("0.1", "180.0"), ("0.01", "160.0"), ("0.01", "180.0")]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fovloc", "dump-config"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == GOLDEN_DEFAULTS
