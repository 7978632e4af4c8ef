"""Command-line entry points and exit codes."""

import os
import subprocess
import sys

import pytest

from geogossip import read_csv
from geogossip.cli import main


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["simulate", "--algorithm", "boyd", "--n", "64",
                 "--seed", "0", "--eps", "0.2", "--max-ticks", "100000",
                 "--output", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert f"wrote {out}" in captured.out
    assert "boyd n=64 seed=0" in captured.out
    rows = read_csv(out)
    assert rows and rows[0].algorithm == "boyd"
    assert rows[0].tick == 0 and rows[0].err_l2_ratio == pytest.approx(1.0)


def test_simulate_is_byte_deterministic(tmp_path, capsys):
    args = ["simulate", "--algorithm", "hier", "--n", "64", "--seed", "3",
            "--threshold", "16", "--eps", "0.15", "--max-ticks", "300000"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_simulate_requires_seed(tmp_path, capsys):
    code = main(["simulate", "--algorithm", "boyd", "--n", "64",
                 "--output", str(tmp_path / "x.csv")])
    captured = capsys.readouterr()
    assert code == 1
    assert "seed is required" in captured.err


def test_config_file_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("algorithm = boyd\nn = 64\neps = 0.2\n"
                   "output = unused.csv\nmax_ticks = 100000\n")
    out = tmp_path / "real.csv"
    code = main(["simulate", "--config", str(cfg), "--seed", "1",
                 "--output", str(out)])
    capsys.readouterr()
    assert code == 0
    assert out.exists()


def test_bad_config_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 64\nwidth = 9\n")
    code = main(["simulate", "--config", str(cfg), "--seed", "0"])
    captured = capsys.readouterr()
    assert code == 1
    assert "line 2" in captured.err


def test_empty_cell_exits_one(capsys):
    # threshold 1 forces splitting to expected counts of one; with more
    # cells than sensors some cell must come up empty
    code = main(["dump-hierarchy", "--n", "64", "--seed", "0",
                 "--threshold", "1"])
    captured = capsys.readouterr()
    assert code == 1
    assert "no sensors" in captured.err


def test_fault_threshold_exits_three(tmp_path, capsys):
    out = tmp_path / "faulty.csv"
    code = main(["simulate", "--algorithm", "hier", "--n", "64",
                 "--seed", "1", "--radius-c", "0.9", "--threshold", "16",
                 "--eps", "0.05", "--max-ticks", "60000",
                 "--output", str(out)])
    captured = capsys.readouterr()
    assert code == 3
    assert "exceed limit" in captured.err
    assert out.exists()   # the series is still written for inspection


def test_fault_limit_flag_tolerates(tmp_path, capsys):
    out = tmp_path / "tolerated.csv"
    code = main(["simulate", "--algorithm", "hier", "--n", "64",
                 "--seed", "1", "--radius-c", "0.9", "--threshold", "16",
                 "--eps", "0.05", "--max-ticks", "60000",
                 "--fault-limit", "1000", "--output", str(out)])
    capsys.readouterr()
    assert code == 0


def test_sweep_runs_grid(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code = main(["sweep", "--algorithms", "boyd,geo", "--ns", "64",
                 "--seeds", "0,1", "--eps", "0.2", "--max-ticks", "200000",
                 "--output", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.count("stop=") == 4
    rows = read_csv(out)
    keys = {(r.algorithm, r.n, r.seed) for r in rows}
    assert keys == {("boyd", 64, 0), ("boyd", 64, 1),
                    ("geo", 64, 0), ("geo", 64, 1)}


def test_sweep_rejects_bad_ns(capsys):
    code = main(["sweep", "--ns", "64,big", "--seeds", "0"])
    captured = capsys.readouterr()
    assert code == 1
    assert "bad n list" in captured.err


def test_fit_command(tmp_path, capsys):
    # synthetic converged runs following an exact square law
    from geogossip.metrics import write_header, write_records
    from test_metrics import rec
    p = tmp_path / "fit.csv"
    with open(p, "w") as fh:
        write_header(fh)
        for n in (64, 128, 256):
            for seed in (0, 1):
                write_records(fh, [rec("boyd", n, seed, tick=9,
                                       total=n * n, err=0.05)])
    code = main(["fit", "--csv", str(p), "--target", "0.1"])
    captured = capsys.readouterr()
    assert code == 0
    assert "boyd: slope 2.0000" in captured.out


def test_fit_needs_enough_sizes(tmp_path, capsys):
    from geogossip.metrics import write_header, write_records
    from test_metrics import rec
    p = tmp_path / "thin.csv"
    with open(p, "w") as fh:
        write_header(fh)
        write_records(fh, [rec("boyd", 64, 0, tick=9, total=99, err=0.05)])
    code = main(["fit", "--csv", str(p), "--target", "0.1"])
    captured = capsys.readouterr()
    assert code == 1
    assert "needs >= 3 distinct n" in captured.err


def test_kernel_verify_exits_zero(capsys):
    code = main(["kernel-verify", "--trials", "300"])
    captured = capsys.readouterr()
    assert code == 0
    assert "all kernel checks passed" in captured.out
    assert captured.out.count("pass") >= 6


def test_dump_hierarchy_command(capsys):
    code = main(["dump-hierarchy", "--n", "100", "--seed", "5",
                 "--threshold", "10000"])
    captured = capsys.readouterr()
    assert code == 0
    assert captured.out.startswith("/ depth=0 expected=100 count=100")


def test_event_log_flag(tmp_path, capsys):
    out = tmp_path / "ev.csv"
    log = tmp_path / "events.log"
    code = main(["simulate", "--algorithm", "boyd", "--n", "64",
                 "--seed", "0", "--eps", "0.0001", "--max-ticks", "500",
                 "--output", str(out), "--event-log", str(log)])
    capsys.readouterr()
    assert code == 0
    lines = log.read_text().splitlines()
    assert len(lines) == 500
    assert lines[0].split()[2] == "near"


def test_installed_script_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "geogossip.cli", "dump-hierarchy",
         "--n", "50", "--seed", "1", "--threshold", "1000"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("/ depth=0")


def test_numpy_fallback_matches_compiled_output(tmp_path):
    # the flag is read at import, so each mode needs its own process
    outputs = {}
    for flag in ("0", "1"):
        out = tmp_path / f"jit{flag}.csv"
        env = dict(os.environ, GEOGOSSIP_DISABLE_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, "-m", "geogossip.cli", "simulate",
             "--algorithm", "hier", "--n", "64", "--seed", "3",
             "--threshold", "16", "--eps", "0.2",
             "--max-ticks", "200000", "--output", str(out)],
            env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs[flag] = out.read_bytes()
    assert outputs["0"] == outputs["1"]
    assert outputs["0"].startswith(b"algorithm,")
