import subprocess
import sys

import pytest

from orbitgauge.cli import main

FIXED = """[experiment]
kind = orbit_complexity
[system]
kind = rotation
r = 0
x0 = 3/8
[cover]
j_min = 2
j_max = 4
[checks]
max_indicator = 0.05
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_fixed_point_passes(tmp_path, capsys):
    cfg = write(tmp_path, "fixed.cfg", FIXED)
    assert main(["orbit-complexity", "-c", cfg, "-o", str(tmp_path / "runs")]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "point,cover,f,indicator"
    vals = [float(line.split(",")[-1]) for line in lines[1:] if line.count(",") == 3]
    assert vals and max(vals) < 0.05
    assert "PASS orbit_complexity" in out and "artifacts:" in out


def test_doubling_rate(tmp_path, capsys):
    cfg = write(
        tmp_path,
        "dbl.cfg",
        "[experiment]\nseed = 7\n[system]\nkind = doubling\n[cover]\nkind = binary\n"
        "[complexity]\ncheckpoints = 1024..16384 x2\npoints = 4\nmode = plain\n[checks]\nmin_rate = 0.8\nmax_rate = 1.1\n",
    )
    assert main(["orbit-complexity", "-c", cfg, "-o", str(tmp_path / "runs")]) == 0
    assert "PASS rate" in capsys.readouterr().out


def test_tolerance_failure_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, "fixed.cfg", FIXED)
    assert main(["orbit-complexity", "-c", cfg, "--set", "checks.max_indicator=-1", "-o", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.cfg", "[system]\nkind = doubling\nfoo = 1\n")
    assert main(["orbit-complexity", "-c", cfg]) == 2
    assert "line 3: unknown key 'foo' in [system]" in capsys.readouterr().err
    assert main(["track", "--set", "system.r=1/3", "--set", "system.kind=rotation"]) == 2


def test_precision_exhausted_exit_3(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ORBITGAUGE_MAX_PREC_BITS", "64")
    cfg = write(tmp_path, "t.cfg", "[experiment]\nkind = track\n[system]\nkind = doubling\nx0 = 1/3\n[track]\nk = 100\nm = 30\n")
    assert main(["track", "-c", cfg, "-o", str(tmp_path)]) == 3
    assert "precision exhausted" in capsys.readouterr().err


def test_track_matches_oracle(tmp_path, capsys):
    cfg = write(tmp_path, "t.cfg", "[system]\nkind = doubling\nx0 = 1/3\n[track]\nk = 20\nm = 30\n")
    assert main(["track", "-c", cfg, "-o", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "k,center_hex,radius_exp"
    assert "PASS oracle_inside" in out and "PASS endpoint_error" in out


def test_gen_entropy_rotation_flat(tmp_path, capsys):
    args = ["gen-entropy", "--set", "system.kind=rotation", "--set", "system.r=3/16", "--set", "entropy.grid_bits=10",
            "--set", "checks.flat=true", "-o", str(tmp_path)]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "PASS flat_counts" in out


def test_dry_run_does_no_work(tmp_path, capsys):
    cfg = write(tmp_path, "fixed.cfg", FIXED)
    assert main(["orbit-complexity", "-c", cfg, "--dry-run", "-o", str(tmp_path / "none")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# orbit-complexity (orbit_complexity) config ") and "x0 = 3/8" in out
    assert not (tmp_path / "none").exists()
    for sub in ("gen-entropy", "track", "reconstruct-rotation", "experiment"):
        assert main([sub, "--dry-run", "--set", "experiment.kind=track"]) == 0


def test_report(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 2
    assert "no artifacts" in capsys.readouterr().err
    runs = tmp_path / "runs"
    cfg = write(tmp_path, "fixed.cfg", FIXED)
    main(["orbit-complexity", "-c", cfg, "-o", str(runs)])
    main(["orbit-complexity", "-c", cfg, "--set", "checks.max_indicator=-1", "-o", str(runs)])
    capsys.readouterr()
    assert main(["report", str(runs)]) == 1
    out = capsys.readouterr().out
    assert "PASS 1/2 runs passed" not in out and "FAIL 1/2 runs passed" in out
    assert (runs / "report_summary.txt").read_text() == out
    # stable across invocations
    main(["report", str(runs)])
    assert capsys.readouterr().out == out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "orbitgauge.cli", "report", "/nonexistent-dir"], capture_output=True, text=True)
    assert res.returncode == 2 and "no artifacts" in res.stderr


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == 2
