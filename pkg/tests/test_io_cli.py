import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from freebound.cli import build_parser, main
from freebound.grid import make_grid, sample, unit_box
from freebound.io import field_to_csv, field_to_pgm, read_csv, write_csv, write_table

CONFIGS = Path(__file__).parents[1] / "configs"


def test_csv_layout():
    g = unit_box(2, 1.0)
    text = field_to_csv(sample(lambda x, y: x + 10 * y, g))
    lines = text.splitlines()
    assert lines[0] == "x,y,value"
    assert lines[1] == "-1,-1,-11" and lines[2] == "0,-1,-10"  # outer loop over y
    assert len(lines) == 10


def test_csv_round_trip(tmp_path):
    g = unit_box(2, 1 / 8)
    f = sample(lambda x, y: np.sin(x) * np.exp(y) / 3, g)
    back = read_csv(write_csv(f, tmp_path / "f.csv"), g)
    assert np.array_equal(back.values, f.values)
    g1 = make_grid((-1,), (1,), 0.25)
    f1 = sample(lambda x: x**3 / 7, g1)
    assert np.array_equal(read_csv(write_csv(f1, tmp_path / "g.csv"), g1).values, f1.values)


def test_pgm():
    g = unit_box(2, 0.5)
    text = field_to_pgm(sample(lambda x, y: y, g))
    rows = text.splitlines()
    assert rows[:3] == ["P2", "5 5", "255"]
    assert rows[3] == "255 255 255 255 255"  # top row is the largest y
    assert rows[-1] == "0 0 0 0 0"
    flat = field_to_pgm(sample(lambda x, y: 0 * x, g)).splitlines()
    assert set(" ".join(flat[3:]).split()) == {"0"}


def test_table(tmp_path):
    p = write_table(tmp_path / "t.csv", ["a", "b"], [("u", 1 / 3)])
    assert p.read_text().splitlines()[1] == "u,0.33333333333333331"


def test_parser_subcommands():
    parser = build_parser()
    for cmd in ("solve", "verify-example", "analyze", "report"):
        args = parser.parse_args([cmd, "--config", "c.ini", "--out", "o", "--threads", "1", "--seedless"])
        assert args.command == cmd and args.threads == 1 and args.seedless
    with pytest.raises(SystemExit):
        parser.parse_args(["solve"])


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nh = 0.3\n[problem]\nexample = radial\n")
    assert main(["verify-example", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "grid.h" in capsys.readouterr().err
    assert main(["verify-example", "--config", str(tmp_path / "missing.ini")]) == 2


def test_verify_example_command(tmp_path, capsys):
    code = main(["verify-example", "--config", str(CONFIGS / "uncoupled.ini"), "--out", str(tmp_path), "--seedless"])
    out = capsys.readouterr().out
    assert code == 0
    assert "CHECK oracle residuals: PASS" in out and "seedless" in out
    assert (tmp_path / "summary.txt").read_text() == out
    assert (tmp_path / "oracle.txt").exists()


def test_halfspace_sharpness_report(tmp_path, capsys):
    code = main(["report", "--config", str(CONFIGS / "halfspace_sharp.ini"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "inclusion (c): EXPECTED-FAIL" in out
    assert "coupled free boundary is empty" in out
    assert out.rstrip().endswith("RESULT PASS")


def test_uncoupled_analysis(tmp_path, capsys):
    code = main(["analyze", "--config", str(CONFIGS / "uncoupled.ini"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "uncoupled points singular: PASS" in out
    assert (tmp_path / "oracle_profiles.csv").exists()


SMALL = """
[grid]
h = 1/32
[problem]
example = radial
[schedule]
eps = 0.1, 0.01, 2.5e-3
[output]
formats = csv, pgm
"""


def test_solve_is_deterministic(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        subprocess.run([sys.executable, "-m", "freebound.cli", "solve", "--config", str(cfg), "--out", str(out),
                        "--threads", "1"], check=False, capture_output=True, text=True)
        outs.append(out)
    for name in ("u.csv", "v.csv", "u.pgm", "diagnostics.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert "accepted = True" in (outs[0] / "diagnostics.txt").read_text()
