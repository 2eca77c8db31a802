import csv
import io
import math

import pytest

from bellrand.cli import main
from bellrand.sdpa import import_sdpa
from bellrand.sweep import COLUMNS, SweepRow, parse_grid, read_csv, rows_to_csv


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def rows_of(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_sweep_local_points(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _ = run(["sweep", "--noise", "white", "--cases", "1", "--grid", "0:0.5:0.5", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    rows = rows_of(out)
    assert [r["param"] for r in rows] == ["0", "0.5"]
    assert all(abs(float(r["hmin_bits"])) <= 1e-4 for r in rows)
    assert all(r["ratio"] == "" for r in rows)


def test_sweep_extremal_point(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--noise", "white", "--grid", "1", "--out", str(out)]) == 0
    rows = rows_of(out)
    assert [int(r["case"]) for r in rows] == [1, 2, 3]
    for r in rows:
        assert float(r["hmin_bits"]) == pytest.approx(1.2284, abs=1e-3)


def test_sweep_dephasing_zero(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--noise", "dephasing", "--grid", "0", "--out", str(out)]) == 0
    assert all(abs(float(r["hmin_bits"])) <= 1e-4 for r in rows_of(out))


def test_sweep_deterministic_across_jobs(tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    flags = ["sweep", "--noise", "dephasing", "--cases", "1,2", "--grid", "0.6:0.2:1"]
    assert main([*flags, "--out", str(a)]) == 0
    assert main([*flags, "--out", str(b)]) == 0
    assert main([*flags, "--out", str(c), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = rows_of(a)
    assert [(r["param"], r["case"]) for r in rows] == [("0.6", "1"), ("0.6", "2"), ("0.8", "1"), ("0.8", "2"), ("1", "1"), ("1", "2")]
    # every float cell carries at most 12 significant digits
    for r in rows:
        for key in ("chsh", "g_upper", "hmin_bits"):
            digits = r[key].replace("-", "").replace(".", "").split("e")[0].lstrip("0")
            assert len(digits) <= 12


def test_certify_show_dual(capsys):
    code, out = run(["certify", "--noise", "white", "--param", "1.0", "--case", "2", "--show-dual"], capsys)
    assert code == 0
    lines = out.out.splitlines()
    assert sum(line.strip().startswith("c[") for line in lines) == 8
    assert any(line.strip().startswith("offset") for line in lines)
    assert any(line.startswith("certificate  verified") for line in lines)


def test_certify_case3_beats_case2(capsys):
    values = {}
    for case in (2, 3):
        code, out = run(["certify", "--noise", "dephasing", "--param", "0.6", "--case", str(case)], capsys)
        assert code == 0
        values[case] = float(next(ln.split()[1] for ln in out.out.splitlines() if ln.startswith("hmin_bits")))
    assert values[3] >= values[2]


@pytest.mark.parametrize(
    "argv",
    [
        ["certify", "--noise", "white", "--param", "-0.1", "--case", "2"],
        ["certify", "--noise", "white", "--param", "abc", "--case", "2"],
        ["certify", "--noise", "pink", "--param", "0.5", "--case", "2"],
        ["certify", "--noise", "white", "--param", "0.5", "--case", "4"],
        ["certify", "--noise", "white", "--param", "0.5", "--case", "3", "--settings", "0,0"],
        ["sweep", "--noise", "white", "--grid", "0:0.5:2", "--out", "x.csv"],
        ["sweep", "--noise", "white", "--cases", "5", "--out", "x.csv"],
        ["sweep", "--noise", "white", "--grid", "0.5", "--jobs", "0", "--out", "x.csv"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2


def test_export(tmp_path, capsys):
    out = tmp_path / "p.dat-s"
    code, printed = run(["export", "--noise", "white", "--param", "0.9", "--case", "2", "--settings", "0,0", "--out", str(out)], capsys)
    assert code == 0
    problem = import_sdpa(out.read_text())
    assert list(problem.block_sizes) == [25, 25, 25, 25]
    assert problem.num_eq == 9
    assert "internal objective" in printed.out


def test_io_error(tmp_path, capsys):
    target = tmp_path / "missing" / "p.dat-s"
    code, err = run(["export", "--noise", "white", "--param", "0.9", "--case", "1", "--out", str(target)], capsys)
    assert code == 3
    assert "cannot write" in err.err
    code, _ = run(["compare", "--white", str(tmp_path / "nope.csv"), "--dephasing", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "c.csv")], capsys)
    assert code == 3


def fake_rows(noise, ratios):
    return [SweepRow(noise, p, 2, 2.0, 0.5, 1.0, 0.0, "optimal", "0,0", r) for p, r in ratios.items()]


def test_compare(tmp_path, capsys):
    w, d, out = tmp_path / "w.csv", tmp_path / "d.csv", tmp_path / "c.csv"
    w.write_text(rows_to_csv(fake_rows("white", {0.7: 1.0, 0.8: 1.1, 0.9: 1.2})))
    d.write_text(rows_to_csv(fake_rows("dephasing", {0.8: 1.5, 0.9: 1.1})))
    code, printed = run(["compare", "--white", str(w), "--dephasing", str(d), "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text().splitlines() == [
        "param,white_ratio,dephasing_ratio,difference",
        "0.8,1.1,1.5,0.4",
        "0.9,1.2,1.1,-0.1",
    ]
    assert "1 of 2" in printed.out


def test_compare_rejects_other_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    code, _ = run(["compare", "--white", str(bad), "--dephasing", str(bad), "--out", str(tmp_path / "c.csv")], capsys)
    assert code == 2


def test_grid_parsing():
    grid = parse_grid("0:0.025:1")
    assert len(grid) == 41 and grid[0] == 0 and grid[-1] == 1
    assert grid[7] == 0.175
    assert parse_grid("0.3") == [0.3]
    for bad in ("1:0.1:0", "0:0:1", "0:0.5", "x"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_csv_round_trip():
    rows = fake_rows("white", {0.8: 1.25, 0.9: None})
    again = read_csv(rows_to_csv(rows))
    assert again == rows
    assert math.isnan(read_csv(rows_to_csv([SweepRow("white", 0.1, 1, 0.0, math.nan, math.nan, math.nan, "failed", "")]))[0].g_upper)
