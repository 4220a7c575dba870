import csv
import subprocess
import sys
from pathlib import Path

import pytest

from cellwalk.cli import main
from cellwalk.complex import load_complex
from cellwalk.generators import grid2d

DATA = Path(__file__).parent / "data"

EXPECTED_EXIT = {
    "grid2d.json": 0,
    "tetrahedron_boundary.json": 0,
    "two_triangles.json": 1,  # not upper connected
    "worked_example.json": 1,  # not upper regular
    "not_a_complex.json": 1,  # boundary of boundary is nonzero
    "dangling_face.json": 2,
    "bad_shift.json": 2,
    "truncated.json": 2,
}


def test_corpus_is_complete():
    assert {p.name for p in DATA.glob("*.json")} == set(EXPECTED_EXIT)


@pytest.mark.parametrize("name", sorted(EXPECTED_EXIT))
def test_validate_exit_codes(name, capsys):
    assert main(["validate", str(DATA / name)]) == EXPECTED_EXIT[name]


def test_validate_grid_report(capsys):
    assert main(["validate", "--generate", "grid2d", "--degree", "1"]) == 0
    out = capsys.readouterr().out
    assert "d_+=2 d_+2=2 d_-=3" in out
    assert "C1(q) = 6/(6 q + 2 (1-q))" in out


def test_validate_missing_file_and_usage(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2
    assert main(["walk"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["walk", "--generate", "grid2d", "--window", "3"]) == 2
    assert main(["generate", "cayley_suspension:2:1"]) == 2


def test_degenerate_degree_fails_unless_absorbing(capsys):
    assert main(["validate", "--generate", "simplicial:0,1,2;2,3", "--degree", "1"]) == 1
    assert main(["trace", "--generate", "simplicial:0,1,2;2,3", "--degree", "1", "--steps", "3"]) == 1


def test_generate_grid_is_stored_manifest(tmp_path, capsys):
    assert main(["generate", "grid2d", "--out", str(tmp_path / "g.json")]) == 0
    assert (tmp_path / "g.json").read_text() == (DATA / "grid2d.json").read_text()
    assert load_complex(tmp_path / "g.json") == grid2d()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_trace_with_q_one_is_constant(tmp_path, capsys):
    assert main(["trace", "--generate", "grid2d", "--q", "1", "--steps", "7", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trace.csv")
    assert [float(r["p"]) for r in rows] == [2.0] * 8
    assert list(rows[0]) == ["n", "p_plus", "p_minus", "p", "stderr", "method"]


def test_walk_rerun_is_byte_identical(tmp_path, capsys):
    args = ["walk", "--generate", "grid2d", "--q", "0.9", "--steps", "15", "--walkers", "70000",
            "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "returns.csv").read_bytes()
    assert a == (tmp_path / "b" / "returns.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "returns.csv")
    mc = [r for r in rows if r["method"] == "monte_carlo"]
    ex = [r for r in rows if r["method"] == "exact_float"]
    assert len(mc) == len(ex) == 16
    for m, e in zip(mc, ex):
        se = float(m["stderr"])
        assert abs(float(m["p"]) - float(e["p"])) <= 5 * se + 1e-12


def test_density_rerun_is_byte_identical(tmp_path, capsys):
    args = ["density", "--generate", "grid2d", "--quad-m", "32"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "density.csv").read_bytes() == (tmp_path / "b" / "density.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "density.csv")
    assert rows[0] == {"lambda": "0.0", "F": "1.0"}


def test_nsi_on_irregular_complex_reports_walk_refusal(tmp_path, capsys):
    code = main(["nsi", "--complex", str(DATA / "worked_example.json"), "--out", str(tmp_path)])
    assert code == 1
    assert "not available" in capsys.readouterr().out
    assert len(read_csv(tmp_path / "nsi.csv")) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cellwalk", "validate", "--generate", "grid2d"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip().endswith("PASS")
