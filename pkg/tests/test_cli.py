import csv
import io
import json
import math
import subprocess
import sys

import pytest

from vortexstretch import cli
from vortexstretch.analyze import OracleComparison, SuiteResult


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def body(text):
    return "".join(line for line in text.splitlines(True) if not line.startswith("#"))


def test_eval_json_example():
    code, out, _ = invoke("eval", "--catalog", "planar_strain_paper", "--point", "2,1,0", "--format", "json")
    assert code == 0
    assert out.startswith("# vortexstretch ")
    data = json.loads(body(out))
    assert data["S"] == pytest.approx(-0.48, abs=1e-10)
    assert data["kappa"] == pytest.approx(4 / 5**1.5, rel=1e-14)
    assert data["flags"]["curvature_degenerate"] is False


def test_eval_csv_round_trips_17_digits():
    code, out, _ = invoke("eval", "--catalog", "helical", "--point", "1,0,0", "--no-header")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert float(row["kappa"]) == pytest.approx(0.5, rel=1e-15)
    assert float(row["torsion"]) == pytest.approx(0.5, rel=1e-15)
    code, out, _ = invoke("eval", "--catalog", "planar_strain_paper", "--point", "2,1,0", "--no-header")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert row["S"] == "-0.47999999999999987"


def test_eval_degenerate_point_json_nulls():
    code, out, _ = invoke("eval", "--catalog", "axisym_strain", "--point", "0,0,1", "--format", "json", "--no-header")
    data = json.loads(out)
    assert code == 0 and data["normal"] is None and data["torsion"] is None
    assert data["flags"]["curvature_degenerate"] is True


def test_negative_coordinates_are_values():
    code, out, _ = invoke("eval", "--catalog", "abc", "--point", "-1,-2.5e-1,-.3", "--no-header")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert (float(row["x"]), float(row["y"]), float(row["z_pos"])) == (-1.0, -0.25, -0.3)


def test_stagnation_exit_2():
    code, out, err = invoke("eval", "--catalog", "planar_strain_paper", "--point", "0,0,0")
    assert code == 2 and out == ""
    assert "stagnation point: |u| below tolerance" in err


@pytest.mark.parametrize("argv", [
    ("eval", "--expr", "x + , y, 0", "--point", "1,1,1"),
    ("eval", "--expr", "x + ", "--point", "1,1,1"),
    ("field", "check", "--expr", "sin(x, y, 0"),
])
def test_syntax_error_exit_1(argv):
    code, out, err = invoke(*argv)
    assert code == 1 and out == ""
    assert "syntax error" in err and "offset" in err and "^" in err


@pytest.mark.parametrize("argv", [
    (),
    ("frobnicate",),
    ("eval", "--point", "1,2,3"),
    ("eval", "--catalog", "abc", "--expr", "x, y, z", "--point", "1,2,3"),
    ("eval", "--catalog", "nope", "--point", "1,2,3"),
    ("eval", "--catalog", "abc", "--point", "1,2"),
    ("eval", "--catalog", "abc", "--point", "1,nan,2"),
    ("eval", "--catalog", "abc", "--point", "1,2,3", "--bogus"),
    ("verify", "nope"),
    ("classify", "--catalog", "abc", "--box", "0,1,0,1,0,1", "--resolution", "1,2,2"),
])
def test_usage_errors_exit_1(argv):
    code, out, err = invoke(*argv)
    assert code == 1 and out == "" and err


def test_domain_error_exit_2():
    code, _, err = invoke("eval", "--expr", "log(x), y, 0", "--point", "-1,1,0")
    assert code == 2 and "log" in err


def test_verify_suites():
    code, out, err = invoke("verify", "corollary", "helix", "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["suite"] for r in rows} == {"corollary", "helix"}
    cor = [r for r in rows if r["suite"] == "corollary" and r["label"] == "S_analytic"]
    assert len(cor) == 400 and max(float(r["abs_dev"]) for r in cor) <= 1e-10
    assert "PASS corollary" in err and "PASS helix" in err


def test_verify_failure_exit_3(monkeypatch):
    bad = lambda: SuiteResult("bad", [OracleComparison.make("x", (), 1.0, 0.0)])  # noqa: E731
    suites = dict(cli.SUITES, bad=bad)
    monkeypatch.setattr(cli, "SUITES", suites)
    monkeypatch.setattr(cli, "run_suite", lambda n: suites[n]())
    code, out, err = invoke("verify", "helix", "bad", "--format", "json", "--no-header")
    assert code == 3
    assert json.loads(out)["pass"] is False
    assert "FAIL bad" in err and "PASS helix" in err


def test_streamline_csv_columns():
    code, out, _ = invoke("streamline", "--catalog", "axisym_strain", "--point", "0,0,1", "--samples", "11", "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["t", "z", "x", "y", "z_pos", "speed", "kappa", "alpha", "F", "S"]
    assert len(rows) == 11
    assert float(rows[-1]["z"]) == pytest.approx(math.e**2 - 1, rel=1e-8)
    assert float(rows[-1]["z_pos"]) == pytest.approx(math.e**2, rel=1e-8)


def test_classify_json_schema():
    code, out, _ = invoke(
        "classify", "--catalog", "planar_strain_stated", "--box", "0.1,2,0.1,2,0,0",
        "--resolution", "5,5,1", "--format", "json", "--no-header",
    )
    assert code == 0
    data = json.loads(out)
    assert list(data) == ["field", "box", "resolution", "tolerances", "points", "summary"]
    assert sum(data["summary"].values()) == 25


def test_classify_csv_mirror():
    code, out, _ = invoke("classify", "--catalog", "rigid_rotation", "--box", "1,2,0,1,0,0",
                          "--resolution", "2,2,1", "--no-header")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4 and all(r["verdict"] == "not_stretching" for r in rows)
    assert {"x", "y", "z_pos", "alpha", "S", "dz_kappa", "kappa", "verdict"} <= set(rows[0])


def test_probe_disk():
    code, out, _ = invoke("probe", "disk", "--catalog", "planar_strain_stated", "--point", "1,2,0",
                          "--samples", "3", "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0])[:4] == ["t", "defect_n", "defect_b", "axis_stretch"]
    assert float(rows[0]["defect_n"]) == 0.0
    assert abs(float(rows[-1]["defect_n"])) > 1e-2


def test_probe_cauchy():
    code, out, _ = invoke("probe", "cauchy", "--catalog", "axisym_strain", "--point", "1,0,0",
                          "--omega0", "0,1,0", "--t", "1", "--format", "json", "--no-header")
    assert code == 0
    assert json.loads(out)["omega"][1] == pytest.approx(math.exp(-1), abs=1e-9)


def test_compare():
    code, out, _ = invoke("compare", "--catalog", "planar_strain_paper", "--point", "2,1,0",
                          "--point", "0.5,1.5,0", "--no-header")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2 and all(r["pass"] == "true" for r in rows)
    assert float(rows[0]["S_trajectory"]) == pytest.approx(-0.48, abs=1e-5)


def test_field_check(tmp_path):
    code, out, _ = invoke("field", "check", "--catalog", "abc", "--points", "5", "--format", "json", "--no-header")
    assert code == 0
    data = json.loads(out)
    assert data["pass"] and data["points"] == 5 and data["divergence_free"]
    f = tmp_path / "field.txt"
    f.write_text("# swirl\n-y\nx\n0.5\np = (x^2 + y^2)/2\n")
    code, out, _ = invoke("eval", "--field-file", str(f), "--point", "1,0,0", "--format", "json", "--no-header")
    assert code == 0 and json.loads(out)["kappa"] == pytest.approx(0.8, rel=1e-14)


def test_out_file_and_header(tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = invoke("eval", "--catalog", "abc", "--point", "0.1,0.2,0.3", "--out", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert text.splitlines()[0] == "# vortexstretch 0.1.0: eval --catalog abc --point 0.1,0.2,0.3 --out " + str(target)
    code, out, _ = invoke("eval", "--catalog", "abc", "--point", "0.1,0.2,0.3", "--no-header")
    assert body(text) == out


@pytest.mark.parametrize("argv", [
    ("eval", "--catalog", "abc", "--params", "1,0.5,0.25", "--point", "0.1,0.2,0.3", "--format", "json"),
    ("classify", "--catalog", "abc", "--box", "-1,1,-1,1,0,0", "--resolution", "4,4,1"),
    ("streamline", "--catalog", "helical", "--point", "1,0,0", "--samples", "7"),
])
def test_byte_identical(argv, monkeypatch):
    first = invoke(*argv)
    monkeypatch.setenv("VORTEX_CRITERION_THREADS", "1")
    second = invoke(*argv)
    assert first == second


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "vortexstretch", "eval", "--catalog", "planar_strain_paper", "--point", "0,0,0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "stagnation point" in proc.stderr
