import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from necklaces.cli import main
from necklaces.limit import tv_limit


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# -- validate ----------------------------------------------------------------------


def test_validate_simple(capsys):
    code, out, _ = run(["validate", "--bead", "simple:0.6667"], capsys)
    assert code == 0
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["b"] == "1"
    assert float(fields["mu"]) == pytest.approx(3.0, abs=1e-3)
    assert float(fields["variance"]) == pytest.approx(6.0, abs=1e-2)


def test_validate_json_format(capsys):
    code, out, _ = run(["validate", "--bead", '{"rows": [[0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]}', "--format", "json"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["b"] == 2 and report["span"] == 1


def test_validate_span_violation(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rows": [[0, 1, 0], [0, 0, 1]]}))
    code, out, _ = run(["validate", "--bead", str(bad)], capsys)
    assert code == 1
    assert out.startswith("SpanViolation")


def test_validate_bad_parameter(capsys):
    assert run(["validate", "--bead", "simple:1.5"], capsys)[0] == 2


def test_validate_missing_file(capsys):
    assert run(["validate", "--bead", "nowhere.json"], capsys)[0] == 2


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 2
    assert run(["evolve", "--bead", "simple:0.5", "--n", "10"], capsys)[0] == 2
    assert run(["evolve", "--bead", "simple:0.5", "--n", "10", "--t", "3", "--c", "1"], capsys)[0] == 2
    assert run(["figure", "--bead", "simple:0.5", "--n", "10", "--t", "3", "--mode", "wavy"], capsys)[0] == 2
    assert run(["bounds", "--n", "3"], capsys)[0] == 2


def test_domain_errors(capsys):
    code, _, err = run(["evolve", "--bead", "simple:0.5", "--r", "0,0,0", "--t", "3"], capsys)
    assert code == 1 and "NoBeads" in err
    code, _, err = run(["figure", "--bead", "simple:0.5", "--n", "10", "--t", "3", "--start", "s4"], capsys)
    assert code == 1 and "InvalidStart" in err


# -- evolve ----------------------------------------------------------------------------


def test_evolve_n50_t530(capsys):
    code, out, _ = run(["evolve", "--bead", "simple:0.6667", "--n", "50", "--t", "530"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == ["state_id", "position", "kind", "k", "probability", "stationary", "tv_contribution"]
    assert len(rows) == 50
    assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-9)


def test_evolve_t0(capsys):
    code, out, _ = run(["evolve", "--bead", "simple:0.5", "--n", "6", "--t", "0"], capsys)
    rows = rows_of(out)
    hits = [r for r in rows if float(r["probability"]) != 0.0]
    assert code == 0 and len(hits) == 1
    assert hits[0]["state_id"] == "s0" and float(hits[0]["probability"]) == 1.0


def test_evolve_json_and_c(capsys):
    code, out, _ = run(
        ["evolve", "--bead", "simple:0.5", "--pattern", "block", "--n", "8", "--c", "0.2", "--format", "json"], capsys
    )
    doc = json.loads(out)
    assert code == 0 and doc["c"] == 0.2 and doc["m"] == 4
    assert sum(doc["probability"]) == pytest.approx(1.0)


def test_necklace_file(tmp_path, capsys):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps({"bead": "simple:0.6667", "r": [1, 0, 1, 0, 1, 1, 1, 0, 0]}))
    code, out, _ = run(["evolve", "--necklace", str(path), "--t", "5"], capsys)
    assert code == 0 and len(rows_of(out)) == 9


# -- figure and tv ---------------------------------------------------------------------


def test_figure_normalized(capsys):
    code, out, _ = run(["figure", "--bead", "simple:0.6667", "--n", "50", "--t", "530", "--mode", "normalized"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("x,y,state_id")
    footer = lines[-1]
    assert footer.startswith("# max_deviation=")
    assert float(footer.split("=")[1]) < 0.1
    rows = rows_of(out)
    assert {r["mode"] for r in rows} == {"normalized"}
    assert float(rows[0]["c"]) == pytest.approx(0.0795, abs=1e-4)


def test_figure_rearranged_two_bands(capsys):
    _, out, _ = run(["figure", "--bead", "simple:0.6667", "--n", "50", "--t", "530", "--mode", "rearranged"], capsys)
    rows = rows_of(out)
    # hold states carry three times the mass of pass-through states near a given x
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    held = np.array([int(r["position"]) % 2 == 0 for r in rows])
    assert len(x) == 50 and np.all((0 <= x) & (x < 1))
    assert np.median(y[held]) > 2 * np.median(y[~held])


def test_figure_raw(capsys):
    _, out, _ = run(["figure", "--bead", "simple:0.6667", "--n", "50", "--t", "530", "--mode", "raw"], capsys)
    assert sum(float(r["y"]) for r in rows_of(out)) == pytest.approx(1.0, abs=1e-12)


def test_tv_sweep(capsys):
    code, out, _ = run(["tv", "--bead", "simple:0.6667", "--n", "50,100", "--c", "0.08,10"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "n,m,c,t,tv_exact,tv_limit,abs_diff,bead,start"
    rows = rows_of(out)
    assert len(rows) == 4
    big = [r for r in rows if float(r["c"]) == 10]
    assert all(float(r["tv_exact"]) < 0.01 for r in big)
    gaps = {int(r["n"]): float(r["abs_diff"]) for r in rows if float(r["c"]) == 0.08}
    assert gaps[100] < gaps[50]
    assert float(rows[0]["tv_limit"]) == pytest.approx(tv_limit(0.08))


def test_tv_needs_grid(capsys):
    assert run(["tv", "--bead", "simple:0.5", "--n", "10"], capsys)[0] == 2
    assert run(["tv", "--bead", "simple:0.5", "--n", "10", "--c", "0.1,-2"], capsys)[0] == 2


# -- bounds, optimal-p, hot ---------------------------------------------------------------


def test_bounds_json(capsys):
    code, out, _ = run(["bounds", "--n", "12", "--p", "0.5"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["beta1"]["M(P_n)_disconnected"] is True
    assert set(rep) >= {"beta1", "fill_curve", "comparison_bound", "growth", "nash", "steps_needed"}
    assert rep["growth"]["witness"].keys() == {"x", "r"}


def test_optimal_p(capsys):
    code, out, _ = run(["optimal-p", "--k", "0.5,1"], capsys)
    rows = rows_of(out)
    assert code == 0
    assert float(rows[0]["p"]) == pytest.approx(0.7320508, abs=1e-7)
    assert float(rows[1]["p"]) == 0.5
    assert run(["optimal-p", "--k", "0"], capsys)[0] == 1


def test_hot_oracle(capsys):
    code, out, _ = run(["hot", "--bead", '{"rows": [[0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]}', "--n", "7", "--t", "150", "--oracle"], capsys)
    assert code == 0
    footer = out.splitlines()[-1]
    assert float(footer.split("=")[1]) < 1e-9
    rows = rows_of(out)
    assert "matrix_power" in rows[0]


def test_hot_from_last_bead(capsys):
    code, _, _ = run(["hot", "--bead", "simple:0.3", "--pattern", "all", "--n", "5", "--t", "40", "--start", "s4", "--oracle"], capsys)
    assert code == 0
    assert run(["hot", "--bead", "simple:0.3", "--n", "5", "--t", "-1"], capsys)[0] == 2


# -- output files and determinism ---------------------------------------------------------


def test_out_file_and_sidecar(tmp_path, capsys):
    out = tmp_path / "fig.csv"
    argv = ["figure", "--bead", "simple:0.6667", "--n", "20", "--t", "100", "--out", str(out)]
    assert run(argv, capsys)[0] == 0
    first = out.read_bytes()
    meta = json.loads((tmp_path / "fig.csv.meta.json").read_text())
    assert meta["argv"] == argv and "created" in meta
    assert run(argv, capsys)[0] == 0
    assert out.read_bytes() == first
    assert first.decode("utf-8").startswith("x,y,")


@pytest.mark.parametrize(
    "argv",
    [
        ["evolve", "--bead", "simple:0.6667", "--n", "12", "--t", "77"],
        ["tv", "--bead", "simple:0.6667", "--n", "12", "--c", "0.1,0.5"],
        ["optimal-p", "--k", "0.1,0.3"],
    ],
)
def test_deterministic_stdout(argv, capsys):
    a = run(argv, capsys)[1]
    b = run(argv, capsys)[1]
    assert a == b
    assert "," in a.splitlines()[0]


def test_entry_point_and_pure_python_fallback():
    env = dict(os.environ, NECKLACES_PURE_PYTHON="1")
    code = "import necklaces.kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    res = subprocess.run(
        [sys.executable, "-m", "necklaces.cli", "optimal-p", "--k", "1"], env=env, capture_output=True, text=True
    )
    assert res.returncode == 0 and "0.5" in res.stdout
