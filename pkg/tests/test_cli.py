import json
import math

import pytest

from yspec import cli, potential as pm, solver
from yspec.errors import NumericalError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    lines = text.splitlines()
    params = json.loads(lines[0].removeprefix("# params: "))
    summary = json.loads(lines[1].removeprefix("# summary: "))
    header = lines[2].split(",")
    rows = [dict(zip(header, l.split(","))) for l in lines[3:]]
    return params, summary, header, rows


def test_skeleton_jump(capsys):
    code, out, _ = run(capsys, "skeleton", "--preset", "jump", "--delta", "0.1")
    assert code == 0
    params, summary, header, rows = _csv(out)
    assert header == ["figure_index", "element", "vertex_index", "re", "im"]
    assert params["preset"] == "jump" and params["delta"] == 0.1
    assert summary["figures"] == 2
    js = sorted(summary["junctions"], key=lambda g: g[1])
    for (re, im), s in zip(js, (-1, 1)):
        assert re == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-12)
        assert im == pytest.approx(0.6 * s, abs=1e-12)
    assert {r["figure_index"] for r in rows} == {"0", "1"}


def test_skeleton_figure3(capsys):
    code, out, _ = run(capsys, "skeleton", "--preset", "figure3", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["figures"] == 2
    assert doc["columns"] == ["figure_index", "element", "vertex_index", "re", "im"]
    assert len(doc["records"][0]) == 5


@pytest.mark.parametrize("argv", [
    ["skeleton", "--preset", "jump", "--delta", "-0.1"],
    ["skeleton", "--preset", "jump"],
    ["skeleton", "--preset", "airy", "--delta", "0.1"],
    ["skeleton", "--preset", "nope"],
    ["skeleton", "--r-trunc", "-1"],
    ["spectrum", "--h", "-1"],
    ["spectrum"],
    ["spectrum", "--h", "0.1", "--region", "1,0,0,1"],
    ["spectrum", "--h", "0.1", "--region", "0,1,0"],
    ["spectrum", "--h", "0.1", "--eps", "0"],
    ["spectrum", "--h", "0.1", "--potential", "/nonexistent/v.json"],
    ["spectrum", "--h", "0.1", "--preset", "airy", "--potential", "v.json"],
    ["limits", "--p", "0"],
    ["limits", "--p", "1", "--h", "0.05,0.1"],
    ["limits", "--p", "1", "--h", "a,b"],
    ["pseudospectra", "--h", "0.1", "--grid", "1x1"],
    ["pseudospectra", "--h", "0.1", "--grid", "ten"],
    ["pseudospectra", "--h", "0.1", "--n", "2"],
    ["pseudospectra", "--h", "0.1", "--threads", "-1"],
    ["skeleton", "--del", "0.1"],
    ["frobnicate"],
])
def test_bad_input_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_threads_env_validation(capsys, monkeypatch):
    monkeypatch.setenv("YSPEC_THREADS", "many")
    assert run(capsys, "skeleton")[0] == 2
    monkeypatch.setenv("YSPEC_THREADS", "1")
    assert run(capsys, "skeleton")[0] == 0


def test_spectrum_from_file(capsys, tmp_path):
    p = tmp_path / "v.json"
    pm.save_potential(pm.linear(1j), p)
    code, out, _ = run(capsys, "spectrum", "--potential", str(p), "--h", "0.1", "--eps", "0.1")
    assert code == 0
    params, summary, header, rows = _csv(out)
    assert header == ["h", "delta", "lambda_re", "lambda_im", "residual_log", "dist_to_skeleton"]
    assert params["potential"] == str(p)
    assert summary["count"] == len(rows) > 0
    assert summary["passed"] and summary["max_distance"] <= 0.1
    assert all(float(r["dist_to_skeleton"]) <= 0.1 for r in rows)


def test_spectrum_claim_failure_exit_4(capsys):
    code, out, _ = run(capsys, "spectrum", "--h", "0.1", "--eps", "1e-6")
    assert code == 4
    _, summary, _, _ = _csv(out)
    assert not summary["passed"] and summary["offenders"]


def test_spectrum_reports_conjugate_pairing(capsys):
    code, out, _ = run(capsys, "spectrum", "--preset", "jump", "--delta", "0.2", "--h", "0.1", "--eps", "0.1",
                       "--format", "json")
    doc = json.loads(out)
    assert doc["summary"]["conjugate_pairing"] <= 1e-6
    assert doc["params"]["delta"] == 0.2
    assert all(r[1] == 0.2 for r in doc["records"])


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("BOUNDARY_ZERO", "forced")
    monkeypatch.setattr(solver, "solve_spectrum", boom)
    code, _, err = run(capsys, "spectrum", "--h", "0.1")
    assert code == 3 and "BOUNDARY_ZERO" in err


def test_pseudospectra_output(capsys, tmp_path):
    out = tmp_path / "ps.csv"
    code, stdout, _ = run(capsys, "pseudospectra", "--preset", "jump", "--delta", "0.1", "--h", "0.1",
                          "--n", "150", "--grid", "4x3", "-o", str(out))
    assert code == 0 and stdout == ""
    params, summary, header, rows = _csv(out.read_text())
    assert header == ["z_re", "z_im", "log10_sigma_min"]
    assert len(rows) == 12 and params["grid"] == [4, 3]


def test_pseudospectra_self_adjoint_minima_on_axis(capsys):
    code, out, _ = run(capsys, "pseudospectra", "--preset", "selfadjoint", "--h", "0.1", "--n", "300",
                       "--grid", "11x9", "--region", "-0.5,1,-0.4,0.4", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    by_col = {}
    for re, im, s in doc["records"]:
        by_col.setdefault(re, []).append((s, im))
    assert all(min(v)[1] == pytest.approx(0.0, abs=1e-12) for v in by_col.values())


def test_limits_output(capsys):
    code, out, _ = run(capsys, "limits", "--p", "2", "--h", "0.2,0.1", "--format", "json")
    doc = json.loads(out)
    assert doc["columns"] == ["h", "delta", "count", "flagged", "dist_single", "dist_double"]
    assert [r[0] for r in doc["records"]] == [0.2, 0.1]
    assert doc["records"][1][1] == pytest.approx(math.sqrt(0.1))
    assert doc["summary"]["target"] == "double"
    assert code == (0 if doc["summary"]["passed"] else 4)


@pytest.mark.parametrize("argv", [
    ["skeleton", "--preset", "figure3"],
    ["spectrum", "--preset", "jump", "--delta", "0.2", "--h", "0.1", "--eps", "0.1", "--format", "json"],
    ["pseudospectra", "--h", "0.1", "--n", "120", "--grid", "5x5"],
])
def test_byte_identical_reruns(tmp_path, argv):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    cli.main(argv + ["-o", str(a)])
    cli.main(argv + ["-o", str(b), "--threads", "2"])
    assert a.read_bytes() == b.read_bytes()
    first = a.read_text().splitlines()[0]
    assert first.startswith("# params: ") or first == "{"


def test_numbers_round_trip(capsys):
    _, out, _ = run(capsys, "skeleton", "--preset", "jump", "--delta", "0.1")
    _, _, _, rows = _csv(out)
    for r in rows[:50]:
        x = float(r["re"])
        assert float("%.17g" % x) == x and r["re"] == "%.17g" % x
