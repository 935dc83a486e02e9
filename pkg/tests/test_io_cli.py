import json
import math

import numpy as np
import pytest

from flaggeo import jsonio
from flaggeo.cli import run
from flaggeo.errors import DimensionMismatch, InvalidFlag, NotSkew, ValidationError
from flaggeo.suites import random_flag


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run_cli(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- encoding ------------------------------------------------------------------------------

def test_reals_roundtrip_exactly(rng):
    vals = rng.standard_normal(200) * 10.0 ** rng.integers(-12, 12, 200)
    for v in vals:
        assert float(jsonio.format_real(v)) == v
    assert jsonio.format_real(1.0) == "1.0"
    assert jsonio.format_real(0.1) == "0.10000000000000001"
    assert jsonio.format_real(math.nan) == "null"


def test_dumps_is_valid_json():
    obj = {"a": [1.5, 2, None, True], "b": {"c": np.float64(0.25), "d": []}, "e": "x\"y"}
    assert json.loads(jsonio.dumps(obj)) == {"a": [1.5, 2, None, True], "b": {"c": 0.25, "d": []},
                                             "e": "x\"y"}
    assert json.loads(jsonio.dumps(obj, indent=None)) == json.loads(jsonio.dumps(obj))


def test_matrix_json_validation():
    with pytest.raises(DimensionMismatch):
        jsonio.matrix_from_json({"rows": 2, "cols": 2, "data": [1, 2, 3]})
    with pytest.raises(ValidationError):
        jsonio.matrix_from_json({"rows": 1, "cols": 1, "data": ["x"]})
    with pytest.raises(ValidationError):
        jsonio.matrix_from_json([1, 2])
    with pytest.raises(NotSkew):
        jsonio.skew_from_json(jsonio.matrix_to_json(np.eye(2)))


def test_flag_json_roundtrip(rng):
    p = random_flag((1, 2, 2), rng)
    text = jsonio.dumps(jsonio.flag_to_json(p))
    back = jsonio.flag_from_json(json.loads(text))
    assert back.sig == p.sig
    assert np.array_equal(back.mats, p.mats)


def test_flag_json_rejects_bad_rank(rng):
    obj = jsonio.flag_to_json(random_flag((1, 2), rng))
    obj["projectors"][0]["rank"] = 2
    with pytest.raises(ValidationError):
        jsonio.flag_from_json(obj)
    obj = jsonio.flag_to_json(random_flag((1, 2), rng))
    obj["projectors"][0]["data"][0] += 0.1
    with pytest.raises(InvalidFlag):
        jsonio.flag_from_json(obj)


def test_curve_json():
    c = jsonio.curve_from_json({"kind": "samples", "xs": [0.0, 1.0, 2.0],
                                "mats": [jsonio.matrix_to_json(np.eye(2) * k) for k in (1, 2, 3)]})
    assert np.allclose(c(1.5), 2.5 * np.eye(2))
    with pytest.raises(ValidationError):
        jsonio.curve_from_json({"kind": "spline"})


# -- command line --------------------------------------------------------------------------

@pytest.fixture
def files(tmp_path):
    h = math.pi / 2
    return {
        "p": write(tmp_path, "p.json", {"rows": 2, "cols": 2, "data": [1, 0, 0, 0], "rank": 1}),
        "d": write(tmp_path, "d.json", {"rows": 2, "cols": 2, "data": [0, h, h, 0]}),
        "r": write(tmp_path, "r.json", {"rows": 2, "cols": 2, "data": [0, 0, 0, 1], "rank": 1}),
        "dir": tmp_path,
    }


def test_grassmann_exp_example(capsys, files):
    code, out, _ = run_cli(capsys, "grassmann", "exp", "--p", files["p"], "--delta", files["d"])
    assert code == 0
    res = jsonio.projector_from_json(json.loads(out))
    assert np.allclose(res.mat, np.diag([0.0, 1.0]), atol=1e-15)


def test_bracket_check_prints_false(capsys):
    code, out, _ = run_cli(capsys, "homog", "bracket-check", "--sig", "1,1,1")
    assert code == 0 and out.strip() == "false"
    code, out, _ = run_cli(capsys, "homog", "bracket-check", "--sig", "2,3")
    assert out.strip() == "true"


def test_domain_error_exit_2(capsys, files):
    code, out, err = run_cli(capsys, "grassmann", "log", "--p", files["p"], "--r", files["r"])
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "CutLocus"


def test_validation_exit_1(capsys, files, tmp_path):
    bad = write(tmp_path, "bad.json", {"rows": 2, "cols": 2, "data": [1, 0, 0, 1], "rank": 1})
    code, _, err = run_cli(capsys, "grassmann", "dist", "--p", files["p"], "--r", bad)
    assert code == 1 and json.loads(err)["error"] == "InvalidProjector"
    code, _, err = run_cli(capsys, "grassmann", "dist", "--p", files["p"], "--r", "missing.json")
    assert code == 1
    code, _, err = run_cli(capsys, "grassmann", "nope")
    assert code == 1 and "JSON inputs" in err
    code, _, err = run_cli(capsys, "grassmann", "dist", "--p", files["p"], "--r", files["p"],
                           "--format", "csv")
    assert code == 1


def test_distance_and_angles(capsys, files, tmp_path):
    v = [math.cos(0.4), math.sin(0.4)]
    r = write(tmp_path, "r2.json", {"rows": 2, "cols": 2, "rank": 1,
                                    "data": [v[0] * v[0], v[0] * v[1], v[1] * v[0], v[1] * v[1]]})
    _, out, _ = run_cli(capsys, "grassmann", "dist", "--p", files["p"], "--r", r)
    assert json.loads(out)["distance"] == pytest.approx(0.4, abs=1e-14)
    _, out, _ = run_cli(capsys, "grassmann", "angles", "--p", files["p"], "--r", r)
    assert json.loads(out)["angles"] == pytest.approx([0.4], abs=1e-14)
    u = write(tmp_path, "u.json", {"rows": 2, "cols": 1, "data": [1, 0]})
    _, out, _ = run_cli(capsys, "grassmann", "holonomy", "--p", files["p"], "--r", r, "--u", u)
    assert json.loads(out)["data"] == pytest.approx(v, abs=1e-14)


def test_gen_and_flag_pipeline(capsys, tmp_path):
    d = str(tmp_path)
    assert run(["gen", "flag", "--sig", "1,2,2", "--seed", "5", "--out", f"{d}/f.json"]) == 0
    assert run(["gen", "flag-tangent", "--p", f"{d}/f.json", "--seed", "6", "--out", f"{d}/t.json"]) == 0
    assert run(["gen", "flag-tangent", "--p", f"{d}/f.json", "--seed", "7", "--out", f"{d}/s.json"]) == 0
    assert run(["gen", "field", "--sig", "1,2,2", "--seed", "8", "--out", f"{d}/x.json"]) == 0
    assert run(["gen", "field", "--sig", "1,2,2", "--seed", "9", "--out", f"{d}/y.json"]) == 0
    capsys.readouterr()

    code, out, _ = run_cli(capsys, "flag", "curvature", "--p", f"{d}/f.json", "--x", f"{d}/t.json",
                           "--y", f"{d}/s.json")
    k_closed = json.loads(out)["curvature"]
    code, out, _ = run_cli(capsys, "homog", "curvature", "--p", f"{d}/f.json", "--x", f"{d}/t.json",
                           "--y", f"{d}/s.json")
    assert json.loads(out)["curvature"] == pytest.approx(k_closed, rel=1e-12)

    args = ["--p", f"{d}/f.json", "--x", f"{d}/x.json", "--y", f"{d}/y.json"]
    _, out1, _ = run_cli(capsys, "flag", "connection", *args, "--deriv", "exact")
    _, out2, _ = run_cli(capsys, "homog", "connection", *args)
    a = np.array([m["data"] for m in json.loads(out1)["deltas"]])
    b = np.array([m["data"] for m in json.loads(out2)["deltas"]])
    assert np.allclose(a, b, atol=1e-6 * np.abs(a).max())

    assert run(["flag", "exp", "--p", f"{d}/f.json", "--delta", f"{d}/t.json", "--t", "0.2",
                "--out", f"{d}/g.json"]) == 0
    code, out, _ = run_cli(capsys, "flag", "section", "--p", f"{d}/f.json", "--r", f"{d}/g.json")
    s = jsonio.square_from_json(json.loads(out))
    assert np.allclose(s.T @ s, np.eye(5), atol=1e-12)
    code, out, _ = run_cli(capsys, "flag", "geodesic", "--p", f"{d}/f.json", "--delta", f"{d}/t.json",
                           "--ts", "0,0.2")
    pts = json.loads(out)["points"]
    g = jsonio.flag_from_json(json.load(open(f"{d}/g.json")))
    assert np.allclose(jsonio.flag_from_json(pts[1]["flag"]).mats, g.mats, atol=1e-14)
    code, out, _ = run_cli(capsys, "flag", "metric", "--p", f"{d}/f.json", "--a", f"{d}/t.json")
    assert json.loads(out)["metric"] > 0


def test_gen_is_seeded(capsys, monkeypatch):
    monkeypatch.setenv("FLAGGEO_SEED", "11")
    _, a, _ = run_cli(capsys, "gen", "projector", "--n", "4", "--q", "2")
    _, b, _ = run_cli(capsys, "gen", "projector", "--n", "4", "--q", "2", "--seed", "11")
    _, c, _ = run_cli(capsys, "gen", "projector", "--n", "4", "--q", "2", "--seed", "12")
    assert a == b != c
    monkeypatch.setenv("FLAGGEO_SEED", "eleven")
    code, _, _ = run_cli(capsys, "gen", "skew")
    assert code == 1


def test_eigtrack_csv_and_strict(capsys, tmp_path):
    xs = np.linspace(-3, 3, 121)
    mats = [np.array([[2 * np.cos(x) ** 2 + np.sin(x) ** 2, np.cos(x) * np.sin(x)],
                      [np.cos(x) * np.sin(x), 2 * np.sin(x) ** 2 + np.cos(x) ** 2]]) for x in xs]
    curve = write(tmp_path, "c.json", {"kind": "samples", "xs": xs.tolist(),
                                       "mats": [jsonio.matrix_to_json(m) for m in mats]})
    code, out, _ = run_cli(capsys, "eigtrack", "--curve", curve, "--x0", "0", "--grid=-1:1:5")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("x,q_0_0") and len(lines) == 6
    assert all(line.endswith(",1") for line in lines[1:])
    code, out, err = run_cli(capsys, "eigtrack", "--curve", curve, "--x0", "0", "--grid=-2:2:9",
                             "--strict")
    assert code == 2 and json.loads(err)["error"] == "CutLocusReached"
    code, out, _ = run_cli(capsys, "eigtrack", "--curve", curve, "--x0", "0", "--grid=-2:2:9",
                           "--format", "json")
    rep = json.loads(out)
    assert rep["complete"] is False and rep["points"][0]["frame"] is None


def test_eigtrack_crossing_exit_2(capsys, tmp_path):
    curve = write(tmp_path, "c.json", {"kind": "polynomial", "coeffs": [
        jsonio.matrix_to_json(np.diag([1.0, 0.8, -5.0])),
        jsonio.matrix_to_json(np.diag([0.0, 1.0, 0.0]))]})
    code, _, err = run_cli(capsys, "eigtrack", "--curve", curve, "--x0", "-0.9",
                           "--grid=-1:1:10")
    info = json.loads(err)
    assert code == 2 and info["error"] == "SignatureChange"
    assert info["grid_cell"][0] <= 0.2 <= info["grid_cell"][1]


def test_verify_single_suite(capsys):
    code, out, _ = run_cli(capsys, "verify", "symmetric", "--seed", "3")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and rep["suites"][0]["id"] == 6
