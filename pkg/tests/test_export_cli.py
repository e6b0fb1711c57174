import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from frontlab import export
from frontlab.cli import main
from frontlab.errors import SpecError
from frontlab.gallery import gallery_entry, point_verdict
from frontlab.surface import IntrinsicCTB, ParamDomain

from conftest import singular_set, surface

BAD_SPEC = """[surface]
domain = rectangle
u_range = -1, 1
v_range = -1, 1
x = u^2
y = u^3 +* 2
z = v
nu_x = 0
nu_y = 0
nu_z = 1
"""


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# -- export ---------------------------------------------------------------------

def test_plain_conversion():
    d = export.plain({"a": np.float64(1.5), "b": np.arange(3), "c": (np.bool_(True), float("nan"))})
    assert d == {"a": 1.5, "b": [0, 1, 2], "c": [True, None]}


def test_mesh_swallowtail_200():
    obj = export.mesh_obj(surface("swallowtail"), 200)
    lines = obj.splitlines()
    assert sum(1 for x in lines if x.startswith("v ")) == 40000
    assert sum(1 for x in lines if x.startswith("#@ ")) == 40000
    assert sum(1 for x in lines if x.startswith("f ")) == 2 * 199 * 199


def test_mesh_torus_wraps():
    obj = export.mesh_obj(surface("torus-immersed"), 10)
    faces = [x for x in obj.splitlines() if x.startswith("f ")]
    assert len(faces) == 200
    idx = np.array([list(map(int, f.split()[1:])) for f in faces])
    assert idx.min() == 1 and idx.max() == 100


def test_mesh_needs_extrinsic_surface():
    ctb = IntrinsicCTB([["1", "0"], ["0", "1"]], ["0", "0"], ParamDomain.rectangle((-1, 1), (-1, 1)))
    with pytest.raises(SpecError):
        export.mesh_obj(ctb, 4)


def test_curves_csv_double_swallowtail():
    text = export.curves_csv(singular_set("double-swallowtail"))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == export.CSV_COLUMNS
    assert sorted({r["branch"] for r in rows}) == ["0", "1", "2", "3"]
    lam = np.array([float(r["lambda"]) for r in rows])
    u, v = (np.array([float(r[k]) for r in rows]) for k in ("u", "v"))
    assert np.max(np.abs(lam)) < 1e-9 and np.max(np.abs(v**2 - 6 * u**2)) < 1e-9


def test_analysis_report_schema():
    rep = json.loads(export.dumps(export.analysis_report(singular_set("swallowtail"))))
    assert rep["format"] == "frontlab-report" and rep["version"] == export.REPORT_VERSION
    assert {"curves", "points", "vertices", "arcs", "kappa_s", "tolerances", "domain"} <= set(rep)
    assert [p["verdict"] for p in rep["points"]] == ["A3"]


# -- command line -------------------------------------------------------------------

def test_analyze_swallowtail(capsys):
    code, out, _ = run(["analyze", "gallery:swallowtail"], capsys)
    rep = json.loads(out)
    assert code == 0
    (p,) = rep["points"]
    assert p["verdict"] == "A3" and np.allclose(p["point"], 0.0, atol=1e-9)
    assert rep["sectors"]["0"]["sign"] == "positive"


def test_analyze_torus_empty(capsys):
    code, out, _ = run(["analyze", "gallery:torus-immersed", "--grid", "33"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["curves"] == [] and rep["points"] == []


def test_analyze_deterministic(capsys):
    a = run(["analyze", "gallery:double-swallowtail", "--grid", "65"], capsys)[1]
    b = run(["analyze", "gallery:double-swallowtail", "--grid", "65"], capsys)[1]
    assert a == b


def test_bad_expression_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.spec"
    p.write_text(BAD_SPEC)
    code, _, err = run(["analyze", str(p)], capsys)
    assert code == 1 and "syntax error at byte 5" in err


@pytest.mark.parametrize("argv", [["analyze", "gallery:nope"], ["analyze", "/nonexistent.spec"],
                                  ["analyze", "gallery:swallowtail", "--grid", "4"], ["frobnicate"]])
def test_input_errors_exit_1(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_gb_local_cuspidal_edge(tmp_path, capsys):
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps({"vertices": [[0, 0.4], [0, -0.4], [0.5, 0]], "edges": ["sigma", "line", "line"]}))
    code, out, _ = run(["gb", "gallery:cuspidal-edge", "--local", str(tri), "--plot", str(tmp_path / "fig")], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "PASS"
    assert abs(rep["result"]["residual"]) < rep["result"]["budget"]
    assert sorted(os.listdir(tmp_path / "fig")) == ["gb_terms.png", "kappa_s.png", "singular_set.png", "triangle.png"]


def test_gb_local_not_admissible_exit_3(tmp_path, capsys):
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps({"vertices": [[-0.5, -0.3], [0.4, -0.6], [0.3, 0.5]], "edges": ["line"] * 3}))
    code, _, err = run(["gb", "gallery:scherbak", "--local", str(tri)], capsys)
    assert code == 3 and "not admissible" in err


def test_gb_global_torus_immersed(capsys):
    code, out, _ = run(["gb", "gallery:torus-immersed", "--global", "--grid", "33"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["result"]["residual_A"] < 1e-8 and rep["result"]["residual_B"] < 1e-8


def test_gb_global_rectangle_exit_1(capsys):
    assert run(["gb", "gallery:swallowtail", "--global"], capsys)[0] == 1


def test_export_commands(tmp_path, capsys):
    mesh = tmp_path / "m.obj"
    assert run(["export", "gallery:swallowtail", "mesh", "--mesh-n", "20", "-o", str(mesh)], capsys)[0] == 0
    assert sum(1 for x in mesh.read_text().splitlines() if x.startswith("v ")) == 400
    code, out, _ = run(["export", "gallery:double-swallowtail", "singular-curves"], capsys)
    assert code == 0 and out.splitlines()[0] == ",".join(export.CSV_COLUMNS)
    code, out, _ = run(["export", "gallery:cuspidal-edge", "spec"], capsys)
    assert code == 0 and "[surface]" in out and "nu_x" in out


def test_analyze_plot(tmp_path, capsys):
    code, _, _ = run(["analyze", "gallery:double-swallowtail", "--grid", "65", "--plot", str(tmp_path),
                      "-o", str(tmp_path / "r.json")], capsys)
    assert code == 0
    for f in ("singular_set.png", "kappa_s.png"):
        assert (tmp_path / f).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_gallery_list_and_json(capsys):
    code, out, _ = run(["gallery", "list"], capsys)
    assert code == 0 and "wavy-parallel-torus" in out and "[PAPER]" in out
    code, out, _ = run(["gallery", "run", "cuspidal-edge", "--format", "json"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "PASS" and list(rep["entries"]) == ["cuspidal-edge"]


def test_gallery_failure_exit_2(capsys):
    e = gallery_entry("cuspidal-edge")
    saved = list(e.expectations)
    try:
        e.expectations.append(("origin is A3", "TRIVIAL", point_verdict((0.0, 0.0), "A3")))
        code, out, _ = run(["gallery", "run", "cuspidal-edge"], capsys)
    finally:
        e.expectations[:] = saved
    assert code == 2 and out.splitlines()[-1].startswith("FAIL")


def test_gallery_threads_keep_order(monkeypatch, capsys):
    monkeypatch.setenv("FRONTLAB_THREADS", "2")
    code, out, _ = run(["gallery", "run", "cuspidal-lips", "cuspidal-edge"], capsys)
    names = [line.split()[1] for line in out.splitlines()]
    assert code == 0 and names.index("cuspidal-edge") > names.index("cuspidal-lips")
    assert names[0] == "cuspidal-lips" and names[-1] == "cuspidal-edge"


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "frontlab.cli", "gallery", "list"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("cuspidal-edge")
