from __future__ import annotations

import json

import pytest

from nversion.cli import main
from nversion.diversify import write_batch
from nversion.errors import ManifestError
from nversion.validate import VariantSource
from nversion.workspace import init_workspace, load_manifest, load_project


@pytest.fixture
def ws(tmp_path):
    init_workspace(tmp_path, "b2_mul3")
    return tmp_path


def nv(*argv):
    return main([str(a) for a in argv])


def test_manifest_validation(ws):
    m = load_manifest(ws)
    assert load_project(m).target == "b2_mul3"
    doc = json.loads((ws / "nv.json").read_text())
    doc["target"] = "missing"
    (ws / "nv.json").write_text(json.dumps(doc))
    with pytest.raises(ManifestError, match="not defined"):
        load_project(load_manifest(ws))
    doc["test_suite"] = "tests/nope.json"
    (ws / "nv.json").write_text(json.dumps(doc))
    with pytest.raises(ManifestError, match="does not exist"):
        load_manifest(ws)


def test_duplicate_definition_rejected(ws):
    (ws / "src/copy.cm").write_text((ws / "src/b2_mul3.cm").read_text())
    doc = json.loads((ws / "nv.json").read_text())
    doc["sources"].append({"path": "src/copy.cm", "dialect": "cm"})
    (ws / "nv.json").write_text(json.dumps(doc))
    with pytest.raises(ManifestError, match="more than one"):
        load_project(load_manifest(ws))


def test_full_pipeline_and_exit_codes(ws, capsys):
    assert nv("diversify", "-C", ws, "--n", 10) == 0
    assert nv("validate", "-C", ws) == 0
    assert nv("harness", "-C", ws, "--level", 2, "--inject", "B2", "--inject-into", 1) == 0
    assert nv("metrics", "static", "-C", ws) == 0
    assert nv("metrics", "dynamic", "-C", ws) == 0
    for name in ("validation.json", "uniqueness.json", "dynamic.csv", "dynamic.json"):
        assert (ws / "reports" / name).is_file()
    capsys.readouterr()
    assert nv("run", ws / "bundle", "--args", "1") == 42
    assert capsys.readouterr().err.strip() == "n-version divergence: v1=2 v2=3 at input (1)"
    assert nv("run", ws / "bundle", "--args", "0") == 0
    assert capsys.readouterr().out.strip() == "0"
    assert nv("run", ws / "bundle", "--args", "1", "--inject-into", "2") == 42
    assert "v1=3 v2=2" in capsys.readouterr().err


def test_zero_equivalent_variants(ws, capsys):
    bad = VariantSource(1, "int16 b2_mul3(int16 x) { return x * 4; }\n", "cm")
    write_batch(ws, "b2_mul3", [bad])
    assert nv("validate", "-C", ws) == 2
    assert nv("harness", "-C", ws) == 2


def test_run_compile_parse(tmp_path, capsys):
    src = tmp_path / "q.cm"
    src.write_text("int8 q(int8 a, int8 b) { return a / b; }\n")
    assert nv("run", src, "--args", "7,2") == 0
    assert capsys.readouterr().out.strip() == "3"
    assert nv("run", src, "--args", "7", "0") == 41
    assert capsys.readouterr().err.strip() == "trap: div_zero"
    assert nv("compile", src, "--level", 3, "--emit", "disasm") == 0
    assert capsys.readouterr().out.startswith("# unit (i8, i8) -> i8")
    assert nv("run", src, "--args", "1,2", "--trace") == 0
    assert json.loads(capsys.readouterr().out)["outcome"]["value"] == 0
    assert nv("parse", src, "--emit", "source", "--to", "gm") == 0
    assert capsys.readouterr().out.startswith("func q(a int8, b int8) int8 {")
    (tmp_path / "bad.cm").write_text("int8 q(int8 a) { return a +; }\n")
    assert nv("parse", tmp_path / "bad.cm") == 1
    assert nv("run", src, "--args", "1") == 1
    assert nv("frobnicate") == 1
    assert nv("compile", src, "--level", 9) == 1


def test_demo_exit_codes(capsys):
    assert nv("demo-mitigate", "--bug", "B3") == 0
    out = capsys.readouterr().out
    assert "baseline (1 version): Return(0)" in out
    assert "hardened (3 versions): Trap(nversion_divergence)" in out
    assert "mitigated: true" in out
    assert nv("demo-mitigate", "--bug", "none") == 1
    assert "nothing to mitigate" in capsys.readouterr().out
