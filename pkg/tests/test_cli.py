import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from click.testing import CliRunner

from chiplet_cost import default_catalog
from chiplet_cost.cli import RunManifest, main, run

EXAMPLE_RUNS = [
    ("analyze", "amd-epyc"),
    ("compare", "amd-epyc"),
    ("sweep", "sweep"),
    ("reuse", "scms"),
    ("reuse", "ocme"),
    ("reuse", "fsmc"),
    ("curves", "curves"),
    ("break-even", "break-even"),
]


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def invoke_err(cli, args):
    try:
        runner = CliRunner(mix_stderr=False)  # click < 8.2
    except TypeError:
        runner = CliRunner()
    return runner.invoke(cli, args)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("command, example", EXAMPLE_RUNS)
def test_examples_run_and_emit_manifest(tmp_path, command, example):
    res = invoke(command, "--spec", example, "--out", str(tmp_path))
    assert res.exit_code == 0, res.output
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == command
    assert man["resolved_catalog"]["nodes"]["7nm"]["wafer_cost"] > 0
    assert "defaults_applied" in man
    for name in man["outputs"]:
        assert (tmp_path / name).is_file()
    assert not list(tmp_path.glob(".*.tmp"))


@pytest.mark.parametrize("command, example", EXAMPLE_RUNS)
def test_outputs_are_deterministic(tmp_path, command, example):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert invoke(command, "--spec", example, "--out", str(out), "--jobs", "3").exit_code == 0
    files = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".json"))
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_curves_default_catalog(tmp_path):
    assert invoke("curves", "--out", str(tmp_path)).exit_code == 0
    for node in default_catalog().nodes:
        rows = read_csv(tmp_path / f"curve_{node}.csv")
        assert list(rows[0]) == ["area_mm2", "yield", "normalized_cost"]
        ys = [float(r["yield"]) for r in rows]
        assert all(b < a for a, b in zip(ys, ys[1:]))


def test_reuse_scms_rows(tmp_path):
    assert invoke("reuse", "--spec", "scms", "--out", str(tmp_path)).exit_code == 0
    rows = read_csv(tmp_path / "reuse_systems.csv")
    assert [r["system"] for r in rows] == ["scms_1x", "scms_2x", "scms_4x"]
    summary = json.loads((tmp_path / "scenario_summary.json").read_text())
    ledger = json.loads((tmp_path / "nre_ledger.json").read_text())
    assert summary["nre_ledger_total"] == ledger["total"]
    assert len(ledger["package"]) == 1  # shared package


def test_malformed_spec_names_key(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"modules": {"m": {"area": -5, "node": "7nm"}}}))
    res = invoke_err(main, ["analyze", "--spec", str(bad), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    err = json.loads(res.stderr)
    assert err["error"] == "InvariantViolation"
    assert err["key"] == "modules.m.area"


def test_invalid_json_spec(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    res = invoke_err(main, ["analyze", "--spec", str(bad), "--out", str(tmp_path)])
    assert res.exit_code == 2
    assert json.loads(res.stderr)["error"] == "ParseError"


def test_missing_spec(tmp_path):
    res = invoke_err(main, ["reuse", "--out", str(tmp_path)])
    assert res.exit_code == 2
    assert json.loads(res.stderr)["key"] == "--spec"


def test_unknown_normalize_system(tmp_path):
    res = invoke_err(
        main, ["analyze", "--spec", "amd-epyc", "--normalize", "nope", "--out", str(tmp_path)])
    assert res.exit_code == 2
    assert json.loads(res.stderr)["key"] == "--normalize"


def test_normalize_reference(tmp_path):
    assert invoke("analyze", "--spec", "amd-epyc", "--normalize", "epyc8_soc", "--out", str(tmp_path)).exit_code == 0
    rows = {r["system"]: r for r in read_csv(tmp_path / "breakdown.csv")}
    ref = float(rows["epyc8_soc"]["re_total"])
    for r in rows.values():
        assert float(r["normalized_total"]) == pytest.approx(float(r["total"]) / ref)


def test_custom_catalog_is_recorded(tmp_path):
    cat = default_catalog().to_dict()
    cat["nodes"]["7nm"]["wafer_cost"] = 12345.0
    del cat["nodes"]["7nm"]["cluster_param"]
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(cat))
    out = tmp_path / "o"
    assert invoke("curves", "--catalog", str(path), "--out", str(out)).exit_code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["resolved_catalog"]["nodes"]["7nm"]["wafer_cost"] == 12345.0
    assert "nodes.7nm.cluster_param = 3.0 (default)" in man["defaults_applied"]


def test_compare_table(tmp_path):
    assert invoke("compare", "--spec", "amd-epyc", "--out", str(tmp_path)).exit_code == 0
    rows = read_csv(tmp_path / "compare_summary.csv")
    assert [r["multi"] for r in rows] == ["epyc8_mcm", "epyc16_mcm"]
    assert 0.4 <= float(rows[0]["die_cost_saving"]) <= 0.6


def test_break_even_report(tmp_path):
    assert invoke("break-even", "--spec", "break-even", "--out", str(tmp_path)).exit_code == 0
    rep = json.loads((tmp_path / "break_even.json").read_text())
    assert rep["outcome"] == "crossover"
    assert 1_000_000 <= rep["quantity"] <= 4_000_000


def test_break_even_no_crossover_reported(tmp_path):
    spec = json.loads(Path(
        __import__("chiplet_cost.catalog", fromlist=["x"]).bundled_example("break-even")).read_text())
    spec["break_even"]["range"] = [1, 1000]
    path = tmp_path / "be.json"
    path.write_text(json.dumps(spec))
    assert invoke("break-even", "--spec", str(path), "--out", str(tmp_path / "o")).exit_code == 0
    rep = json.loads((tmp_path / "o" / "break_even.json").read_text())
    assert rep["outcome"] == "range_exhausted" and rep["quantity"] is None


def test_sweep_csv(tmp_path):
    assert invoke("sweep", "--spec", "sweep", "--out", str(tmp_path)).exit_code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    # 2 nodes x (SoC at count 1 + 3 multi-chip techs at counts 1..5)
    assert len(rows) == 2 * (1 + 3 * 5)
    keys = [(r["node"], int(r["chiplet_count"])) for r in rows]
    assert keys == sorted(keys, key=lambda k: (["5nm", "14nm"].index(k[0]), k[1]))


@pytest.mark.parametrize("command, example, charts", [
    ("sweep", "sweep", ["sweep_5nm.svg", "sweep_14nm.svg"]),
    ("reuse", "scms", ["reuse.svg"]),
    ("curves", "curves", ["curves.svg"]),
    ("compare", "amd-epyc", ["compare.svg"]),
])
def test_charts_are_svg(tmp_path, command, example, charts):
    assert invoke(command, "--spec", example, "--out", str(tmp_path), "--charts").exit_code == 0
    for name in charts:
        root = ET.parse(tmp_path / name).getroot()
        assert root.tag.endswith("svg")
        assert len(list(root.iter())) > 20


def test_run_api_returns_status(tmp_path):
    m = RunManifest("curves", None, None, tmp_path)
    assert run(m) == 0
    assert "manifest.json" in m.written


def test_examples_command():
    res = invoke("examples")
    assert "amd-epyc" in res.output.split()
