import json
import random

import pytest
from click.testing import CliRunner

from fairpm.cli import main
from fairpm.log_model import EventLog, parse_xes, serialize_xes

from conftest import make_trace

SPEC_DOC = {
    "plan": [{"anchor": None, "attribute": "size"}],
    "sensitive": {"anchor": None, "attribute": "who",
                  "deprived_values": ["bad"]},
    "class": {"anchor": None, "attribute": "delay",
              "positive_values": ["on-time"]},
    "epsilon": 0.05,
    "relabel_mode": "both",
}

PNML = b"""<?xml version="1.0"?>
<pnml>
  <net id="net1" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <place id="p0"><initialMarking><text>1</text></initialMarking></place>
    <place id="p1"/>
    <place id="p2"/>
    <transition id="tA"><name><text>A</text></name></transition>
    <transition id="tB"><name><text>B</text></name></transition>
    <arc id="a1" source="p0" target="tA"/>
    <arc id="a2" source="tA" target="p1"/>
    <arc id="a3" source="p1" target="tB"/>
    <arc id="a4" source="tB" target="p2"/>
  </net>
</pnml>
"""


def fixture_log():
    """80 traces; 'size' loosely tracks the delay outcome."""
    rng = random.Random(17)
    traces = []
    groups = [("ok", True)] * 32 + [("ok", False)] * 16
    groups += [("bad", True)] * 20 + [("bad", False)] * 12
    for i, (who, on_time) in enumerate(groups):
        size = rng.randint(0, 2) if on_time else rng.randint(2, 5)
        activities = ["A", "B"] if i % 7 else ["A"]
        traces.append(make_trace(
            activities, start=i * 1000, case_id=f"c{i}",
            attrs={"who": who, "size": size,
                   "delay": "on-time" if on_time else "delayed"}))
    return EventLog(traces)


@pytest.fixture
def workspace(tmp_path):
    log_path = tmp_path / "log.xes"
    data = serialize_xes(fixture_log())
    log_path.write_bytes(data if isinstance(data, bytes) else data.encode())
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC_DOC))
    net_path = tmp_path / "net.pnml"
    net_path.write_bytes(PNML)
    return tmp_path


def run_cli(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_extract_writes_table(workspace):
    out = workspace / "table.csv"
    result = run_cli(["extract", "--log", str(workspace / "log.xes"),
                      "--spec", str(workspace / "spec.json"),
                      "--out", str(out)])
    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "size,sensitive,label"
    assert len(lines) == 81


def test_analyze_outputs_and_threshold(workspace):
    out_dir = workspace / "analysis"
    result = run_cli(["analyze", "--log", str(workspace / "log.xes"),
                      "--spec", str(workspace / "spec.json"),
                      "--out", str(out_dir), "--seed", "3"])
    assert result.exit_code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert (out_dir / "standard.dot").read_bytes().startswith(b"digraph")
    assert (out_dir / "fair.dot").read_bytes().startswith(b"digraph")
    assert report["config"]["epsilon"] == 0.05
    if report["relabel_plan"]["feasible"]:
        assert report["train"]["disc_fair"]["disc"] <= 0.05 + 1e-9
    assert report["train"]["acc_fair"] <= report["train"]["acc_standard"] + 1e-12


def test_analyze_epsilon_one_keeps_tree(workspace):
    out_dir = workspace / "loose"
    result = run_cli(["analyze", "--log", str(workspace / "log.xes"),
                      "--spec", str(workspace / "spec.json"),
                      "--out", str(out_dir), "--epsilon", "1.0"])
    assert result.exit_code == 0
    assert ((out_dir / "fair.dot").read_bytes()
            == (out_dir / "standard.dot").read_bytes())
    report = json.loads((out_dir / "report.json").read_text())
    assert report["relabel_plan"]["flips"] == []


def test_sweep_levels_deterministic(workspace):
    args_for = lambda d: ["sweep", "--log", str(workspace / "log.xes"),
                          "--spec", str(workspace / "spec.json"),
                          "--out", str(d), "--levels", "0.2,0.3",
                          "--repeats", "2", "--seed", "1"]
    assert run_cli(args_for(workspace / "s1")).exit_code == 0
    assert run_cli(args_for(workspace / "s2")).exit_code == 0
    first = (workspace / "s1" / "sweep.csv").read_bytes()
    assert first == (workspace / "s2" / "sweep.csv").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == "level,seed,disc_data,disc_standard,disc_fair,acc_standard,acc_fair"
    assert len(lines) == 5  # 2 levels x 2 repeats


def test_sweep_epsilons_with_dot(workspace):
    out_dir = workspace / "eps"
    result = run_cli(["sweep", "--log", str(workspace / "log.xes"),
                      "--spec", str(workspace / "spec.json"),
                      "--out", str(out_dir), "--epsilons", "0.02,0.2",
                      "--seed", "0", "--dot"])
    assert result.exit_code == 0
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("epsilon,level,seed,")
    assert len(lines) == 3
    for tag in ("eps_0.02_seed_0", "eps_0.2_seed_0"):
        assert (out_dir / f"{tag}_standard.dot").exists()
        assert (out_dir / f"{tag}_fair.dot").exists()


def test_sweep_requires_levels_or_epsilons(workspace):
    result = CliRunner().invoke(main, [
        "sweep", "--log", str(workspace / "log.xes"),
        "--spec", str(workspace / "spec.json"),
        "--out", str(workspace / "none")])
    assert result.exit_code != 0
    assert not (workspace / "none").exists()


def test_missing_input_fails_without_partial_output(workspace):
    result = CliRunner().invoke(main, [
        "analyze", "--log", str(workspace / "log.xes"),
        "--spec", str(workspace / "nope.json"),
        "--out", str(workspace / "broken")])
    assert result.exit_code != 0
    assert not (workspace / "broken").exists()


def test_failing_analysis_leaves_no_files(workspace):
    # a spec whose class attribute never appears -> every situation dropped
    bad = dict(SPEC_DOC)
    bad["class"] = {"anchor": None, "attribute": "missing",
                    "positive_values": ["x"]}
    spec_path = workspace / "bad.json"
    spec_path.write_text(json.dumps(bad))
    result = CliRunner().invoke(main, [
        "analyze", "--log", str(workspace / "log.xes"),
        "--spec", str(spec_path), "--out", str(workspace / "fails")])
    assert result.exit_code != 0
    assert not (workspace / "fails").exists()


def test_enrich_with_net_adds_conformance(workspace):
    out = workspace / "enriched.xes"
    result = run_cli(["enrich", "--log", str(workspace / "log.xes"),
                      "--net", str(workspace / "net.pnml"),
                      "--out", str(out)])
    assert result.exit_code == 0
    with open(out, "rb") as handle:
        enriched = parse_xes(handle)
    assert len(enriched) == 80
    for trace in enriched:
        assert "trace:duration" in trace.attributes
        assert "trace:deviation" in trace.attributes
        short = len(trace.events) == 1
        assert trace.attributes["trace:deviation"] is short
