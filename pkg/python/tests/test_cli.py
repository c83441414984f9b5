import json

import pytest
from click.testing import CliRunner

from cli import cli
from lp_format import read_lp
from streetgraph import parse_street_graph


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, ["--log-dir", str(tmp_path / "logs"), *args], obj={})

    return invoke


def csv_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def test_gen_grid_writes_graph(run, tmp_path):
    out = tmp_path / "grid.json"
    result = run("gen-grid", "2x2", "-o", str(out))
    assert result.exit_code == 0, result.output
    g = parse_street_graph(out.read_text(encoding="utf-8"))
    assert g.n == 4
    assert len(g.segments) == 4


def test_gen_grid_to_stdout(run):
    result = run("gen-grid", "1x3")
    assert result.exit_code == 0
    assert len(json.loads(result.output)["nodes"]) == 3


def test_gen_grid_rejects_bad_size(run):
    result = run("gen-grid", "three")
    assert result.exit_code == 1
    assert "グリッドを生成できません" in result.output


def test_solve_then_validate(run, tmp_path):
    graph = tmp_path / "graph.json"
    assert run("gen-grid", "1x3", "-o", str(graph)).exit_code == 0
    out_dir = tmp_path / "out"
    result = run("solve", "--input", str(graph), "--out-dir", str(out_dir))
    assert result.exit_code == 0, result.output
    assert "道路グラフ: 交差点 3" in result.output
    assert "FFD数 (phi_x): 1" in result.output
    assert (out_dir / "plan_summary.txt").exists()

    plan_file = out_dir / "plan.json"
    result = run("validate", str(plan_file), str(graph))
    assert result.exit_code == 0, result.output
    assert "違反はありません" in result.output

    doc = json.loads(plan_file.read_text(encoding="utf-8"))
    doc["hop"] = {k: v + 1 for k, v in doc["hop"].items()}
    plan_file.write_text(json.dumps(doc), encoding="utf-8")
    result = run("validate", str(plan_file), str(graph))
    assert result.exit_code == 1
    assert "[eq:hop_count]" in result.output


def test_validate_rejects_broken_plan(run, tmp_path):
    graph = tmp_path / "graph.json"
    run("gen-grid", "1x3", "-o", str(graph))
    plan_file = tmp_path / "plan.json"
    plan_file.write_text("{\"ffd\": 3}", encoding="utf-8")
    result = run("validate", str(plan_file), str(graph))
    assert result.exit_code == 1
    assert "ファイルの形式が不正です" in result.output


def test_solve_infeasible_segment(run, tmp_path, single_segment_file):
    result = run("solve", "--input", str(single_segment_file), "--out-dir", str(tmp_path / "out"))
    assert result.exit_code == 2
    assert "2·M_ns" in result.output
    assert not (tmp_path / "out" / "plan.json").exists()


def test_solve_node_limit(run, tmp_path):
    result = run("solve", "--grid", "5x5", "--max-nodes", "1", "--out-dir", str(tmp_path / "out"))
    assert result.exit_code == 3
    assert "node_limit" in result.output


def test_solve_rejects_two_sources(run, tmp_path, single_segment_file):
    result = run("solve", "--grid", "2x2", "--input", str(single_segment_file), "--out-dir", str(tmp_path))
    assert result.exit_code == 1
    assert "設定が不正です" in result.output


def test_pareto_energy_csv(run, tmp_path):
    result = run("pareto", "--which", "energy", "--grid", "2x2", "--out-dir", str(tmp_path))
    assert result.exit_code == 0, result.output
    assert csv_lines(tmp_path / "energy_front.csv") == [
        "budget,objective",
        "2,220.0000",
        "3,170.0000",
        "4,120.0000",
    ]


def test_pareto_hops_csv(run, tmp_path):
    result = run("pareto", "--which", "hops", "--grid", "1x3", "--levels", "3", "--out-dir", str(tmp_path))
    assert result.exit_code == 0, result.output
    assert csv_lines(tmp_path / "hops_front.csv") == [
        "gateways,avg_hop,ffd_level",
        "1,1.6667,3",
        "2,1.3333,3",
        "3,1.0000,3",
    ]


def test_pareto_level_out_of_range(run, tmp_path):
    result = run("pareto", "--which", "hops", "--grid", "1x3", "--levels", "5", "--out-dir", str(tmp_path))
    assert result.exit_code == 2
    assert csv_lines(tmp_path / "hops_front.csv") == ["gateways,avg_hop,ffd_level"]


def test_pareto_rejects_bad_levels(run, tmp_path):
    result = run("pareto", "--which", "hops", "--grid", "1x3", "--levels", "a,b", "--out-dir", str(tmp_path))
    assert result.exit_code == 1


def test_pareto_node_limit(run, tmp_path):
    result = run("pareto", "--which", "energy", "--grid", "2x2", "--max-nodes", "1", "--out-dir", str(tmp_path))
    assert result.exit_code == 3


def test_export_lp_cover(run):
    result = run("export-lp", "--grid", "2x2")
    assert result.exit_code == 0, result.output
    assert "Minimize" in result.output
    model = read_lp(result.output)
    assert len(model.variables) >= 4


def test_export_lp_backbone(run, tmp_path):
    out = tmp_path / "backbone.lp"
    result = run("export-lp", "--grid", "1x3", "--model", "backbone", "-o", str(out))
    assert result.exit_code == 0, result.output
    text = out.read_text(encoding="utf-8")
    assert "y_1" in text
    assert text.rstrip().endswith("End")


def test_pareto_ffd_csv(run, tmp_path):
    result = run("pareto", "--which", "ffd", "--grid", "1x3", "--out-dir", str(tmp_path))
    assert result.exit_code == 0, result.output
    assert csv_lines(tmp_path / "ffd_front.csv") == [
        "gateways,ffd,avg_hop",
        "1,1,1.0000",
        "2,2,1.0000",
        "3,3,1.0000",
    ]


def test_solve_with_weibull_interarrival(run, tmp_path):
    out_dir = tmp_path / "out"
    result = run("solve", "--grid", "1x3", "--weibull-scale", "100", "--out-dir", str(out_dir))
    assert result.exit_code == 0, result.output
    doc = json.loads((out_dir / "plan.json").read_text(encoding="utf-8"))
    assert doc["params"]["per_sensor_rate"] == pytest.approx(0.01)


@pytest.mark.slow
def test_pareto_hops_on_five_by_five(run, tmp_path):
    result = run("pareto", "--which", "hops", "--grid", "5x5", "--out-dir", str(tmp_path))
    assert result.exit_code == 0, result.output
    lines = csv_lines(tmp_path / "hops_front.csv")
    assert lines[0] == "gateways,avg_hop,ffd_level"
    rows = [line.split(",") for line in lines[1:]]
    assert {int(r[2]) for r in rows} == {12, 20, 25}
    for level in (12, 20, 25):
        front = [(int(r[0]), float(r[1])) for r in rows if int(r[2]) == level]
        assert front[0][0] == 1
        assert front[-1] == (level, 1.0)
        assert all(a[1] > b[1] for a, b in zip(front, front[1:]))
