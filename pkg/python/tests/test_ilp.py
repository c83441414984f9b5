import pytest

from backbone import BackboneParams, TrafficVector, build_backbone_model, transitivity_separator
from coverage import CoverageParams, build_cover_model, build_energy_model, capacity_separator
from errors import MissingValueError, ModelError
from ilp import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    LE,
    Constraint,
    LinearModel,
    SolveLimits,
    SolveStatus,
    check,
    solve,
)
from lp_format import export_lp, read_lp, sanitize_names
from oracles import connected_atlas_graphs, street_graph_from_nx
from streetgraph import WirelessLinkSet


def triangle_cover():
    """三角形の頂点被覆（線形緩和は 0.5 ずつで分数になる）"""
    m = LinearModel("triangle")
    for name in ("x0", "x1", "x2"):
        m.add_variable(name)
    m.add_constraint({"x0": 1, "x1": 1}, GE, 1)
    m.add_constraint({"x1": 1, "x2": 1}, GE, 1)
    m.add_constraint({"x0": 1, "x2": 1}, GE, 1)
    m.set_objective({"x0": 1, "x1": 1, "x2": 1})
    return m.seal()


def test_solve_small_cover():
    report = solve(triangle_cover())
    assert report.status == SolveStatus.OPTIMAL
    assert report.is_optimal
    assert report.objective == pytest.approx(2.0)
    # 同点のときは変数順で辞書式最小の割当
    assert report.assignment == {"x0": 0.0, "x1": 1.0, "x2": 1.0}
    assert report.nodes >= 1


def test_lexicographic_tie_break():
    m = LinearModel("pick_one")
    m.add_variable("a")
    m.add_variable("b")
    m.add_constraint({"a": 1, "b": 1}, LE, 1)
    m.set_objective({"a": -1, "b": -1})
    report = solve(m)
    assert report.objective == pytest.approx(-1.0)
    assert report.assignment == {"a": 0.0, "b": 1.0}


def test_infeasible_model():
    m = LinearModel("too_many")
    m.add_variable("a")
    m.add_variable("b")
    m.add_constraint({"a": 1, "b": 1}, GE, 3)
    report = solve(m)
    assert report.status == SolveStatus.INFEASIBLE
    assert report.assignment is None
    assert report.objective is None
    assert str(report.status) == "infeasible"


def test_continuous_variable_follows_binaries():
    m = LinearModel("hops")
    m.add_variable("x")
    m.add_variable("y")
    m.add_variable("h", CONTINUOUS, 0.0, float("inf"))
    m.add_constraint({"h": 1, "x": -1, "y": -1}, EQ, 0)
    m.add_constraint({"x": 1, "y": 1}, GE, 1)
    m.set_objective({"h": 1}, constant=0.5)
    report = solve(m)
    assert report.is_optimal
    assert report.objective == pytest.approx(1.5)
    assert report.assignment["h"] == pytest.approx(1.0)
    assert report.assignment["x"] == 0.0


def test_node_limit_reports_incumbent():
    report = solve(triangle_cover(), SolveLimits(max_nodes=1))
    assert report.status == SolveStatus.NODE_LIMIT
    assert not report.is_optimal
    assert report.nodes == 1
    # 根の丸めで全部1の解が見つかっている
    assert report.assignment is not None
    assert not check(triangle_cover(), report.assignment)


def test_solve_limits_must_be_positive():
    with pytest.raises(ModelError):
        SolveLimits(max_nodes=0)
    with pytest.raises(ModelError):
        SolveLimits(max_seconds=0.0)


def test_separator_adds_lazy_rows():
    m = LinearModel("lazy")
    for name in ("x0", "x1", "x2"):
        m.add_variable(name)
    m.add_constraint({"x0": 1, "x1": 1, "x2": 1}, GE, 1)
    m.set_objective({"x0": 1, "x1": 1, "x2": 1})
    seen = []

    def separator(a):
        seen.append(dict(a))
        if a["x0"] < 0.5:
            return [Constraint("force_x0", {"x0": 1.0}, GE, 1.0, tag="lazy")]
        return []

    report = solve(m.seal(), separator=separator)
    assert report.is_optimal
    assert report.assignment == {"x0": 1.0, "x1": 0.0, "x2": 0.0}
    assert report.rounds == 1
    assert [c.name for c in report.added_cuts] == ["force_x0"]
    assert seen[0] == {"x0": 0.0, "x1": 0.0, "x2": 1.0}
    # 元のモデルは変更されない
    assert len(m.constraints) == 1


def test_hint_is_used_only_when_feasible():
    good = solve(triangle_cover(), hint={"x0": 1, "x1": 1, "x2": 1})
    assert good.is_optimal
    assert good.objective == pytest.approx(2.0)
    assert good.assignment == {"x0": 0.0, "x1": 1.0, "x2": 1.0}

    bad = solve(triangle_cover(), hint={"x0": 1})
    assert bad.assignment == good.assignment


def test_empty_model_is_trivially_optimal():
    report = solve(LinearModel("empty"))
    assert report.is_optimal
    assert report.objective == 0.0


def test_sealed_model_rejects_changes():
    m = triangle_cover()
    with pytest.raises(ModelError):
        m.add_variable("x3")
    with pytest.raises(ModelError):
        m.add_constraint({"x0": 1}, LE, 1)


def test_model_validation_errors():
    m = LinearModel("bad")
    m.add_variable("x")
    with pytest.raises(ModelError):
        m.add_variable("x")
    with pytest.raises(ModelError):
        m.add_variable("z", kind="integer")
    with pytest.raises(ModelError):
        m.add_constraint({"x": 1}, "<", 1)
    m.add_constraint({"ghost": 1}, LE, 1)
    with pytest.raises(ModelError):
        m.seal()


def test_check_lists_violated_rows():
    m = triangle_cover()
    violated = check(m, {"x0": 1, "x1": 0, "x2": 0})
    assert len(violated) == 1
    assert violated[0].coeffs == {"x1": 1.0, "x2": 1.0}
    assert check(m, {"x0": 0, "x1": 1, "x2": 1}) == []
    with pytest.raises(MissingValueError):
        check(m, {"x0": 1})


def test_constraint_violation_amounts():
    con = Constraint("c", {"a": 2.0, "b": 1.0}, EQ, 2.0)
    assert con.violation({"a": 1, "b": 0}) == 0.0
    assert con.violation({"a": 1, "b": 1}) == 1.0
    assert Constraint("d", {"a": 1.0}, GE, 1.0).violation({"a": 0}) == 1.0


def test_export_lp_sections():
    text = export_lp(triangle_cover())
    lines = text.splitlines()
    assert lines[1] == "Minimize"
    assert lines[2] == " obj: + 1 x0 + 1 x1 + 1 x2"
    assert " c0: + 1 x0 + 1 x1 >= 1" in lines
    assert lines.index("Subject To") < lines.index("Bounds") < lines.index("Binaries")
    assert lines[-1] == "End"


def test_lp_text_reads_back_to_same_model():
    m = LinearModel("mixed")
    m.add_variable("x")
    m.add_variable("y")
    m.add_variable("h", CONTINUOUS, 0.0, float("inf"))
    m.add_constraint({"h": 1, "x": -1, "y": -1}, EQ, 0, name="hop")
    m.add_constraint({"x": 1, "y": 1}, GE, 1, name="cover")
    m.add_constraint({"x": 0.5, "y": 2.5}, LE, 2.75, name="cap")
    m.set_objective({"h": 1, "x": 0.25}, constant=3)
    m.seal()

    again = read_lp(export_lp(m))
    assert [(v.name, v.kind, v.lb, v.ub) for v in again.variables] == [
        ("x", BINARY, 0.0, 1.0),
        ("y", BINARY, 0.0, 1.0),
        ("h", CONTINUOUS, 0.0, float("inf")),
    ]
    assert [(c.name, dict(c.coeffs), c.sense, c.rhs) for c in again.constraints] == [
        (c.name, dict(c.coeffs), c.sense, c.rhs) for c in m.constraints
    ]
    assert again.objective == m.objective
    assert again.objective_constant == 3.0
    assert solve(again).objective == pytest.approx(solve(m).objective)


def test_sanitize_names_is_deterministic():
    mapping = sanitize_names(["a b", "a_b", "1x", "end", "e12", "ok"])
    assert mapping == {
        "a b": "a_b",
        "a_b": "a_b_2",
        "1x": "v_1x",
        "end": "v_end",
        "e12": "v_e12",
        "ok": "ok",
    }
    assert sanitize_names(["a b", "a_b", "1x", "end", "e12", "ok"]) == mapping


def test_first_optimum_without_tie_break():
    # 根の下界 1.5 は切り上げると 2 なので、最適な暫定解があれば分枝しない
    hint = {"x0": 1.0, "x1": 1.0, "x2": 0.0}
    report = solve(triangle_cover(), hint=hint, lexicographic=False)
    assert report.is_optimal
    assert report.assignment == hint
    assert report.nodes == 1

    report = solve(triangle_cover(), hint={"x0": 1, "x1": 1, "x2": 1}, lexicographic=False)
    assert report.objective == pytest.approx(2.0)
    assert check(triangle_cover(), report.assignment) == []


def test_fractional_objective_is_not_rounded():
    m = LinearModel("half")
    m.add_variable("a")
    m.add_variable("b")
    m.add_constraint({"a": 1, "b": 1}, GE, 1)
    m.set_objective({"a": 0.5, "b": 0.75})
    report = solve(m, lexicographic=False)
    assert report.objective == pytest.approx(0.5)
    assert report.assignment == {"a": 1.0, "b": 0.0}


def test_repeated_solves_are_identical():
    g = street_graph_from_nx(next(gr for gr in connected_atlas_graphs(5) if gr.number_of_edges() == 6))
    model = build_cover_model(g, CoverageParams(m_ns=12))
    first = solve(model, separator=capacity_separator(g, CoverageParams(m_ns=12)))
    for _ in range(3):
        again = solve(model, separator=capacity_separator(g, CoverageParams(m_ns=12)))
        assert again.assignment == first.assignment
        assert again.objective == first.objective
        assert again.nodes == first.nodes


def test_optimal_assignments_satisfy_every_row():
    for graph in connected_atlas_graphs(5):
        g = street_graph_from_nx(graph)
        for m_ns in (256, 12):
            model = build_cover_model(g, CoverageParams(m_ns=m_ns))
            report = solve(model, separator=capacity_separator(g, CoverageParams(m_ns=m_ns)))
            if report.is_optimal:
                assert check(model, report.assignment, 1e-6) == [], sorted(graph.edges)
        for t in range(1, g.n + 1):
            model = build_energy_model(g, CoverageParams(ffd_budget=t))
            report = solve(model, lexicographic=False)
            if report.is_optimal:
                assert check(model, report.assignment, 1e-6) == []

    for graph in connected_atlas_graphs(4):
        g = street_graph_from_nx(graph)
        pairs = frozenset((min(u, v), max(u, v)) for u, v in graph.edges)
        w = WirelessLinkSet(n=g.n, pairs=pairs)
        ffd = g.node_ids
        f = TrafficVector({i: 0.0 for i in ffd})
        for gw in range(1, g.n + 1):
            model = build_backbone_model(g, w, ffd, f, BackboneParams(gw_budget=gw), "fixed_gw_min_hops")
            report = solve(model, separator=transitivity_separator(model, ffd))
            assert report.is_optimal
            assert check(model, report.assignment, 1e-6) == [], (sorted(graph.edges), gw)
            assert transitivity_separator(model, ffd)(report.assignment) == []
