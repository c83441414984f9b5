import pytest

from coverage import (
    CoverageParams,
    allocate_gamma,
    build_cover_model,
    build_energy_model,
    capacity_separator,
    check_segment_capacity,
    end_energy,
    sensor_count,
    solve_cover,
    solve_energy_cover,
    total_energy,
)
from errors import InfeasibleCoverError, ModelError
from ilp import EQ, GE, SolveStatus
from oracles import (
    brute_energy,
    brute_energy_fractional,
    brute_energy_front,
    brute_energy_unbounded,
    brute_min_cover,
    connected_atlas_graphs,
    street_graph_from_nx,
)
from streetgraph import Intersection, RoadSegment, build_street_graph, gen_grid


@pytest.fixture
def path3():
    return gen_grid(1, 3, 100.0, 0.1)


@pytest.fixture
def grid2():
    return gen_grid(2, 2, 100.0, 0.1)


def single_segment(length_m, density_per_m):
    nodes = [Intersection(0, 0.0, 0.0), Intersection(1, length_m, 0.0)]
    return build_street_graph(nodes, [RoadSegment(0, 1, length_m, density_per_m, True)])


def test_sensor_count_and_energy():
    assert sensor_count(49.9, 0.1) == 4
    assert sensor_count(0.0, 0.1) == 0
    assert end_energy(10) == 55
    assert end_energy(0) == 0
    counts = {(0, 1): 10, (1, 0): 10, (1, 2): 5, (2, 1): 5}
    assert total_energy(counts) == 140
    assert total_energy([10, 10, 5, 5]) == 140
    with pytest.raises(ValueError):
        sensor_count(-1.0, 0.1)


def test_coverage_params_validation():
    with pytest.raises(ValueError):
        CoverageParams(m_ns=0)
    with pytest.raises(ValueError):
        CoverageParams(ffd_budget=-1)


def test_cover_model_rows(grid2):
    model = build_cover_model(grid2, CoverageParams())
    assert [v.name for v in model.variables] == ["x_0", "x_1", "x_2", "x_3"]
    assert [c.tag for c in model.constraints] == ["eq:sumofgamma"] * 4
    assert model.objective == {"x_0": 1.0, "x_1": 1.0, "x_2": 1.0, "x_3": 1.0}

    budget = build_cover_model(grid2, CoverageParams(ffd_budget=3))
    last = budget.constraints[-1]
    assert (last.tag, last.sense, last.rhs) == ("eq:phi_x", EQ, 3.0)
    assert budget.objective == {}

    with pytest.raises(InfeasibleCoverError):
        build_cover_model(grid2, CoverageParams(ffd_budget=5))


def test_cover_model_adds_capacity_rows(path3):
    model = build_cover_model(path3, CoverageParams(m_ns=15))
    rows = [c for c in model.constraints if c.tag == "eq:maxsensor-ffd"]
    assert len(rows) == 1
    assert rows[0].coeffs == {"x_0": 10.0, "x_2": 10.0}
    assert (rows[0].sense, rows[0].rhs) == (GE, 5.0)


def test_solve_cover_on_path_and_grid(path3, grid2):
    cover, report, _ = solve_cover(path3, CoverageParams())
    assert cover == {1}
    assert report.objective == pytest.approx(1.0)

    # 対角の2組は同点なので辞書式で小さい {1, 2}
    cover, report, _ = solve_cover(grid2, CoverageParams())
    assert cover == {1, 2}
    assert report.objective == pytest.approx(2.0)


def test_solve_cover_with_budget(grid2):
    cover, report, _ = solve_cover(grid2, CoverageParams(ffd_budget=3))
    assert report.is_optimal
    assert len(cover) == 3


def test_segment_over_capacity_is_rejected():
    g = single_segment(1000.0, 0.6)
    with pytest.raises(InfeasibleCoverError) as err:
        check_segment_capacity(g, CoverageParams(m_ns=256))
    assert "2·M_ns" in str(err.value)
    assert err.value.segment == (0, 1)
    with pytest.raises(InfeasibleCoverError):
        solve_cover(g, CoverageParams(m_ns=256))


def test_allocate_gamma_single_ffd(path3):
    gamma, counts = allocate_gamma(path3, {1}, CoverageParams())
    assert gamma.get(1, 0) == pytest.approx(100.0)
    assert gamma.get(0, 1) == 0.0
    assert gamma.get(1, 2) == pytest.approx(100.0)
    assert counts.k == {(0, 1): 0, (1, 0): 10, (1, 2): 10, (2, 1): 0}
    assert total_energy(counts) == 110
    assert gamma.load(path3, 1) == pytest.approx(20.0)
    assert counts.per_node() == {0: 0, 1: 20, 2: 0}


def test_allocate_gamma_balanced_split():
    # 9台の区間は小さいid側が5台
    g = single_segment(90.0, 0.1)
    gamma, counts = allocate_gamma(g, {0, 1}, CoverageParams())
    assert counts.k == {(0, 1): 5, (1, 0): 4}
    assert gamma.get(0, 1) + gamma.get(1, 0) == pytest.approx(90.0)
    assert total_energy(counts) == 15 + 10


def test_allocate_gamma_rejects_uncovered_segment(path3):
    with pytest.raises(InfeasibleCoverError) as err:
        allocate_gamma(path3, {0}, CoverageParams())
    assert err.value.segment == (1, 2)


def test_allocate_gamma_uses_min_cost_flow_when_capacity_binds(path3):
    # 均等分割だとノード1が10台を持ち M_ns=8 を超える
    gamma, counts = allocate_gamma(path3, {0, 1, 2}, CoverageParams(m_ns=8))
    assert counts.k == {(0, 1): 6, (1, 0): 4, (1, 2): 4, (2, 1): 6}
    assert total_energy(counts) == 62
    assert total_energy(counts) == brute_energy(path3, {0, 1, 2}, 8)
    assert gamma.get(0, 1) + gamma.get(1, 0) == pytest.approx(100.0)


def test_allocate_gamma_infeasible_under_capacity(path3):
    with pytest.raises(InfeasibleCoverError):
        allocate_gamma(path3, {1}, CoverageParams(m_ns=15))


def test_zero_density_segment_is_split_by_length():
    nodes = [Intersection(0, 0.0, 0.0), Intersection(1, 100.0, 0.0), Intersection(2, 150.0, 0.0)]
    segments = [RoadSegment(0, 1, 100.0, 0.1, True), RoadSegment(1, 2, 50.0, 0.0, True)]
    g = build_street_graph(nodes, segments)
    gamma, counts = allocate_gamma(g, {1}, CoverageParams())
    assert gamma.get(1, 2) == pytest.approx(50.0)
    assert counts.k[(1, 2)] == 0
    gamma, _ = allocate_gamma(g, {1, 2}, CoverageParams())
    assert gamma.get(1, 2) == pytest.approx(25.0)
    assert gamma.get(2, 1) == pytest.approx(25.0)


def test_capacity_separator_returns_nogood(path3):
    separate = capacity_separator(path3, CoverageParams(m_ns=15))
    cuts = separate({"x_0": 0.0, "x_1": 1.0, "x_2": 0.0})
    assert len(cuts) == 1
    assert cuts[0].coeffs == {"x_0": 1.0, "x_2": 1.0}
    assert (cuts[0].sense, cuts[0].rhs, cuts[0].tag) == (GE, 1.0, "eq:maxsensor-ffd")
    assert separate({"x_0": 0.0, "x_1": 1.0, "x_2": 1.0}) == []


def test_tight_capacity_cover(path3):
    cover, report, _ = solve_cover(path3, CoverageParams(m_ns=15))
    assert cover == {1, 2}
    _, counts = allocate_gamma(path3, cover, CoverageParams(m_ns=15))
    assert max(counts.per_node().values()) <= 15


def test_min_cover_matches_brute_force():
    for graph in connected_atlas_graphs(6):
        g = street_graph_from_nx(graph)
        cover, report, _ = solve_cover(g, CoverageParams())
        assert report.is_optimal
        assert len(cover) == brute_min_cover(g), sorted(graph.edges)
        assert brute_energy_unbounded(g, cover) is not None


def test_allocation_matches_brute_force_without_capacity():
    for graph in connected_atlas_graphs(5):
        g = street_graph_from_nx(graph)
        for mask in range(1, 2 ** g.n):
            ffd = {i for i in g.node_ids if mask >> i & 1}
            expected = brute_energy_unbounded(g, ffd)
            if expected is None:
                continue
            _, counts = allocate_gamma(g, ffd, CoverageParams())
            assert total_energy(counts) == pytest.approx(expected)


def test_allocation_matches_brute_force_with_tight_capacity():
    # 1区間3台、M_ns=4 なので容量が効く
    p = CoverageParams(m_ns=4)
    for graph in connected_atlas_graphs(5):
        g = street_graph_from_nx(graph, 100.0, 0.03)
        cover, report, _ = solve_cover(g, p)
        expected_size = brute_min_cover(g, 4)
        if expected_size is None:
            assert cover is None
            continue
        assert len(cover) == expected_size, sorted(graph.edges)
        for mask in range(1, 2 ** g.n):
            ffd = {i for i in g.node_ids if mask >> i & 1}
            expected = brute_energy(g, ffd, 4)
            if expected is None:
                with pytest.raises(InfeasibleCoverError):
                    allocate_gamma(g, ffd, p)
                continue
            _, counts = allocate_gamma(g, ffd, p)
            assert total_energy(counts) == pytest.approx(expected)
            assert max(counts.per_node().values()) <= 4


def path_graph(segments):
    """(u, v, 長さ, 密度) の並びから一直線の StreetGraph を作る"""
    ids = sorted({i for u, v, _, _ in segments for i in (u, v)})
    nodes = [Intersection(i, float(i) * 50.0, 0.0) for i in ids]
    return build_street_graph(nodes, [RoadSegment(u, v, d, rho, True) for u, v, d, rho in segments])


def test_forced_fraction_counts_against_capacity():
    # 0–1 は11台、0–2 は0.5台ぶんの端数だけでノード0しか持てない
    g = path_graph([(0, 1, 110.0, 0.1), (0, 2, 5.0, 0.1)])
    p = CoverageParams(m_ns=6)
    gamma, counts = allocate_gamma(g, {0, 1}, p)
    assert counts.k[(0, 1)] == 5
    assert counts.k[(1, 0)] == 6
    assert total_energy(counts) == 36
    assert gamma.get(0, 1) == pytest.approx(50.0)
    assert gamma.get(1, 0) == pytest.approx(60.0)
    assert gamma.get(0, 2) == pytest.approx(5.0)
    assert gamma.load(g, 0) == pytest.approx(5.5)
    assert gamma.load(g, 1) == pytest.approx(6.0)
    assert total_energy(counts) == brute_energy_fractional(g, {0, 1}, 6)

    cover, report, _ = solve_cover(g, p)
    assert report.is_optimal
    assert cover == {0, 1}


def test_shared_fractions_reserve_capacity():
    # 容量の合計がちょうど 9 なので、端数はノード1にまとめるしかない
    g = path_graph([(0, 1, 45.0, 0.1), (1, 2, 45.0, 0.1)])
    gamma, counts = allocate_gamma(g, {0, 1, 2}, CoverageParams(m_ns=3))
    assert counts.k == {(0, 1): 3, (1, 0): 1, (1, 2): 1, (2, 1): 3}
    assert total_energy(counts) == 14
    assert total_energy(counts) == brute_energy_fractional(g, {0, 1, 2}, 3)
    for i in (0, 1, 2):
        assert gamma.load(g, i) <= 3 + 1e-9
    assert gamma.get(0, 1) + gamma.get(1, 0) == pytest.approx(45.0)
    assert gamma.get(1, 2) + gamma.get(2, 1) == pytest.approx(45.0)


def test_fractional_allocation_matches_brute_force():
    # 1区間 3.5 台なので端数が必ず残る
    p = CoverageParams(m_ns=5)
    for graph in connected_atlas_graphs(4):
        if graph.number_of_edges() > 4:
            continue
        g = street_graph_from_nx(graph, 100.0, 0.035)
        sizes = []
        for mask in range(1, 2 ** g.n):
            ffd = {i for i in g.node_ids if mask >> i & 1}
            expected = brute_energy_fractional(g, ffd, 5)
            if expected is None:
                with pytest.raises(InfeasibleCoverError):
                    allocate_gamma(g, ffd, p)
                continue
            sizes.append(len(ffd))
            gamma, counts = allocate_gamma(g, ffd, p)
            assert total_energy(counts) == pytest.approx(expected), (sorted(graph.edges), sorted(ffd))
            for i in ffd:
                assert gamma.load(g, i) <= 5 + 1e-6
            for s in g.parking_segments:
                assert gamma.get(s.u, s.v) + gamma.get(s.v, s.u) == pytest.approx(s.length_m)
        cover, report, _ = solve_cover(g, p)
        if not sizes:
            assert cover is None
        else:
            assert len(cover) == min(sizes), sorted(graph.edges)


def test_energy_does_not_grow_when_ffd_are_added():
    for m_ns in (256, 12):
        p = CoverageParams(m_ns=m_ns)
        for graph in connected_atlas_graphs(5):
            g = street_graph_from_nx(graph)
            energy = {}
            for mask in range(1, 2 ** g.n):
                ffd = frozenset(i for i in g.node_ids if mask >> i & 1)
                try:
                    _, counts = allocate_gamma(g, ffd, p)
                except InfeasibleCoverError:
                    continue
                energy[ffd] = total_energy(counts)
            for ffd, value in energy.items():
                for v in g.node_ids:
                    if v not in ffd:
                        bigger = ffd | {v}
                        assert bigger in energy, (sorted(graph.edges), sorted(bigger))
                        assert energy[bigger] <= value + 1e-9, (sorted(graph.edges), sorted(ffd), v)


def test_energy_model_objective(path3):
    model = build_energy_model(path3, CoverageParams(ffd_budget=2))
    # 区間ごとに E1 = 55, E2 = 30、c_0 = c_2 = 25, c_1 = 50
    assert model.objective == {"x_0": -25.0, "x_1": -50.0, "x_2": -25.0}
    assert model.evaluate({"x_0": 0.0, "x_1": 1.0, "x_2": 1.0}) == pytest.approx(85.0)
    assert model.evaluate({"x_0": 1.0, "x_1": 0.0, "x_2": 1.0}) == pytest.approx(110.0)
    assert model.evaluate({"x_0": 1.0, "x_1": 1.0, "x_2": 1.0}) == pytest.approx(60.0)
    with pytest.raises(ModelError):
        build_energy_model(path3, CoverageParams())


def test_energy_cover_matches_brute_force_front():
    for graph in connected_atlas_graphs(5):
        g = street_graph_from_nx(graph)
        front = brute_energy_front(g)
        for t, expected in front.items():
            cover, report, _ = solve_energy_cover(g, CoverageParams(ffd_budget=t))
            assert report.is_optimal
            assert len(cover) == t
            assert report.objective == pytest.approx(expected), (sorted(graph.edges), t)
            _, counts = allocate_gamma(g, cover, CoverageParams())
            assert total_energy(counts) == pytest.approx(expected)


def test_energy_cover_skips_capacity_infeasible_sets(path3):
    # M_ns=15 では {1} だけのカバーは割当不能
    cover, report, _ = solve_energy_cover(path3, CoverageParams(m_ns=15, ffd_budget=1))
    assert report.status == SolveStatus.INFEASIBLE
    assert cover is None
    cover, report, _ = solve_energy_cover(path3, CoverageParams(m_ns=15, ffd_budget=2))
    assert cover in ({0, 1}, {1, 2})
