# coverage.py
# FFD配置のカバーモデル、管理長 Γ の割当、センサー数とエネルギーの計算
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from errors import InfeasibleCoverError, ModelError
from ilp import GE, EQ, Assignment, Constraint, LinearModel, SolveLimits, SolveReport, solve
from streetgraph import FLOOR_EPS, RoadSegment, StreetGraph

logger = logging.getLogger(__name__)

End = Tuple[int, int]

DEFAULT_M_NS = 256


@dataclass(frozen=True)
class CoverageParams:
    m_ns: int = DEFAULT_M_NS
    ffd_budget: Optional[int] = None

    def __post_init__(self):
        if self.m_ns < 1:
            raise ValueError(f"M_ns は1以上である必要があります: {self.m_ns}")
        if self.ffd_budget is not None and self.ffd_budget < 0:
            raise ValueError(f"ffd_budget は0以上である必要があります: {self.ffd_budget}")


@dataclass(frozen=True)
class GammaAssignment:
    """有向区間端 (i, j) ごとの管理長 Γ_ij [m]"""

    managed_len_m: Dict[End, float]

    def get(self, i: int, j: int) -> float:
        return self.managed_len_m.get((i, j), 0.0)

    def load(self, g: StreetGraph, i: int) -> float:
        """ノード i が管理するセンサー量 Σ_j Γ_ij·ρ_ij"""
        return sum(self.get(i, s.other(i)) * s.sensor_density_per_m for s in g.incident(i))


@dataclass(frozen=True)
class SensorCounts:
    """有向区間端 (i, j) ごとのセンサー数 k_ij"""

    k: Dict[End, int]

    def per_node(self) -> Dict[int, int]:
        totals: Dict[int, int] = {}
        for (i, _), count in sorted(self.k.items()):
            totals[i] = totals.get(i, 0) + count
        return totals


def sensor_count(gamma_m: float, density_per_m: float) -> int:
    """k = floor(Γ·ρ)"""
    if gamma_m < 0 or density_per_m < 0:
        raise ValueError("管理長と密度は0以上である必要があります。")
    return int(math.floor(gamma_m * density_per_m + FLOOR_EPS))


def end_energy(k: int) -> float:
    return 0.5 * k * (k + 1)


def total_energy(k: Union[SensorCounts, Mapping[End, int], Iterable[int]]) -> float:
    """φΩ = Σ ½·k·(k+1)（両方向の区間端すべて）"""
    if isinstance(k, SensorCounts):
        values = k.k.values()
    elif isinstance(k, Mapping):
        values = k.values()
    else:
        values = k
    return float(sum(end_energy(int(v)) for v in values))


def check_segment_capacity(g: StreetGraph, p: CoverageParams):
    """両端にFFDを置いても M_ns を超える区間があればエラー"""
    for s in g.parking_segments:
        demand = s.length_m * s.sensor_density_per_m
        if demand > 2 * p.m_ns + FLOOR_EPS:
            raise InfeasibleCoverError(
                f"区間 ({s.u}, {s.v}) はカバーできません: d·ρ = {demand:g} > 2·M_ns = {2 * p.m_ns}",
                segment=(s.u, s.v),
            )


def x_name(i: int) -> str:
    return f"x_{i}"


def build_cover_model(g: StreetGraph, p: CoverageParams, sealed: bool = True) -> LinearModel:
    """x_i だけの0/1モデル

    * 駐車区間ごとに x_i + x_j ≥ 1（管理長の制約を0/1変数に射影したもの）
    * ノード i の隣接区間のセンサー合計が M_ns を超えるとき、
      Σ_j S_ij·x_j ≥ Σ_j S_ij − M_ns（FFDのない隣接点の区間は i が全部持つ）
    * 目的は Σ x_i。ffd_budget があれば Σ x_i = budget として目的は定数
    """
    check_segment_capacity(g, p)
    if p.ffd_budget is not None and p.ffd_budget > g.n:
        raise InfeasibleCoverError(f"ffd_budget {p.ffd_budget} が交差点数 {g.n} を超えています。")

    model = LinearModel("cover")
    for i in g.node_ids:
        model.add_variable(x_name(i))

    for s in g.parking_segments:
        model.add_constraint(
            {x_name(s.u): 1, x_name(s.v): 1}, GE, 1, name=f"cover_{s.u}_{s.v}", tag="eq:sumofgamma"
        )

    for i in g.node_ids:
        segs = g.incident(i)
        total = sum(s.sensors for s in segs)
        if total <= p.m_ns:
            continue
        coeffs: Dict[str, float] = {}
        for s in segs:
            coeffs[x_name(s.other(i))] = coeffs.get(x_name(s.other(i)), 0) + s.sensors
        model.add_constraint(coeffs, GE, total - p.m_ns, name=f"capacity_{i}", tag="eq:maxsensor-ffd")

    if p.ffd_budget is None:
        model.set_objective({x_name(i): 1 for i in g.node_ids})
    else:
        model.add_constraint(
            {x_name(i): 1 for i in g.node_ids}, EQ, p.ffd_budget, name="ffd_budget", tag="eq:phi_x"
        )
        model.set_objective({})
    return model.seal() if sealed else model


def cover_from_assignment(a: Mapping[str, float], g: StreetGraph) -> Set[int]:
    return {i for i in g.node_ids if a.get(x_name(i), 0.0) > 0.5}


def _uncovered(g: StreetGraph, ffd: Set[int]) -> List[End]:
    return [(s.u, s.v) for s in g.parking_segments if s.u not in ffd and s.v not in ffd]


def _balanced_counts(g: StreetGraph, ffd: Set[int]) -> Dict[End, int]:
    """区間ごとの均等分割（小さいid側が端数を持つ）"""
    k: Dict[End, int] = {}
    for s in g.parking_segments:
        total = s.sensors
        if s.u in ffd and s.v in ffd:
            k[(s.u, s.v)] = total - total // 2
            k[(s.v, s.u)] = total // 2
        elif s.u in ffd:
            k[(s.u, s.v)], k[(s.v, s.u)] = total, 0
        else:
            k[(s.u, s.v)], k[(s.v, s.u)] = 0, total
    return k


def _node_loads(k: Mapping[End, int]) -> Dict[int, int]:
    loads: Dict[int, int] = {}
    for (i, _), count in k.items():
        loads[i] = loads.get(i, 0) + count
    return loads


def _fractions(g: StreetGraph, ffd: Set[int]) -> Tuple[Dict[int, float], List[Tuple[RoadSegment, float]]]:
    """区間ごとの端数 d·ρ − floor(d·ρ)

    片側だけがFFDの区間の端数はそのFFDが必ず持つ (forced)。
    両側がFFDの区間の端数 (shared) はどちらにどれだけ振ってもよい。
    """
    forced = {i: 0.0 for i in ffd}
    shared: List[Tuple[RoadSegment, float]] = []
    for s in g.parking_segments:
        if s.sensor_density_per_m == 0:
            continue
        frac = s.length_m * s.sensor_density_per_m - s.sensors
        if frac <= FLOOR_EPS:
            continue
        ends = [i for i in (s.u, s.v) if i in ffd]
        if len(ends) == 1:
            forced[ends[0]] += frac
        else:
            shared.append((s, frac))
    return forced, shared


def _min_cost_counts(g: StreetGraph, ffd: Set[int], caps: Mapping[int, int]) -> Dict[End, int]:
    """凸費用フローで k を厳密に求める

    区間 → 端 の q 本目のセンサーの限界費用は ½q(q+1) − ½(q−1)q = q。
    ノード → シンクの容量は caps（M_ns から端数のぶんを引いた整数）。
    """
    if any(cap < 0 for cap in caps.values()):
        raise InfeasibleCoverError("端数だけで M_ns を超えるFFDがあります。")
    flow_graph = nx.DiGraph()
    total = 0
    for s in g.parking_segments:
        count = s.sensors
        if count == 0:
            continue
        total += count
        seg_node = ("seg", s.u, s.v)
        flow_graph.add_edge("source", seg_node, capacity=count, weight=0)
        for i in (s.u, s.v):
            if i not in ffd:
                continue
            for q in range(1, count + 1):
                unit = ("unit", i, s.u, s.v, q)
                flow_graph.add_edge(seg_node, unit, capacity=1, weight=q)
                flow_graph.add_edge(unit, ("ffd", i), capacity=1, weight=0)
    for i in sorted(ffd):
        if flow_graph.has_node(("ffd", i)):
            flow_graph.add_edge(("ffd", i), "sink", capacity=caps[i], weight=0)

    k: Dict[End, int] = {}
    for s in g.parking_segments:
        k[(s.u, s.v)] = 0
        k[(s.v, s.u)] = 0
    if total == 0:
        return k

    flow_graph.nodes["source"]["demand"] = -total
    flow_graph.nodes["sink"]["demand"] = total
    try:
        flow = nx.min_cost_flow(flow_graph)
    except nx.NetworkXUnfeasible as e:
        raise InfeasibleCoverError("M_ns を満たすセンサーの分割が存在しません。") from e

    for s in g.parking_segments:
        seg_node = ("seg", s.u, s.v)
        if seg_node not in flow:
            continue
        for unit, amount in flow[seg_node].items():
            if amount:
                _, i, _, _, _ = unit
                k[(i, s.other(i))] += amount
    return k


def _place_fractions(
    g: StreetGraph,
    ffd: Set[int],
    k: Mapping[End, int],
    m_ns: int,
    forced: Mapping[int, float],
    shared: List[Tuple[RoadSegment, float]],
) -> Tuple[Optional[Dict[End, float]], List[int]]:
    """k を固定したまま端数を M_ns の残りに収める

    収まれば (端ごとの端数, [])、収まらなければ (None, 足りないFFD) を返す。
    足りないFFDは最小カットの source 側にあるFFD。
    """
    alpha: Dict[End, float] = {}
    for s in g.parking_segments:
        if s.sensor_density_per_m == 0:
            continue
        frac = s.length_m * s.sensor_density_per_m - s.sensors
        ends = [i for i in (s.u, s.v) if i in ffd]
        if frac > FLOOR_EPS and len(ends) == 1:
            alpha[(ends[0], s.other(ends[0]))] = frac
    loads = _node_loads(k)
    room = {i: m_ns - loads.get(i, 0) - forced[i] for i in ffd}
    if any(r < -FLOOR_EPS for r in room.values()):
        return None, sorted(i for i, r in room.items() if r < -FLOOR_EPS)
    if not shared:
        return alpha, []

    network = nx.DiGraph()
    need = 0.0
    for s, frac in shared:
        seg_node = ("seg", s.u, s.v)
        network.add_edge("source", seg_node, capacity=frac)
        # 容量なしの辺は無限大として扱われる
        network.add_edge(seg_node, ("ffd", s.u))
        network.add_edge(seg_node, ("ffd", s.v))
        need += frac
    for i in sorted(ffd):
        if network.has_node(("ffd", i)):
            network.add_edge(("ffd", i), "sink", capacity=max(0.0, room[i]))

    value, flow = nx.maximum_flow(network, "source", "sink")
    if value >= need - 1e-9:
        for s, _ in shared:
            for i, amount in flow[("seg", s.u, s.v)].items():
                alpha[(i[1], s.other(i[1]))] = float(amount)
        return alpha, []
    _, (reachable, _) = nx.minimum_cut(network, "source", "sink")
    short = sorted(node[1] for node in reachable if isinstance(node, tuple) and node[0] == "ffd")
    return None, short


def _allocate_with_reserve(
    g: StreetGraph,
    ffd: Set[int],
    m_ns: int,
    forced: Mapping[int, float],
    shared: List[Tuple[RoadSegment, float]],
) -> Tuple[Dict[End, int], Dict[End, float]]:
    """端数が収まるまで、足りないFFDの整数容量を1ずつ減らして探索する

    容量を減らした先の最小費用は減らす前より小さくならないので、
    最良解以上の節点は打ち切る。
    """
    base = {i: int(math.ceil(forced[i] - FLOOR_EPS)) for i in ffd}
    best: Optional[Tuple[float, Dict[End, int], Dict[End, float]]] = None
    seen = set()
    stack: List[Dict[int, int]] = [{}]
    while stack:
        extra = stack.pop()
        key = tuple(sorted(extra.items()))
        if key in seen:
            continue
        seen.add(key)
        caps = {i: m_ns - base[i] - extra.get(i, 0) for i in ffd}
        try:
            k = _min_cost_counts(g, ffd, caps)
        except InfeasibleCoverError:
            continue
        energy = total_energy(k)
        if best is not None and energy >= best[0] - 1e-9:
            continue
        alpha, short = _place_fractions(g, ffd, k, m_ns, forced, shared)
        if alpha is not None:
            best = (energy, k, alpha)
            continue
        for i in reversed(short):
            stack.append({**extra, i: extra.get(i, 0) + 1})
    if best is None:
        raise InfeasibleCoverError("M_ns を満たすセンサーの分割が存在しません。")
    return best[1], best[2]


def _gamma_from_counts(g: StreetGraph, ffd: Set[int], k: Mapping[End, int], alpha: Mapping[End, float]) -> Dict[End, float]:
    """Γ_ij = (k_ij + 端数)/ρ。片側を決めて残りを反対側に回し、合計を d に一致させる"""
    gamma: Dict[End, float] = {}
    for s in g.parking_segments:
        rho = s.sensor_density_per_m
        ends = [i for i in (s.u, s.v) if i in ffd]
        if rho == 0:
            for i in (s.u, s.v):
                gamma[(i, s.other(i))] = s.length_m / len(ends) if i in ffd else 0.0
            continue
        if len(ends) == 1:
            i = ends[0]
            gamma[(i, s.other(i))] = s.length_m
            gamma[(s.other(i), i)] = 0.0
            continue
        first = min(s.length_m, (k[(s.u, s.v)] + alpha.get((s.u, s.v), 0.0)) / rho)
        gamma[(s.u, s.v)] = first
        gamma[(s.v, s.u)] = max(0.0, s.length_m - first)
    return gamma


def allocate_gamma(
    g: StreetGraph, ffd: Iterable[int], p: CoverageParams
) -> Tuple[GammaAssignment, SensorCounts]:
    """FFD集合から Γ を決め、φΩ が最小になるセンサー数を返す

    センサー数の和は区間ごとに floor(d·ρ) とし、残りの端数も M_ns に数える。
    均等分割が容量と端数の両方を満たせばそれが最適。満たさなければ最小費用フローで解き直す。
    """
    ffd = set(ffd)
    check_segment_capacity(g, p)
    missing = _uncovered(g, ffd)
    if missing:
        raise InfeasibleCoverError(f"FFDのない駐車区間があります: {missing[:5]}", segment=missing[0])

    forced, shared = _fractions(g, ffd)
    k = _balanced_counts(g, ffd)
    alpha, _ = _place_fractions(g, ffd, k, p.m_ns, forced, shared)
    if alpha is None:
        logger.debug("M_ns が効くため最小費用フローで再配分します")
        k, alpha = _allocate_with_reserve(g, ffd, p.m_ns, forced, shared)

    gamma = _gamma_from_counts(g, ffd, k, alpha)
    counts = {}
    for s in g.parking_segments:
        for i in (s.u, s.v):
            end = (i, s.other(i))
            counts[end] = sensor_count(gamma[end], s.sensor_density_per_m)
    return GammaAssignment(gamma), SensorCounts(counts)


def capacity_separator(g: StreetGraph, p: CoverageParams):
    """割当不能なカバー C を除外する制約 Σ_{i∉C} x_i ≥ 1 を返す

    FFD を増やして割当不能になることはないので、C の部分集合もまとめて除外できる。
    """

    def separate(a: Assignment) -> List[Constraint]:
        cover = cover_from_assignment(a, g)
        try:
            allocate_gamma(g, cover, p)
            return []
        except InfeasibleCoverError:
            outside = [i for i in g.node_ids if i not in cover]
            logger.debug("カバー %s は M_ns を満たせないため除外します", sorted(cover))
            if not outside:
                return [Constraint("no_cover", {}, GE, 1.0, tag="eq:maxsensor-ffd")]
            return [
                Constraint(
                    f"nogood_{'_'.join(map(str, sorted(cover)))}",
                    {x_name(i): 1.0 for i in outside},
                    GE,
                    1.0,
                    tag="eq:maxsensor-ffd",
                )
            ]

    return separate


def solve_cover(
    g: StreetGraph, p: CoverageParams, limits: Optional[SolveLimits] = None
) -> Tuple[Optional[Set[int]], SolveReport, LinearModel]:
    """最小（または予算固定の）FFD集合を求める。M_ns で割当不能な集合は除外する"""
    model = build_cover_model(g, p)
    report = solve(model, limits, separator=capacity_separator(g, p))
    cover = cover_from_assignment(report.assignment, g) if report.is_optimal else None
    return cover, report, model


def _split_energies(s: RoadSegment) -> Tuple[float, float]:
    """(片側が全部持つときの φΩ, 両側で均等に分けたときの φΩ)"""
    half = s.sensors // 2
    return end_energy(s.sensors), end_energy(s.sensors - half) + end_energy(half)


def build_energy_model(g: StreetGraph, p: CoverageParams) -> LinearModel:
    """FFD数を ffd_budget に固定し、M_ns が効かないときの φΩ を最小化するモデル

    両端がFFDの区間は均等分割、片側だけなら片側が全部持つ。カバー制約で両端が
    同時に0にならないので φΩ = Σ_s E2_s + Σ_v c_v·(1 − x_v) と線形に書ける
    （c_v は v に接する区間の E1_s − E2_s の和）。M_ns が効くカバーではこの値は下界になる。
    """
    if p.ffd_budget is None:
        raise ModelError("エネルギーモデルには ffd_budget が必要です。")
    model = build_cover_model(g, p, sealed=False)
    model.name = "cover_energy"
    weight = {i: 0.0 for i in g.node_ids}
    base = 0.0
    for s in g.parking_segments:
        one, two = _split_energies(s)
        base += two
        weight[s.u] += one - two
        weight[s.v] += one - two
    model.set_objective(
        {x_name(i): -c for i, c in weight.items() if c != 0}, constant=base + sum(weight.values())
    )
    return model.seal()


def solve_energy_cover(
    g: StreetGraph, p: CoverageParams, limits: Optional[SolveLimits] = None
) -> Tuple[Optional[Set[int]], SolveReport, LinearModel]:
    """build_energy_model を解き、M_ns で割当不能なカバーは除外する"""
    model = build_energy_model(g, p)
    report = solve(model, limits, separator=capacity_separator(g, p), lexicographic=False)
    cover = cover_from_assignment(report.assignment, g) if report.is_optimal else None
    return cover, report, model
