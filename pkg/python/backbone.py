# backbone.py
# FFD間のマルチホップ木（親 b・祖先 a・管理ゲートウェイ g）とホップ数・容量のモデル
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx
from scipy.stats import weibull_min

from coverage import SensorCounts
from errors import BackboneError, BackboneInfeasibleError, TopologyError
from ilp import (
    CONTINUOUS,
    EQ,
    LE,
    Assignment,
    Constraint,
    LinearModel,
    SolveLimits,
    SolveReport,
    SolveStatus,
    check,
    solve,
)
from streetgraph import StreetGraph, WirelessLinkSet, connected_components

logger = logging.getLogger(__name__)

OBJECTIVES = ("min_gateways", "min_total_hops", "fixed_gw_min_hops", "min_links")
BUDGET_OBJECTIVES = ("fixed_gw_min_hops", "min_links")


@dataclass(frozen=True)
class BackboneParams:
    m_hop: int = 10
    m_rt: float = 100.0  # packets/s
    m_gw: float = 1000.0  # packets/s
    gw_budget: Optional[int] = None
    per_sensor_rate: float = 0.01

    def __post_init__(self):
        if self.m_hop < 1:
            raise BackboneError(f"M_hop は1以上である必要があります: {self.m_hop}")
        if not self.m_rt > 0:
            raise BackboneError(f"M_rt は正の値である必要があります: {self.m_rt}")
        if self.m_gw < self.m_rt:
            raise BackboneError(f"M_gw ({self.m_gw}) は M_rt ({self.m_rt}) 以上である必要があります。")
        if self.per_sensor_rate < 0:
            raise BackboneError("per_sensor_rate は0以上である必要があります。")
        if self.gw_budget is not None and self.gw_budget < 0:
            raise BackboneError(f"gw_budget は0以上である必要があります: {self.gw_budget}")


@dataclass(frozen=True)
class TrafficVector:
    """FFDごとのパケット生成率 f_i [packets/s]"""

    f: Dict[int, float]

    def __post_init__(self):
        for i, rate in self.f.items():
            if rate < 0:
                raise BackboneError(f"f_{i} が負の値です: {rate}")

    def get(self, i: int) -> float:
        return self.f.get(i, 0.0)


@dataclass(frozen=True)
class BackboneTopology:
    """ゲートウェイを根とする森

    hop は自分自身を含む祖先の数（ゲートウェイは1、その子は2）。
    """

    ffd: Tuple[int, ...]
    gateways: Tuple[int, ...]
    parents: Dict[int, int]
    ancestors: Dict[int, FrozenSet[int]]
    gateway_of: Dict[int, int]
    hop: Dict[int, int]
    clusters: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def path_to_gateway(self, i: int) -> List[int]:
        path = [i]
        while path[-1] in self.parents:
            path.append(self.parents[path[-1]])
        return path

    @property
    def total_hops(self) -> int:
        return sum(self.hop.values())

    @property
    def max_hop(self) -> int:
        return max(self.hop.values()) if self.hop else 0

    @property
    def active_links(self) -> int:
        return len(self.parents)


# --- 変数名 ---


def y_name(i: int) -> str:
    return f"y_{i}"


def b_name(i: int, j: int) -> str:
    return f"b_{i}_{j}"


def a_name(i: int, j: int) -> str:
    return f"a_{i}_{j}"


def g_name(i: int, j: int) -> str:
    return f"g_{i}_{j}"


def h_name(i: int) -> str:
    return f"h_{i}"


# --- 入力の補助 ---


def packet_rates(
    k: SensorCounts, per_sensor_rate: float, ffd: Optional[Iterable[int]] = None
) -> TrafficVector:
    """f_i = per_sensor_rate · Σ_j k_ij"""
    if per_sensor_rate < 0:
        raise BackboneError("per_sensor_rate は0以上である必要があります。")
    totals = k.per_node()
    nodes = sorted(ffd) if ffd is not None else sorted(totals)
    return TrafficVector({i: per_sensor_rate * totals.get(i, 0) for i in nodes})


def rate_from_weibull(scale_s: float, shape: float = 1.0) -> float:
    """Weibull分布に従う到着間隔の平均から、センサー1台あたりの生成率を求める"""
    if not scale_s > 0 or not shape > 0:
        raise BackboneError("Weibull分布のパラメータは正の値である必要があります。")
    return float(1.0 / weibull_min(shape, scale=scale_s).mean())


def avg_hop(t: BackboneTopology) -> float:
    """φ_{h/x} = Σ h_i / FFD数"""
    if not t.ffd:
        raise BackboneError("FFDが1台もないため平均ホップ数を計算できません。")
    return t.total_hops / len(t.ffd)


def subtree_loads(t: BackboneTopology, f: TrafficVector) -> Dict[int, float]:
    """ノード j が中継する負荷 Σ_i f_i·a_ij（自分自身を含む）"""
    loads = {j: 0.0 for j in t.ffd}
    for i in t.ffd:
        for j in t.ancestors[i]:
            loads[j] += f.get(i)
    return loads


def _reachable(w: WirelessLinkSet, ffd: List[int], m_hop: int) -> Dict[int, List[int]]:
    """W上で M_hop−1 ホップ以内に届くFFD（祖先になり得る相手）"""
    graph = w.to_networkx(ffd)
    reach = {}
    for i in ffd:
        lengths = nx.single_source_shortest_path_length(graph, i, cutoff=m_hop - 1)
        reach[i] = sorted(lengths)
    return reach


def _required_budget(objective: str, p: BackboneParams) -> Optional[int]:
    if objective not in OBJECTIVES:
        raise BackboneError(f"不明な目的関数です: {objective}")
    if objective in BUDGET_OBJECTIVES and p.gw_budget is None:
        raise BackboneError(f"{objective} には gw_budget が必要です。")
    if objective == "min_gateways":
        return None
    return p.gw_budget


def build_backbone_model(
    g: StreetGraph,
    w: WirelessLinkSet,
    ffd: Iterable[int],
    f: TrafficVector,
    p: BackboneParams,
    objective: str = "min_gateways",
) -> LinearModel:
    """FFD集合を固定したバックボーンモデルを作る

    変数は y_i、W上の有向ペアの b_ij、M_hop−1 ホップ以内のペアの a_ij / g_ij、連続変数 h_i。
    a の推移性は親方向の2本（閉包と逆向き）を最初から入れ、
    ゲートウェイ側の推移性は transitivity_separator で遅延生成する。
    """
    members = sorted(set(ffd))
    if not members:
        raise BackboneError("FFD集合が空です。")
    unknown = [i for i in members if i < 0 or i >= g.n]
    if unknown:
        raise BackboneError(f"存在しない交差点がFFDに含まれています: {unknown}")
    missing = [i for i in members if i not in f.f]
    if missing:
        raise BackboneError(f"f が定義されていないFFDがあります: {missing}")

    budget = _required_budget(objective, p)
    clusters = connected_components(w, members)
    if budget is not None:
        if budget < len(clusters):
            raise BackboneInfeasibleError(
                f"gw_budget {budget} は無線クラスタ数 {len(clusters)} より小さいため実行不可能です。"
            )
        if budget > len(members):
            raise BackboneInfeasibleError(f"gw_budget {budget} がFFD数 {len(members)} を超えています。")

    reach = _reachable(w, members, p.m_hop)
    reach_set = {i: set(js) for i, js in reach.items()}
    arcs = [(i, j) for i, j in w.directed(members) if j in reach_set[i]]
    parents_of: Dict[int, List[int]] = {i: [] for i in members}
    for i, j in arcs:
        parents_of[i].append(j)

    model = LinearModel(f"backbone_{objective}")
    for i in members:
        model.add_variable(y_name(i))
    for i, j in arcs:
        model.add_variable(b_name(i, j))
    for i in members:
        for j in reach[i]:
            model.add_variable(a_name(i, j))
    for i in members:
        for j in reach[i]:
            model.add_variable(g_name(i, j))
    for i in members:
        model.add_variable(h_name(i), CONTINUOUS, 0.0, float("inf"))

    # 親子関係
    for i, j in arcs:
        model.add_constraint({b_name(i, j): 1, a_name(i, j): -1}, LE, 0, tag="eq:parent-node-bij")
        if i < j:
            model.add_constraint({b_name(i, j): 1, b_name(j, i): 1}, LE, 1, tag="eq:sum-bij")
    for i in members:
        coeffs = {b_name(i, j): 1.0 for j in parents_of[i]}
        coeffs[y_name(i)] = 1.0
        model.add_constraint(coeffs, EQ, 1, name=f"one_parent_{i}", tag="eq:parent-node-bij-sum")

    # 祖先関係
    for i in members:
        model.add_constraint({a_name(i, i): 1}, EQ, 1, tag="eq:ancestor-node-aii")
        for j in reach[i]:
            if i < j and i in reach_set[j]:
                model.add_constraint({a_name(i, j): 1, a_name(j, i): 1}, LE, 1, tag="eq:ancestor-node-aij")

    # 管理ゲートウェイ
    for i in members:
        model.add_constraint({g_name(i, i): 1, y_name(i): -1}, EQ, 0, tag="eq:gateway-node-gii")
        for j in reach[i]:
            if j == i:
                continue
            model.add_constraint({g_name(i, j): 1, y_name(j): -1}, LE, 0, tag="eq:gateway-node-gij-yj")
            model.add_constraint({g_name(i, j): 1, a_name(i, j): -1}, LE, 0, tag="eq:gateway-node-gij-aij")
            if i < j and i in reach_set[j]:
                model.add_constraint({g_name(i, j): 1, g_name(j, i): 1}, LE, 1, tag="eq:gateway-node-gij")
        model.add_constraint(
            {g_name(i, j): 1 for j in reach[i]}, EQ, 1, name=f"one_gateway_{i}", tag="eq:gateway-node-gij-sum"
        )

    # 親をたどった推移性: anc(i) = {i} ∪ anc(parent(i))
    for i, j in arcs:
        for k in reach[j]:
            if k == j:
                continue
            if k in reach_set[i]:
                model.add_constraint(
                    {b_name(i, j): 1, a_name(j, k): 1, a_name(i, k): -1}, LE, 1, tag="eq:multihop-bna"
                )
            else:
                model.add_constraint({b_name(i, j): 1, a_name(j, k): 1}, LE, 1, tag="eq:multihop-bna")
        for k in reach[i]:
            if k in (i, j):
                continue
            if k in reach_set[j]:
                model.add_constraint(
                    {b_name(i, j): 1, a_name(i, k): 1, a_name(j, k): -1}, LE, 1, tag="eq:multihop-bna"
                )
            else:
                model.add_constraint({b_name(i, j): 1, a_name(i, k): 1}, LE, 1, tag="eq:multihop-bna")
    # 親のないノード（ゲートウェイ）は自分以外の祖先を持たない
    for i in members:
        for k in reach[i]:
            if k == i:
                continue
            coeffs = {a_name(i, k): 1.0}
            for j in parents_of[i]:
                coeffs[b_name(i, j)] = -1.0
            model.add_constraint(coeffs, LE, 0, tag="eq:multihop-bna")

    # ホップ数と容量
    for i in members:
        coeffs = {h_name(i): 1.0}
        for j in reach[i]:
            coeffs[a_name(i, j)] = -1.0
        model.add_constraint(coeffs, EQ, 0, name=f"hop_count_{i}", tag="eq:hop_count")
        model.add_constraint({h_name(i): 1}, LE, p.m_hop, name=f"hop_max_{i}", tag="eq:hop_max")
    for j in members:
        coeffs = {a_name(i, j): f.get(i) for i in members if j in reach_set[i] and f.get(i) != 0}
        coeffs[y_name(j)] = -(p.m_gw - p.m_rt)
        model.add_constraint(coeffs, LE, p.m_rt, name=f"traffic_{j}", tag="eq:trafficload")

    if budget is not None:
        model.add_constraint({y_name(i): 1 for i in members}, EQ, budget, name="gw_budget", tag="eq:phi_y")

    if objective == "min_gateways":
        model.set_objective({y_name(i): 1 for i in members})
    elif objective == "min_links":
        # Σb は φx − φy で一定なので、同点のときは Σh の小さい森を選ぶ
        weight = 1.0 / (len(members) * p.m_hop + 1)
        coeffs = {b_name(i, j): 1.0 for i, j in arcs}
        coeffs.update({h_name(i): weight for i in members})
        model.set_objective(coeffs)
    else:
        model.set_objective({h_name(i): 1 for i in members})

    logger.debug(
        "バックボーンモデル: FFD %d, 有向リンク %d, 変数 %d, 制約 %d",
        len(members),
        len(arcs),
        len(model.variables),
        len(model.constraints),
    )
    return model.seal()


def transitivity_separator(model: LinearModel, ffd: Iterable[int]):
    """a_ij + g_ik ≤ g_jk + 1 のうち割当で破られているものを返す"""
    members = sorted(set(ffd))

    def separate(a: Assignment) -> List[Constraint]:
        cuts = []
        for i in members:
            gateways = [k for k in members if a.get(g_name(i, k), 0.0) > 0.5]
            for j in members:
                if j == i or a.get(a_name(i, j), 0.0) < 0.5:
                    continue
                for k in gateways:
                    if a.get(g_name(j, k), 0.0) > 0.5:
                        continue
                    coeffs = {a_name(i, j): 1.0, g_name(i, k): 1.0}
                    if model.has_variable(g_name(j, k)):
                        coeffs[g_name(j, k)] = -1.0
                    cuts.append(Constraint(f"ang_{i}_{j}_{k}", coeffs, LE, 1.0, tag="eq:multihop-ang"))
        return cuts

    return separate


def _forest_assignment(graph: nx.Graph, members: List[int], roots: List[int]) -> Assignment:
    """roots から幅優先で張った森（親は1ホップ近い隣接FFDのうち最小id）を割当にする"""
    hop = dict(nx.multi_source_dijkstra_path_length(graph, roots))
    parents: Dict[int, int] = {}
    for i in sorted(members, key=lambda v: (hop[v], v)):
        if i in roots:
            continue
        parents[i] = min(j for j in graph.neighbors(i) if hop[j] == hop[i] - 1)

    forest: Assignment = {}
    for i in members:
        forest[y_name(i)] = 1.0 if i in roots else 0.0
        path = [i]
        while path[-1] in parents:
            path.append(parents[path[-1]])
        for j in path:
            forest[a_name(i, j)] = 1.0
        forest[g_name(i, path[-1])] = 1.0
        forest[h_name(i)] = float(len(path))
        if i in parents:
            forest[b_name(i, parents[i])] = 1.0
    return forest


def greedy_forest_hint(
    w: WirelessLinkSet, ffd: Iterable[int], p: BackboneParams, budget: Optional[int] = None
) -> Assignment:
    """ゲートウェイ数 budget の幅優先の森を作り、暫定解の候補として返す"""
    members = sorted(set(ffd))
    graph = w.to_networkx(members)
    clusters = connected_components(w, members)
    count = max(budget if budget is not None else len(clusters), len(clusters))

    roots = []
    for cluster in clusters:
        center = nx.center(graph.subgraph(cluster))
        roots.append(min(center))
    hop = dict(nx.multi_source_dijkstra_path_length(graph, roots))
    while len(roots) < min(count, len(members)):
        far = max((i for i in members if i not in roots), key=lambda i: (hop[i], -i))
        roots.append(far)
        hop = dict(nx.multi_source_dijkstra_path_length(graph, roots))
    return _forest_assignment(graph, members, roots)


def z_name(i: int, j: int) -> str:
    return f"z_{i}_{j}"


def build_gateway_assignment_model(w: WirelessLinkSet, ffd: Iterable[int], p: BackboneParams, budget: int) -> LinearModel:
    """ゲートウェイを budget 個選び、各FFDを M_hop−1 ホップ以内のゲートウェイに割り当てる

    費用は距離+1 で、最小値は Σh の下界になる（親の選び方と容量を無視した緩和）。
    """
    members = sorted(set(ffd))
    graph = w.to_networkx(members)
    model = LinearModel("gateway_assignment")
    for j in members:
        model.add_variable(y_name(j))
    cost: Dict[str, float] = {}
    for i in members:
        lengths = nx.single_source_shortest_path_length(graph, i, cutoff=p.m_hop - 1)
        for j in sorted(lengths):
            model.add_variable(z_name(i, j))
            cost[z_name(i, j)] = float(lengths[j] + 1)
            model.add_constraint({z_name(i, j): 1, y_name(j): -1}, LE, 0, tag="eq:gateway-node-gij-yj")
        model.add_constraint(
            {z_name(i, j): 1 for j in sorted(lengths)}, EQ, 1, name=f"assign_{i}", tag="eq:gateway-node-gij-sum"
        )
    model.add_constraint({y_name(j): 1 for j in members}, EQ, budget, name="gw_budget", tag="eq:phi_y")
    model.set_objective(cost)
    return model.seal()


def _assignment_hint(w: WirelessLinkSet, members: List[int], roots: List[int], p: BackboneParams) -> Assignment:
    graph = w.to_networkx(members)
    hint: Assignment = {y_name(j): 1.0 if j in roots else 0.0 for j in members}
    for i in members:
        lengths = nx.single_source_shortest_path_length(graph, i, cutoff=p.m_hop - 1)
        near = [j for j in roots if j in lengths]
        if not near:
            return {}
        hint[z_name(i, min(near, key=lambda j: (lengths[j], j)))] = 1.0
    return hint


def _certify(model: LinearModel, members: List[int], forest: Assignment) -> Optional[Assignment]:
    """森の割当がモデルと遅延制約をすべて満たせば、全変数を埋めた割当を返す"""
    full = {v.name: 0.0 for v in model.variables}
    for name, value in forest.items():
        if not model.has_variable(name):
            return None
        full[name] = value
    if check(model, full) or transitivity_separator(model, members)(full):
        return None
    return full


def _certified_report(model: LinearModel, full: Assignment, nodes: int, start: float) -> SolveReport:
    report = SolveReport(
        status=SolveStatus.OPTIMAL,
        assignment=full,
        objective=model.evaluate(full),
        nodes=nodes,
        wall_time=time.perf_counter() - start,
    )
    logger.info("求解 %s: 下界と一致する森で確定 objective=%s", model.name, report.objective)
    return report


def _solve_by_lower_bound(
    w: WirelessLinkSet,
    members: List[int],
    p: BackboneParams,
    objective: str,
    model: LinearModel,
    limits: Optional[SolveLimits],
) -> Optional[SolveReport]:
    """下界と一致する幅優先の森が作れれば、それを最適解として返す（作れなければ None）

    min_gateways の下界はクラスタ数、min_total_hops は FFD数、
    予算つきの目的は build_gateway_assignment_model の最小値。
    """
    start = time.perf_counter()
    graph = w.to_networkx(members)
    if objective == "min_total_hops":
        full = _certify(model, members, _forest_assignment(graph, members, members))
        return _certified_report(model, full, 0, start) if full is not None else None
    if objective == "min_gateways":
        full = _certify(model, members, greedy_forest_hint(w, members, p))
        return _certified_report(model, full, 0, start) if full is not None else None

    relaxed = build_gateway_assignment_model(w, members, p, p.gw_budget)
    seed = greedy_forest_hint(w, members, p, p.gw_budget)
    roots = [j for j in members if seed[y_name(j)] > 0.5]
    report = solve(relaxed, limits, hint=_assignment_hint(w, members, roots, p) or None, lexicographic=False)
    if report.status == SolveStatus.INFEASIBLE:
        return SolveReport(SolveStatus.INFEASIBLE, None, None, report.nodes, time.perf_counter() - start)
    if not report.is_optimal:
        return None
    roots = [j for j in members if report.assignment[y_name(j)] > 0.5]
    full = _certify(model, members, _forest_assignment(graph, members, roots))
    return _certified_report(model, full, report.nodes, start) if full is not None else None


def _value(a: Mapping[str, float], name: str) -> bool:
    return a.get(name, 0.0) > 0.5


def extract_topology(a: Mapping[str, float], ffd: Iterable[int]) -> BackboneTopology:
    """ソルバーの割当を森に復号する。木構造の不変条件が崩れていれば TopologyError"""
    members = sorted(set(ffd))
    member_set = set(members)

    for i in members:
        for j in members:
            if i < j and _value(a, b_name(i, j)) and _value(a, b_name(j, i)):
                raise TopologyError(f"b_{i}_{j} と b_{j}_{i} が両方1です。", tag="eq:sum-bij")

    gateways = [i for i in members if _value(a, y_name(i))]
    parents: Dict[int, int] = {}
    for i in members:
        chosen = [j for j in members if j != i and _value(a, b_name(i, j))]
        if _value(a, b_name(i, i)):
            raise TopologyError(f"ノード {i} が自分自身を親にしています。", tag="eq:parent-node-bii")
        if len(chosen) + (1 if i in gateways else 0) != 1:
            raise TopologyError(
                f"ノード {i} の親の数が不正です (parents={chosen}, gateway={i in gateways})",
                tag="eq:parent-node-bij-sum",
            )
        if chosen:
            parents[i] = chosen[0]

    ancestors: Dict[int, FrozenSet[int]] = {}
    for i in members:
        anc = frozenset(j for j in members if _value(a, a_name(i, j)))
        if i not in anc:
            raise TopologyError(f"a_{i}_{i} が0です。", tag="eq:ancestor-node-aii")
        if i in parents and parents[i] not in anc:
            raise TopologyError(f"親 {parents[i]} が {i} の祖先になっていません。", tag="eq:parent-node-bij")
        ancestors[i] = anc
    for i in members:
        for j in ancestors[i]:
            if j != i and i in ancestors[j]:
                raise TopologyError(f"{i} と {j} が互いに祖先になっています。", tag="eq:ancestor-node-aij")

    gateway_of: Dict[int, int] = {}
    for i in members:
        managed = [j for j in members if _value(a, g_name(i, j))]
        if len(managed) != 1:
            raise TopologyError(f"ノード {i} の管理ゲートウェイが {managed} です。", tag="eq:gateway-node-gij-sum")
        gw = managed[0]
        if gw not in gateways:
            raise TopologyError(f"{gw} はゲートウェイではありません。", tag="eq:gateway-node-gij-yj")
        if gw not in ancestors[i]:
            raise TopologyError(f"ゲートウェイ {gw} が {i} の祖先ではありません。", tag="eq:gateway-node-gij-aij")
        gateway_of[i] = gw

    hop: Dict[int, int] = {}
    for i in members:
        path = [i]
        while path[-1] in parents:
            nxt = parents[path[-1]]
            if nxt in path or nxt not in member_set:
                raise TopologyError(f"ノード {i} から親をたどると閉路になります。", tag="eq:multihop-bna")
            path.append(nxt)
        if frozenset(path) != ancestors[i]:
            raise TopologyError(
                f"ノード {i} の祖先集合 {sorted(ancestors[i])} が親の経路 {path} と一致しません。",
                tag="eq:multihop-bna",
            )
        if gateway_of[i] != path[-1]:
            raise TopologyError(
                f"ノード {i} の管理ゲートウェイ {gateway_of[i]} が根 {path[-1]} と一致しません。",
                tag="eq:multihop-ang",
            )
        hop[i] = len(path)
        if h_name(i) in a and abs(a[h_name(i)] - hop[i]) > 1e-6:
            raise TopologyError(f"h_{i} = {a[h_name(i)]} が祖先数 {hop[i]} と一致しません。", tag="eq:hop_count")

    clusters: Dict[int, Tuple[int, ...]] = {gw: () for gw in gateways}
    for i in members:
        clusters[gateway_of[i]] += (i,)
    return BackboneTopology(
        ffd=tuple(members),
        gateways=tuple(gateways),
        parents=parents,
        ancestors=ancestors,
        gateway_of=gateway_of,
        hop=hop,
        clusters=clusters,
    )


def solve_backbone(
    g: StreetGraph,
    w: WirelessLinkSet,
    ffd: Iterable[int],
    f: TrafficVector,
    p: BackboneParams,
    objective: str = "min_gateways",
    limits: Optional[SolveLimits] = None,
) -> Tuple[Optional[BackboneTopology], SolveReport, LinearModel]:
    """モデルを作って解き、最適なら森に復号して返す

    下界と一致する幅優先の森があればそれを返し、なければ分枝限定法で解く。
    """
    members = sorted(set(ffd))
    model = build_backbone_model(g, w, members, f, p, objective)
    report = _solve_by_lower_bound(w, members, p, objective, model, limits)
    if report is None:
        hint = greedy_forest_hint(w, members, p, _required_budget(objective, p))
        report = solve(model, limits, separator=transitivity_separator(model, members), hint=hint)
    topology = extract_topology(report.assignment, members) if report.is_optimal else None
    return topology, report, model


def min_feasible_gateways(w: WirelessLinkSet, ffd: Iterable[int]) -> int:
    """ゲートウェイ数の下界（FFDが作る無線クラスタの数）"""
    return len(connected_components(w, ffd))
