# plan.py
# 配置計画（FFD・Γ・森・トラフィック）の保持、文書変換、制約族ごとの独立検証
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from backbone import BackboneTopology, TrafficVector, avg_hop, subtree_loads
from coverage import GammaAssignment, SensorCounts, sensor_count, total_energy
from schemas import GammaEntry, ObjectivesDoc, PlanDocument, PlanParams
from settings import PlannerConfig
from streetgraph import StreetGraph, derive_wireless_links

logger = logging.getLogger(__name__)

PLAN_TOL = PlannerConfig.TOLERANCE


@dataclass(frozen=True)
class Violation:
    tag: str
    message: str

    def __str__(self) -> str:
        return f"[{self.tag}] {self.message}"


@dataclass
class DeploymentPlan:
    status: str
    ffd: List[int]
    gamma: GammaAssignment
    sensors: SensorCounts
    topology: BackboneTopology
    traffic: TrafficVector
    params: PlanParams
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def gateways(self) -> List[int]:
        return sorted(self.topology.gateways)

    @property
    def phi_x(self) -> int:
        return len(self.ffd)

    @property
    def phi_omega(self) -> float:
        return total_energy(self.sensors)

    @property
    def phi_y(self) -> int:
        return len(self.topology.gateways)

    @property
    def phi_hx(self) -> float:
        return avg_hop(self.topology)

    def objectives(self) -> ObjectivesDoc:
        return ObjectivesDoc(phi_x=self.phi_x, phi_omega=self.phi_omega, phi_y=self.phi_y, phi_hx=self.phi_hx)

    def to_document(self) -> PlanDocument:
        entries = [
            GammaEntry(i=i, j=j, managed_len_m=value, sensors=self.sensors.k.get((i, j), 0))
            for (i, j), value in sorted(self.gamma.managed_len_m.items())
        ]
        t = self.topology
        return PlanDocument(
            status=self.status,
            ffd=sorted(self.ffd),
            gateways=self.gateways,
            gamma=entries,
            parents=dict(sorted(t.parents.items())),
            ancestors={i: sorted(t.ancestors[i]) for i in sorted(t.ancestors)},
            gateway_of=dict(sorted(t.gateway_of.items())),
            hop=dict(sorted(t.hop.items())),
            traffic=dict(sorted(self.traffic.f.items())),
            objectives=self.objectives(),
            params=self.params,
            metadata={k: v for k, v in self.metadata.items() if k != "objectives"},
        )

    @classmethod
    def from_document(cls, doc: PlanDocument) -> "DeploymentPlan":
        """文書から計画を復元する（整合性は検査しない。validate_plan を使う）"""
        clusters: Dict[int, tuple] = {gw: () for gw in doc.gateways}
        for i, gw in sorted(doc.gateway_of.items()):
            clusters[gw] = clusters.get(gw, ()) + (i,)
        topology = BackboneTopology(
            ffd=tuple(sorted(doc.ffd)),
            gateways=tuple(sorted(doc.gateways)),
            parents=dict(doc.parents),
            ancestors={i: frozenset(js) for i, js in doc.ancestors.items()},
            gateway_of=dict(doc.gateway_of),
            hop=dict(doc.hop),
            clusters=clusters,
        )
        return cls(
            status=doc.status,
            ffd=sorted(doc.ffd),
            gamma=GammaAssignment({(e.i, e.j): e.managed_len_m for e in doc.gamma}),
            sensors=SensorCounts({(e.i, e.j): e.sensors for e in doc.gamma}),
            topology=topology,
            traffic=TrafficVector(dict(doc.traffic)),
            params=doc.params,
            metadata={**doc.metadata, "objectives": doc.objectives.model_dump()},
        )


def gateway_loads(plan: DeploymentPlan) -> Dict[int, float]:
    """ゲートウェイごとのクラスタ全体の負荷"""
    loads = subtree_loads(plan.topology, plan.traffic)
    return {gw: loads[gw] for gw in plan.gateways}


def summary_text(plan: DeploymentPlan, graph_info: Optional[Dict[str, float]] = None) -> str:
    """人が読むための計画の要約"""
    t = plan.topology
    lines = [
        f"status: {plan.status}",
        f"FFD数 (phi_x): {plan.phi_x}",
        f"総エネルギー (phi_omega): {plan.phi_omega:.4f}",
        f"ゲートウェイ数 (phi_y): {plan.phi_y}",
        f"平均ホップ数 (phi_h/x): {plan.phi_hx:.4f}  ※ホップ数は自分自身を含む",
        f"最大ホップ数: {t.max_hop}",
        f"クラスタ数: {len(t.clusters)}",
    ]
    if graph_info:
        lines.append(
            "道路グラフ: 交差点 {intersections}, 区間 {segments}, 駐車区間 {parking_segments}, "
            "平均次数 {average_degree:.2f}".format(**graph_info)
        )
    lines.append("ゲートウェイ負荷 [packets/s]:")
    for gw, load in gateway_loads(plan).items():
        lines.append(f"  {gw}: {load:.4f} (members={len(t.clusters.get(gw, ()))})")
    return "\n".join(lines) + "\n"


def _reaches(parents: Dict[int, int], start: int, target: int) -> bool:
    """start から親をたどって target に着くか（閉路は1周で止める）"""
    seen = set()
    node = parents.get(start)
    while node is not None and node not in seen:
        if node == target:
            return True
        seen.add(node)
        node = parents.get(node)
    return False


def validate_plan(plan: DeploymentPlan, g: StreetGraph, tol: float = PLAN_TOL) -> List[Violation]:
    """計画をモデルとは独立にすべての制約族で検査し、違反を返す"""
    out: List[Violation] = []

    def fail(tag: str, message: str):
        out.append(Violation(tag, message))

    p = plan.params
    node_ids = set(g.node_ids)
    ffd = set(plan.ffd)
    t = plan.topology
    gateways = set(t.gateways)
    w = derive_wireless_links(g, p.radio_range_m, p.link_mode)

    for i in sorted(ffd - node_ids):
        fail("eq:xi-gammaij-dmax", f"FFD {i} は存在しない交差点です。")

    # カバーと管理長
    load: Dict[int, float] = {}
    for (i, j), value in sorted(plan.gamma.managed_len_m.items()):
        s = g.segment(i, j)
        if s is None:
            fail("eq:gamma-dij", f"Γ_{i},{j} に対応する区間がありません。")
            continue
        if value < -tol or value > s.length_m + tol:
            fail("eq:gamma-dij", f"Γ_{i},{j} = {value:g} が区間長 {s.length_m:g} の範囲外です。")
        if value > tol and i not in ffd:
            fail("eq:xi-gammaij-dmax", f"FFDのない交差点 {i} に Γ_{i},{j} = {value:g} があります。")
        expected = sensor_count(max(value, 0.0), s.sensor_density_per_m) if s.has_parking else 0
        if plan.sensors.k.get((i, j), 0) != expected:
            fail("eq:kij", f"k_{i},{j} = {plan.sensors.k.get((i, j), 0)} ですが floor(Γρ) = {expected} です。")
        load[i] = load.get(i, 0.0) + value * s.sensor_density_per_m
    for (i, j) in sorted(plan.sensors.k):
        if (i, j) not in plan.gamma.managed_len_m:
            fail("eq:kij", f"k_{i},{j} に対応する Γ がありません。")
    for s in g.parking_segments:
        both = plan.gamma.get(s.u, s.v) + plan.gamma.get(s.v, s.u)
        if both < s.length_m - tol:
            fail("eq:sumofgamma", f"区間 ({s.u}, {s.v}) の管理長合計 {both:g} < {s.length_m:g} です。")
    for i, value in sorted(load.items()):
        if value > p.m_ns + tol:
            fail("eq:maxsensor-ffd", f"FFD {i} の管理センサー量 {value:g} が M_ns = {p.m_ns} を超えています。")

    # 親子関係
    for i in sorted(gateways - ffd):
        fail("eq:gwFromFFD", f"ゲートウェイ {i} にFFDがありません。")
    for i, j in sorted(t.parents.items()):
        if i == j:
            fail("eq:parent-node-bii", f"ノード {i} が自分自身を親にしています。")
            continue
        if i not in ffd or j not in ffd:
            fail("eq:ancestor-node-aij-xi-xj", f"b_{i},{j} の両端にFFDがありません。")
        if not w.has(i, j):
            fail("eq:sum-bij", f"b_{i},{j} は無線リンク集合 W にありません。")
        if t.parents.get(j) == i and i < j:
            fail("eq:sum-bij", f"b_{i},{j} と b_{j},{i} が両方1です。")
        elif i in t.ancestors.get(j, frozenset()) or _reaches(t.parents, j, i):
            fail("eq:sum-bij", f"b_{i},{j} が逆向きです（{j} は {i} の子孫）。")
        if j not in t.ancestors.get(i, frozenset()):
            fail("eq:parent-node-bij", f"親 {j} が {i} の祖先になっていません。")
    for i in sorted(ffd):
        count = (1 if i in t.parents else 0) + (1 if i in gateways else 0)
        if count != 1:
            fail("eq:parent-node-bij-sum", f"ノード {i} の親の数とゲートウェイの合計が {count} です。")
    for i in sorted(set(t.parents) - ffd):
        fail("eq:parent-node-bij-sum", f"FFDのないノード {i} に親があります。")

    # 祖先関係
    for i in sorted(ffd):
        anc = t.ancestors.get(i, frozenset())
        if i not in anc:
            fail("eq:ancestor-node-aii", f"ノード {i} が自分の祖先に含まれていません。")
        for j in sorted(anc - ffd):
            fail("eq:ancestor-node-aij-xi-xj", f"a_{i},{j} の祖先 {j} にFFDがありません。")
        for j in sorted(anc):
            if j != i and i in t.ancestors.get(j, frozenset()) and i < j:
                fail("eq:ancestor-node-aij", f"{i} と {j} が互いに祖先になっています。")
        parent = t.parents.get(i)
        expected = {i} | set(t.ancestors.get(parent, frozenset())) if parent is not None else {i}
        if set(anc) != expected:
            fail(
                "eq:multihop-bna",
                f"ノード {i} の祖先 {sorted(anc)} が親をたどった集合 {sorted(expected)} と一致しません。",
            )
    for i in sorted(set(t.ancestors) - ffd):
        fail("eq:ancestor-node-aij-xi-xj", f"FFDのないノード {i} に祖先が記録されています。")

    # 管理ゲートウェイ
    for i in sorted(ffd):
        if i not in t.gateway_of:
            fail("eq:gateway-node-gij-sum", f"ノード {i} に管理ゲートウェイがありません。")
            continue
        gw = t.gateway_of[i]
        if i in gateways and gw != i:
            fail("eq:gateway-node-gij", f"ゲートウェイ {i} が別のゲートウェイ {gw} に管理されています。")
        if gw not in gateways:
            fail("eq:gateway-node-gij-yj", f"{i} の管理ゲートウェイ {gw} はゲートウェイではありません。")
        if gw not in t.ancestors.get(i, frozenset()):
            fail("eq:gateway-node-gij-aij", f"ゲートウェイ {gw} が {i} の祖先ではありません。")
        for j in sorted(t.ancestors.get(i, frozenset())):
            if j != i and t.gateway_of.get(j) != gw:
                fail("eq:multihop-ang", f"{i} の祖先 {j} が別のゲートウェイ {t.gateway_of.get(j)} に管理されています。")
    for i in sorted(gateways & ffd):
        if t.gateway_of.get(i) != i:
            fail("eq:gateway-node-gii", f"ゲートウェイ {i} が自分自身を管理していません。")

    # ホップ数
    for i in sorted(ffd):
        h = t.hop.get(i)
        anc = t.ancestors.get(i, frozenset())
        if h is None or h != len(anc):
            fail("eq:hop_count", f"h_{i} = {h} が祖先数 {len(anc)} と一致しません。")
        if h is not None and h > p.m_hop:
            fail("eq:hop_max", f"h_{i} = {h} が M_hop = {p.m_hop} を超えています。")

    # トラフィック
    totals = plan.sensors.per_node()
    for i in sorted(ffd):
        expected = p.per_sensor_rate * totals.get(i, 0)
        if abs(plan.traffic.get(i) - expected) > tol:
            fail("eq:trafficload", f"f_{i} = {plan.traffic.get(i):g} が rate·Σk = {expected:g} と一致しません。")
    relay: Dict[int, float] = {j: 0.0 for j in ffd}
    for i in sorted(ffd):
        for j in t.ancestors.get(i, frozenset()):
            if j in relay:
                relay[j] += plan.traffic.get(i)
    for j, value in sorted(relay.items()):
        limit = p.m_gw if j in gateways else p.m_rt
        if value > limit + tol:
            fail("eq:trafficload", f"ノード {j} の中継負荷 {value:g} が上限 {limit:g} を超えています。")

    # 目的関数値
    stated = plan.metadata.get("objectives")
    if stated:
        checks = (
            ("eq:phi_x", stated.get("phi_x"), plan.phi_x),
            ("eq:energy-consumption", stated.get("phi_omega"), plan.phi_omega),
            ("eq:phi_y", stated.get("phi_y"), plan.phi_y),
            ("eq:average_delay", stated.get("phi_hx"), plan.phi_hx if ffd else 0.0),
        )
        for tag, claimed, actual in checks:
            if claimed is not None and abs(float(claimed) - float(actual)) > tol:
                fail(tag, f"記録された目的値 {claimed} が再計算値 {actual} と一致しません。")

    if out:
        logger.info("計画の検証で %d 件の違反が見つかりました", len(out))
    return out
