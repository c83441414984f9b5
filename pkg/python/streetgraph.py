# streetgraph.py
# 路上駐車グラフの読み込み・生成・問い合わせと無線リンク集合の導出
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import ValidationError

from errors import GraphFormatError
from schemas import EdgeInput, NodeInput, StreetGraphDocument

logger = logging.getLogger(__name__)

# 浮動小数点の積 d·ρ を切り捨てるときの許容誤差
FLOOR_EPS = 1e-9

LINK_MODES = ("distance", "street")


@dataclass(frozen=True)
class Intersection:
    id: int
    x: float
    y: float
    label: Optional[str] = None


@dataclass(frozen=True)
class RoadSegment:
    """交差点 u と v を結ぶ道路区間（u < v に正規化して保持する）"""

    u: int
    v: int
    length_m: float
    sensor_density_per_m: float
    has_parking: bool

    @property
    def endpoints(self) -> Tuple[int, int]:
        return self.u, self.v

    @property
    def sensors(self) -> int:
        """区間上の物理センサー数 floor(d·ρ)"""
        if not self.has_parking:
            return 0
        return int(math.floor(self.length_m * self.sensor_density_per_m + FLOOR_EPS))

    def other(self, i: int) -> int:
        if i == self.u:
            return self.v
        if i == self.v:
            return self.u
        raise KeyError(i)


@dataclass(frozen=True)
class StreetGraph:
    intersections: Tuple[Intersection, ...]
    segments: Tuple[RoadSegment, ...]
    d_max: float
    _by_pair: Dict[Tuple[int, int], RoadSegment] = field(
        default_factory=dict, repr=False, compare=False
    )
    _incident: Dict[int, Tuple[RoadSegment, ...]] = field(
        default_factory=dict, repr=False, compare=False
    )

    @property
    def n(self) -> int:
        return len(self.intersections)

    @property
    def node_ids(self) -> List[int]:
        return [node.id for node in self.intersections]

    @property
    def parking_segments(self) -> List[RoadSegment]:
        return [s for s in self.segments if s.has_parking]

    def segment(self, i: int, j: int) -> Optional[RoadSegment]:
        return self._by_pair.get((min(i, j), max(i, j)))

    def incident(self, i: int, parking_only: bool = True) -> Tuple[RoadSegment, ...]:
        segs = self._incident.get(i, ())
        if parking_only:
            return tuple(s for s in segs if s.has_parking)
        return segs

    def neighbors(self, i: int, parking_only: bool = True) -> List[int]:
        return sorted(s.other(i) for s in self.incident(i, parking_only))

    def coordinates(self) -> np.ndarray:
        return np.array([[node.x, node.y] for node in self.intersections], dtype=float)

    def parking_graph(self) -> nx.Graph:
        """駐車区間だけからなる無向グラフ"""
        graph = nx.Graph()
        for s in self.parking_segments:
            graph.add_edge(s.u, s.v, length_m=s.length_m, sensors=s.sensors)
        return graph


@dataclass(frozen=True)
class WirelessLinkSet:
    """交差点間の対称・非反射な無線リンク関係 W"""

    n: int
    pairs: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        for i, j in self.pairs:
            if i >= j:
                raise GraphFormatError(f"リンクは (小さいid, 大きいid) で保持してください: {(i, j)}")

    def __len__(self) -> int:
        return len(self.pairs)

    def has(self, i: int, j: int) -> bool:
        return i != j and (min(i, j), max(i, j)) in self.pairs

    def neighbors(self, i: int) -> List[int]:
        return sorted(b if a == i else a for a, b in self.pairs if i in (a, b))

    def directed(self, nodes: Iterable[int]) -> List[Tuple[int, int]]:
        """nodes 内で閉じた有向リンク (i, j) の一覧（昇順）"""
        members = set(nodes)
        arcs = []
        for i, j in self.pairs:
            if i in members and j in members:
                arcs.append((i, j))
                arcs.append((j, i))
        return sorted(arcs)

    def to_networkx(self, nodes: Iterable[int]) -> nx.Graph:
        members = sorted(set(nodes))
        graph = nx.Graph()
        graph.add_nodes_from(members)
        keep = set(members)
        graph.add_edges_from((i, j) for i, j in sorted(self.pairs) if i in keep and j in keep)
        return graph


def build_street_graph(nodes: List[Intersection], segments: List[RoadSegment]) -> StreetGraph:
    """交差点と区間のリストを検証して StreetGraph を作る"""
    ids = [node.id for node in nodes]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise GraphFormatError(f"交差点idが重複しています (duplicate intersection id): {dup}")
    if sorted(ids) != list(range(len(ids))):
        raise GraphFormatError("交差点idは0から連続している必要があります。")
    if not segments:
        raise GraphFormatError("道路区間がありません。")

    by_pair: Dict[Tuple[int, int], RoadSegment] = {}
    incident: Dict[int, List[RoadSegment]] = {i: [] for i in ids}
    for seg in segments:
        if seg.u == seg.v:
            raise GraphFormatError(f"自己ループの区間です (self-loop): {seg.u}")
        if seg.u not in incident or seg.v not in incident:
            raise GraphFormatError(f"未定義の交差点を参照しています: {(seg.u, seg.v)}")
        if not seg.length_m > 0:
            raise GraphFormatError(f"length_m が負の値です (negative length): {seg.length_m}")
        if seg.sensor_density_per_m < 0:
            raise GraphFormatError(
                f"density_per_m が負の値です (negative density): {seg.sensor_density_per_m}"
            )
        if not seg.has_parking and seg.sensor_density_per_m > 0:
            raise GraphFormatError(f"駐車なしの区間に密度が設定されています: {(seg.u, seg.v)}")
        key = (seg.u, seg.v)
        if key in by_pair:
            raise GraphFormatError(f"同じ端点の区間が重複しています: {key}")
        by_pair[key] = seg
        incident[seg.u].append(seg)
        incident[seg.v].append(seg)

    parking = [s for s in segments if s.has_parking]
    if not parking:
        raise GraphFormatError("駐車区間がありません。")
    pgraph = nx.Graph()
    pgraph.add_edges_from((s.u, s.v) for s in parking)
    if not nx.is_connected(pgraph):
        parts = nx.number_connected_components(pgraph)
        raise GraphFormatError(f"駐車区間のグラフが連結ではありません (disconnected, {parts} components)")

    d_max = max(s.length_m for s in segments)
    ordered_nodes = tuple(sorted(nodes, key=lambda node: node.id))
    return StreetGraph(
        intersections=ordered_nodes,
        segments=tuple(sorted(segments, key=lambda s: (s.u, s.v))),
        d_max=d_max,
        _by_pair=by_pair,
        _incident={i: tuple(segs) for i, segs in incident.items()},
    )


def _segment_from_input(edge: EdgeInput) -> RoadSegment:
    return RoadSegment(
        u=min(edge.u, edge.v),
        v=max(edge.u, edge.v),
        length_m=edge.length_m,
        sensor_density_per_m=edge.density_per_m,
        has_parking=edge.parking,
    )


def parse_street_graph(text: str) -> StreetGraph:
    """JSON文書を読み込み、検証済みの StreetGraph を返す"""
    try:
        doc = StreetGraphDocument.model_validate_json(text)
    except ValidationError as e:
        raise GraphFormatError(f"道路グラフ文書が不正です: {e}") from e

    nodes = [Intersection(id=n.id, x=n.x, y=n.y, label=n.label) for n in doc.nodes]
    segments = [_segment_from_input(edge) for edge in doc.edges]
    graph = build_street_graph(nodes, segments)
    logger.info(
        "道路グラフを読み込みました: 交差点 %d 件, 区間 %d 件, d_max=%.1f",
        graph.n,
        len(graph.segments),
        graph.d_max,
    )
    return graph


def graph_to_document(g: StreetGraph) -> StreetGraphDocument:
    return StreetGraphDocument(
        nodes=[NodeInput(id=n.id, x=n.x, y=n.y, label=n.label) for n in g.intersections],
        edges=[
            EdgeInput(
                u=s.u,
                v=s.v,
                length_m=s.length_m,
                density_per_m=s.sensor_density_per_m,
                parking=s.has_parking,
            )
            for s in g.segments
        ],
    )


def dump_street_graph(g: StreetGraph) -> str:
    return json.dumps(graph_to_document(g).model_dump(), indent=2, ensure_ascii=False)


def gen_grid(
    rows: int,
    cols: int,
    edge_len_m: float,
    density_per_m: float,
    jitter_m: float = 0.0,
    seed: Optional[int] = None,
) -> StreetGraph:
    """rows×cols の格子状の駐車グラフを生成する

    jitter_m > 0 のときは交差点座標だけを一様乱数でずらす（区間長は edge_len_m のまま）。
    """
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise GraphFormatError(f"格子が小さすぎます (rows·cols < 2): {rows}x{cols}")
    if not edge_len_m > 0:
        raise GraphFormatError(f"length_m が負の値です (negative length): {edge_len_m}")
    if density_per_m < 0:
        raise GraphFormatError(f"density_per_m が負の値です (negative density): {density_per_m}")

    rng = np.random.default_rng(seed)
    nodes = []
    for r in range(rows):
        for c in range(cols):
            dx, dy = (rng.uniform(-jitter_m, jitter_m, size=2) if jitter_m > 0 else (0.0, 0.0))
            nodes.append(
                Intersection(
                    id=r * cols + c,
                    x=c * edge_len_m + float(dx),
                    y=r * edge_len_m + float(dy),
                    label=f"r{r}c{c}",
                )
            )

    segments = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                segments.append(RoadSegment(i, i + 1, edge_len_m, density_per_m, True))
            if r + 1 < rows:
                segments.append(RoadSegment(i, i + cols, edge_len_m, density_per_m, True))
    return build_street_graph(nodes, segments)


def derive_wireless_links(
    g: StreetGraph, radio_range_m: float, mode: str = "distance"
) -> WirelessLinkSet:
    """無線リンク集合 W を導出する

    distance: ユークリッド距離が radio_range_m 以下の全ペア
    street:   道路区間で隣接し、かつ距離が radio_range_m 以下のペア
    """
    if not radio_range_m > 0:
        raise GraphFormatError(f"radio_range_m は正の値である必要があります: {radio_range_m}")
    if mode not in LINK_MODES:
        raise GraphFormatError(f"不明なリンクモードです: {mode}")

    coords = g.coordinates()
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    within = dist <= radio_range_m + FLOOR_EPS

    pairs = set()
    if mode == "distance":
        ii, jj = np.nonzero(np.triu(within, k=1))
        pairs = {(int(i), int(j)) for i, j in zip(ii, jj)}
    else:
        for s in g.segments:
            if within[s.u, s.v]:
                pairs.add((s.u, s.v))
    logger.debug("無線リンク %d 本 (mode=%s, range=%.1f)", len(pairs), mode, radio_range_m)
    return WirelessLinkSet(n=g.n, pairs=frozenset(pairs))


def connected_components(w: WirelessLinkSet, active: Iterable[int]) -> List[FrozenSet[int]]:
    """active 内のリンクだけでたどれる連結成分に分割する（最小idの昇順）"""
    members = set(active)
    graph = w.to_networkx(members)
    parts = [frozenset(c) for c in nx.connected_components(graph)]
    return sorted(parts, key=min)


def graph_summary(g: StreetGraph) -> Dict[str, float]:
    """グラフの規模と駐車グラフの平均次数"""
    parking = g.parking_segments
    pgraph = g.parking_graph()
    degrees = [d for _, d in pgraph.degree()]
    return {
        "intersections": g.n,
        "segments": len(g.segments),
        "parking_segments": len(parking),
        "parking_length_m": float(sum(s.length_m for s in parking)),
        "sensors": int(sum(s.sensors for s in parking)),
        "average_degree": float(np.mean(degrees)) if degrees else 0.0,
        "d_max": g.d_max,
    }
