# pareto.py
# ε制約法によるパレートフロント（FFD数 vs 総エネルギー、ゲートウェイ数 vs 平均ホップ数、ゲートウェイ数 vs FFD数）
import logging
import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from backbone import (
    BackboneParams,
    BackboneTopology,
    TrafficVector,
    avg_hop,
    min_feasible_gateways,
    packet_rates,
    solve_backbone,
)
from coverage import (
    CoverageParams,
    GammaAssignment,
    SensorCounts,
    allocate_gamma,
    solve_cover,
    solve_energy_cover,
    total_energy,
)
from errors import BackboneInfeasibleError, InfeasibleCoverError, ParetoError, SolveLimitError
from ilp import SolveLimits, SolveReport, SolveStatus
from plan import DeploymentPlan
from run_logging import RunLogger, record_solve
from schemas import PlanParams
from settings import PlannerConfig
from streetgraph import StreetGraph, WirelessLinkSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParetoPoint:
    objectives: Tuple[float, ...]
    plan: Optional[DeploymentPlan] = None
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)


@dataclass
class Front:
    points: List[ParetoPoint]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def values(self) -> List[Tuple[float, ...]]:
        return [pt.objectives for pt in self.points]


def dominance_filter(points: Sequence[ParetoPoint]) -> Front:
    """支配されない点だけを残し、第1目的→辞書式の順に並べる（重複は最初の1点）"""
    if not points:
        return Front([])
    arity = len(points[0].objectives)
    for pt in points:
        if len(pt.objectives) != arity:
            raise ParetoError(f"目的数が一致しません: {len(pt.objectives)} != {arity}")
        if not all(math.isfinite(v) for v in pt.objectives):
            raise ParetoError(f"目的値が有限ではありません: {pt.objectives}")

    unique: Dict[Tuple[float, ...], ParetoPoint] = {}
    for pt in points:
        unique.setdefault(tuple(pt.objectives), pt)
    kept = list(unique.values())
    costs = np.array([pt.objectives for pt in kept], dtype=float)

    efficient = np.ones(len(kept), dtype=bool)
    for idx, c in enumerate(costs):
        no_worse = np.all(costs <= c, axis=1)
        better = np.any(costs < c, axis=1)
        if np.any(no_worse & better):
            efficient[idx] = False
    front = [pt for pt, ok in zip(kept, efficient) if ok]
    front.sort(key=lambda pt: tuple(pt.objectives))
    return Front(front)


def _raise_for_limit(report, what: str):
    if report.status in (SolveStatus.NODE_LIMIT, SolveStatus.TIME_LIMIT):
        raise SolveLimitError(f"{what} の求解が上限に達しました ({report.status})", str(report.status))


def min_cover_size(
    g: StreetGraph, p: CoverageParams, limits: Optional[SolveLimits] = None, run_logger: Optional[RunLogger] = None
) -> int:
    cover, report, _ = solve_cover(g, replace(p, ffd_budget=None), limits)
    record_solve(run_logger, "min_cover", report)
    _raise_for_limit(report, "最小カバー")
    if cover is None:
        raise InfeasibleCoverError("M_ns を満たすFFD配置が存在しません。")
    return len(cover)


def _cover_energy(g: StreetGraph, cover: Set[int], p: CoverageParams) -> Optional[float]:
    try:
        _, counts = allocate_gamma(g, cover, p)
    except InfeasibleCoverError:
        return None
    return total_energy(counts)


def best_cover_at_budget(
    g: StreetGraph,
    p: CoverageParams,
    t: int,
    limits: Optional[SolveLimits] = None,
    previous: Optional[Set[int]] = None,
    exact_max_nodes: int = PlannerConfig.EXACT_ENUMERATION_MAX_NODES,
    run_logger: Optional[RunLogger] = None,
) -> Tuple[Optional[Set[int]], Optional[float], bool]:
    """FFD数 t のカバーのうち φΩ が最小のものを返す (cover, energy, exact)

    交差点数が exact_max_nodes 以下なら全列挙（同点は辞書式で最初の集合）。
    それより大きい場合は build_energy_model を解き、得たカバーの実際の φΩ が
    モデルの値と一致すれば厳密解とする。一致しなければ、ソルバーの決定的なカバーと
    前の予算のカバーに1台足した貪欲解のうち良い方を使う（exact=False）。
    """
    if g.n <= exact_max_nodes:
        best, best_energy = None, None
        for combo in combinations(g.node_ids, t):
            energy = _cover_energy(g, set(combo), p)
            if energy is not None and (best_energy is None or energy < best_energy - 1e-9):
                best, best_energy = set(combo), energy
        return best, best_energy, True

    cover, report, _ = solve_energy_cover(g, replace(p, ffd_budget=t), limits)
    record_solve(run_logger, f"energy_cover_{t}", report)
    _raise_for_limit(report, f"予算 {t} のエネルギー最小カバー")
    if report.status == SolveStatus.INFEASIBLE:
        return None, None, True
    energy = _cover_energy(g, cover, p)
    if energy is not None and abs(energy - report.objective) <= PlannerConfig.TOLERANCE:
        return cover, energy, True
    logger.info("予算 %d では M_ns が効くため貪欲解と比べます", t)

    candidates: List[Tuple[float, List[int]]] = []
    cover, report, _ = solve_cover(g, replace(p, ffd_budget=t), limits)
    record_solve(run_logger, f"cover_{t}", report)
    _raise_for_limit(report, f"予算 {t} のカバー")
    if cover is not None:
        energy = _cover_energy(g, cover, p)
        if energy is not None:
            candidates.append((energy, sorted(cover)))
    if previous is not None and len(previous) == t - 1:
        extended = None
        for v in g.node_ids:
            if v in previous:
                continue
            energy = _cover_energy(g, previous | {v}, p)
            if energy is not None and (extended is None or energy < extended[0] - 1e-9):
                extended = (energy, sorted(previous | {v}))
        if extended is not None:
            candidates.append(extended)
    if not candidates:
        return None, None, False
    energy, members = min(candidates)
    return set(members), energy, False


def front_energy_vs_ffd(
    g: StreetGraph,
    p: CoverageParams,
    limits: Optional[SolveLimits] = None,
    run_logger: Optional[RunLogger] = None,
) -> Front:
    """FFD数を最小カバーから全交差点まで動かし、各予算の最小総エネルギーを求める"""
    start = min_cover_size(g, p, limits, run_logger)
    points = []
    previous = None
    all_exact = True
    for t in range(start, g.n + 1):
        cover, energy, exact = best_cover_at_budget(g, p, t, limits, previous, run_logger=run_logger)
        all_exact = all_exact and exact
        if cover is None:
            logger.warning("FFD数 %d では M_ns を満たすカバーがありません", t)
            continue
        logger.info("FFD数 %d: 総エネルギー %.1f", t, energy)
        points.append(ParetoPoint((float(t), energy), metadata={"cover": sorted(cover), "exact": exact}))
        previous = cover
    front = dominance_filter(points)
    front.metadata = {"exact": all_exact, "min_cover": start}
    return front


def hop_levels(
    g: StreetGraph,
    p: CoverageParams,
    limits: Optional[SolveLimits] = None,
    mediocre_fraction: float = PlannerConfig.MEDIOCRE_FRACTION,
    run_logger: Optional[RunLogger] = None,
) -> List[int]:
    """最悪（最小カバー）・中間（交差点数の8割）・最良（全交差点）のFFD数"""
    worst = min_cover_size(g, p, limits, run_logger)
    mediocre = int(math.floor(mediocre_fraction * g.n + 0.5))
    mediocre = min(max(mediocre, worst), g.n)
    return sorted({worst, mediocre, g.n})


def _plan_for(
    cover: Set[int],
    gamma: GammaAssignment,
    counts: SensorCounts,
    traffic: TrafficVector,
    topology: BackboneTopology,
    report: SolveReport,
    cov: CoverageParams,
    p: BackboneParams,
    radio_range_m: float,
    link_mode: str,
    metadata: Dict[str, Any],
) -> DeploymentPlan:
    return DeploymentPlan(
        status=str(report.status),
        ffd=sorted(cover),
        gamma=gamma,
        sensors=counts,
        topology=topology,
        traffic=traffic,
        params=PlanParams(
            m_ns=cov.m_ns,
            m_hop=p.m_hop,
            m_rt=p.m_rt,
            m_gw=p.m_gw,
            per_sensor_rate=p.per_sensor_rate,
            radio_range_m=radio_range_m,
            link_mode=link_mode,
        ),
        metadata=metadata,
    )


def _min_hops_with_budget(
    g: StreetGraph,
    w: WirelessLinkSet,
    cover: Set[int],
    traffic: TrafficVector,
    p: BackboneParams,
    gw: int,
    limits: Optional[SolveLimits],
    run_logger: Optional[RunLogger],
    what: str,
) -> Tuple[Optional[BackboneTopology], Optional[SolveReport]]:
    """ゲートウェイ数 gw で Σh を最小化する。実行不可能なら (None, report or None)"""
    try:
        bp = replace(p, gw_budget=gw)
        topology, report, _ = solve_backbone(g, w, cover, traffic, bp, "fixed_gw_min_hops", limits)
    except BackboneInfeasibleError as e:
        logger.warning("%s は実行不可能です: %s", what, e)
        return None, None
    record_solve(run_logger, what, report)
    _raise_for_limit(report, what)
    if topology is None:
        logger.warning("%s は実行不可能です", what)
    return topology, report


def front_hop_vs_gateways(
    g: StreetGraph,
    w: WirelessLinkSet,
    ffd_levels: Sequence[int],
    p: BackboneParams,
    cov: Optional[CoverageParams] = None,
    limits: Optional[SolveLimits] = None,
    radio_range_m: float = PlannerConfig.RADIO_RANGE_M,
    link_mode: str = PlannerConfig.LINK_MODE,
    run_logger: Optional[RunLogger] = None,
) -> Dict[int, Front]:
    """FFD数の各水準で、ゲートウェイ数ごとの最小平均ホップ数を求める"""
    cov = cov or CoverageParams()
    floor_level = min_cover_size(g, cov, limits, run_logger)
    fronts: Dict[int, Front] = {}
    for level in ffd_levels:
        if level < floor_level or level > g.n:
            raise ParetoError(f"FFD水準 {level} は範囲 [{floor_level}, {g.n}] の外です。")
        cover, _, exact = best_cover_at_budget(g, cov, level, limits, run_logger=run_logger)
        if cover is None:
            raise InfeasibleCoverError(f"FFD数 {level} のカバーが見つかりません。")
        gamma, counts = allocate_gamma(g, cover, cov)
        traffic = packet_rates(counts, p.per_sensor_rate, cover)

        points = []
        lowest = min_feasible_gateways(w, cover)
        for gw in range(lowest, level + 1):
            what = f"FFD水準 {level}, ゲートウェイ {gw}"
            topology, report = _min_hops_with_budget(g, w, cover, traffic, p, gw, limits, run_logger, what)
            if topology is None:
                continue
            plan = _plan_for(
                cover,
                gamma,
                counts,
                traffic,
                topology,
                report,
                cov,
                p,
                radio_range_m,
                link_mode,
                {"ffd_level": level, "gw_budget": gw, "exact_cover": exact},
            )
            value = avg_hop(topology)
            logger.info("FFD水準 %d, ゲートウェイ %d: 平均ホップ数 %.4f", level, gw, value)
            points.append(ParetoPoint((float(gw), value), plan=plan, metadata={"ffd_level": level}))
        front = dominance_filter(points)
        front.metadata = {"ffd_level": level, "cover": sorted(cover), "exact_cover": exact}
        fronts[level] = front
    return fronts


def front_ffd_vs_gateways(
    g: StreetGraph,
    w: WirelessLinkSet,
    p: BackboneParams,
    cov: Optional[CoverageParams] = None,
    limits: Optional[SolveLimits] = None,
    gw_budgets: Optional[Sequence[int]] = None,
    radio_range_m: float = PlannerConfig.RADIO_RANGE_M,
    link_mode: str = PlannerConfig.LINK_MODE,
    run_logger: Optional[RunLogger] = None,
) -> Front:
    """ゲートウェイ数ごとに、バックボーンが組める最小のFFD数を求める

    FFD数 t のカバーには best_cover_at_budget のエネルギー最小カバーを使い、
    t を最小カバーから1ずつ増やして、ゲートウェイ数 gw の森が作れた最初の t を採る。
    FFDが無線クラスタに分かれるときは、gw がクラスタ数未満だと中継用のFFDを足す必要がある。
    """
    cov = cov or CoverageParams()
    floor_level = min_cover_size(g, cov, limits, run_logger)
    budgets = sorted(set(gw_budgets)) if gw_budgets else list(range(1, g.n + 1))
    for gw in budgets:
        if gw < 1 or gw > g.n:
            raise ParetoError(f"ゲートウェイ数 {gw} は範囲 [1, {g.n}] の外です。")

    covers: Dict[int, Tuple[Optional[Set[int]], bool]] = {}

    def cover_at(t: int) -> Tuple[Optional[Set[int]], bool]:
        if t not in covers:
            cover, _, exact = best_cover_at_budget(g, cov, t, limits, run_logger=run_logger)
            covers[t] = (cover, exact)
        return covers[t]

    points = []
    for gw in budgets:
        for t in range(max(gw, floor_level), g.n + 1):
            cover, exact = cover_at(t)
            if cover is None or min_feasible_gateways(w, cover) > gw:
                continue
            gamma, counts = allocate_gamma(g, cover, cov)
            traffic = packet_rates(counts, p.per_sensor_rate, cover)
            what = f"ゲートウェイ {gw}, FFD数 {t}"
            topology, report = _min_hops_with_budget(g, w, cover, traffic, p, gw, limits, run_logger, what)
            if topology is None:
                continue
            plan = _plan_for(
                cover,
                gamma,
                counts,
                traffic,
                topology,
                report,
                cov,
                p,
                radio_range_m,
                link_mode,
                {"ffd_level": t, "gw_budget": gw, "exact_cover": exact},
            )
            logger.info("ゲートウェイ %d: 最小FFD数 %d", gw, t)
            meta = {"avg_hop": avg_hop(topology), "cover": sorted(cover)}
            points.append(ParetoPoint((float(gw), float(t)), plan=plan, metadata=meta))
            break
        else:
            logger.warning("ゲートウェイ %d ではどのFFD数でもバックボーンが組めません", gw)
    front = Front(sorted(points, key=lambda pt: pt.objectives))
    front.metadata = {"min_cover": floor_level}
    return front
