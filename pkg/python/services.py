# services.py
# CLIから呼ばれる処理のまとめ（入力の読み込み、計画の作成、フロントのCSV化）
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from backbone import BackboneParams, packet_rates, rate_from_weibull, solve_backbone
from coverage import CoverageParams, allocate_gamma, cover_from_assignment, solve_cover
from errors import BackboneInfeasibleError, InfeasibleCoverError
from ilp import SolveLimits, SolveReport, SolveStatus
from pareto import Front
from plan import DeploymentPlan
from run_logging import RunLogger, record_solve
from schemas import PlanParams, RunConfig
from settings import PlannerConfig
from streetgraph import StreetGraph, derive_wireless_links, gen_grid, graph_summary, parse_street_graph

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.4f"


def load_graph(cfg: RunConfig) -> StreetGraph:
    if cfg.input_path is not None:
        text = Path(cfg.input_path).read_text(encoding="utf-8")
        return parse_street_graph(text)
    rows, cols = cfg.grid
    return gen_grid(rows, cols, cfg.edge_len_m, cfg.density_per_m, seed=cfg.seed)


def coverage_params(cfg: RunConfig) -> CoverageParams:
    return CoverageParams(m_ns=cfg.m_ns, ffd_budget=cfg.ffd_budget)


def backbone_params(cfg: RunConfig) -> BackboneParams:
    return BackboneParams(
        m_hop=cfg.m_hop,
        m_rt=cfg.m_rt,
        m_gw=cfg.m_gw,
        gw_budget=cfg.gw_budget,
        per_sensor_rate=cfg.per_sensor_rate,
    )


def solve_limits(cfg: RunConfig) -> SolveLimits:
    return SolveLimits(max_nodes=cfg.max_nodes, max_seconds=cfg.max_seconds)


def plan_params(cfg: RunConfig) -> PlanParams:
    return PlanParams(
        m_ns=cfg.m_ns,
        m_hop=cfg.m_hop,
        m_rt=cfg.m_rt,
        m_gw=cfg.m_gw,
        per_sensor_rate=cfg.per_sensor_rate,
        radio_range_m=cfg.radio_range_m,
        link_mode=cfg.link_mode,
    )


@dataclass
class PlanOutcome:
    """solve の結果。plan は最適に解けたときだけ入る"""

    status: str
    plan: Optional[DeploymentPlan] = None
    message: str = ""
    reports: Dict[str, SolveReport] = field(default_factory=dict)
    incumbent: Optional[Dict[str, List[int]]] = None


def plan_deployment(
    g: StreetGraph, cfg: RunConfig, run_logger: Optional[RunLogger] = None
) -> PlanOutcome:
    """FFD配置 → Γ割当 → f → 最小ゲートウェイ数 → その数での最小ホップの順に解く"""
    limits = solve_limits(cfg)
    cov = coverage_params(cfg)
    outcome = PlanOutcome(status=str(SolveStatus.OPTIMAL))

    try:
        cover, report, _ = solve_cover(g, cov, limits)
    except InfeasibleCoverError as e:
        return PlanOutcome(status=str(SolveStatus.INFEASIBLE), message=str(e))
    outcome.reports["cover"] = report
    record_solve(run_logger, "cover", report)
    if cover is None:
        outcome.status = str(report.status)
        outcome.message = "FFD配置が見つかりませんでした。"
        if report.assignment is not None:
            outcome.incumbent = {"ffd": sorted(cover_from_assignment(report.assignment, g))}
        return outcome

    gamma, counts = allocate_gamma(g, cover, cov)
    traffic = packet_rates(counts, cfg.per_sensor_rate, cover)
    w = derive_wireless_links(g, cfg.radio_range_m, cfg.link_mode)
    bp = backbone_params(cfg)

    try:
        gw_budget = cfg.gw_budget
        if gw_budget is None:
            _, report, _ = solve_backbone(g, w, cover, traffic, bp, "min_gateways", limits)
            outcome.reports["gateways"] = report
            record_solve(run_logger, "gateways", report)
            if not report.is_optimal:
                outcome.status = str(report.status)
                outcome.message = "最小ゲートウェイ数が求まりませんでした。"
                outcome.incumbent = {"ffd": sorted(cover)}
                return outcome
            gw_budget = int(round(report.objective))

        bp = BackboneParams(bp.m_hop, bp.m_rt, bp.m_gw, gw_budget, bp.per_sensor_rate)
        topology, report, _ = solve_backbone(g, w, cover, traffic, bp, "fixed_gw_min_hops", limits)
    except BackboneInfeasibleError as e:
        return PlanOutcome(status=str(SolveStatus.INFEASIBLE), message=str(e), reports=outcome.reports)
    outcome.reports["hops"] = report
    record_solve(run_logger, "hops", report)
    if topology is None:
        outcome.status = str(report.status)
        outcome.message = "ゲートウェイ数を固定したホップ最小化が解けませんでした。"
        outcome.incumbent = {"ffd": sorted(cover)}
        return outcome

    outcome.plan = DeploymentPlan(
        status=str(SolveStatus.OPTIMAL),
        ffd=sorted(cover),
        gamma=gamma,
        sensors=counts,
        topology=topology,
        traffic=traffic,
        params=plan_params(cfg),
        metadata={
            "graph": graph_summary(g),
            "solver": {
                name: {"status": str(r.status), "nodes": r.nodes, "seconds": round(r.wall_time, 3)}
                for name, r in outcome.reports.items()
            },
            "hop_convention": "h_i は自分自身を含む祖先の数（ゲートウェイは1）",
        },
    )
    logger.info(
        "計画を作成しました: FFD %d, ゲートウェイ %d, 平均ホップ %.4f",
        outcome.plan.phi_x,
        outcome.plan.phi_y,
        outcome.plan.phi_hx,
    )
    return outcome


FRONT_COLUMNS = {
    "energy": ["budget", "objective"],
    "hops": ["gateways", "avg_hop", "ffd_level"],
    "ffd": ["gateways", "ffd", "avg_hop"],
}


def energy_front_frame(front: Front) -> pd.DataFrame:
    rows = [{"budget": int(pt.objectives[0]), "objective": float(pt.objectives[1])} for pt in front.points]
    return pd.DataFrame(rows, columns=FRONT_COLUMNS["energy"])


def hop_fronts_frame(fronts: Dict[int, Front]) -> pd.DataFrame:
    rows = []
    for level in sorted(fronts):
        for pt in fronts[level].points:
            rows.append({"gateways": int(pt.objectives[0]), "avg_hop": float(pt.objectives[1]), "ffd_level": level})
    return pd.DataFrame(rows, columns=FRONT_COLUMNS["hops"])


def ffd_front_frame(front: Front) -> pd.DataFrame:
    rows = [
        {"gateways": int(pt.objectives[0]), "ffd": int(pt.objectives[1]), "avg_hop": float(pt.metadata["avg_hop"])}
        for pt in front.points
    ]
    return pd.DataFrame(rows, columns=FRONT_COLUMNS["ffd"])


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    return path


def default_run_config(**overrides) -> RunConfig:
    """PlannerConfig の既定値に上書きを重ねた RunConfig"""
    values = {
        "m_ns": PlannerConfig.M_NS,
        "m_hop": PlannerConfig.M_HOP,
        "m_rt": PlannerConfig.M_RT,
        "m_gw": PlannerConfig.M_GW,
        "per_sensor_rate": PlannerConfig.PER_SENSOR_RATE,
        "radio_range_m": PlannerConfig.RADIO_RANGE_M,
        "link_mode": PlannerConfig.LINK_MODE,
        "max_nodes": PlannerConfig.MAX_NODES,
        "max_seconds": PlannerConfig.MAX_SECONDS,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    if cfg.weibull_scale_s is not None:
        rate = rate_from_weibull(cfg.weibull_scale_s, cfg.weibull_shape)
        logger.info(
            "Weibull(scale=%.3f, shape=%.3f) から生成率 %.6f を使います", cfg.weibull_scale_s, cfg.weibull_shape, rate
        )
        cfg = cfg.model_copy(update={"per_sensor_rate": rate})
    return cfg
