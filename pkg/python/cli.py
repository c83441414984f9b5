#!/usr/bin/env python3
"""
路上駐車センサーネットワークの配置計画ツール

終了コード: 0 = 最適, 1 = 入力・設定エラー, 2 = 実行不可能, 3 = ノード数・時間の上限
"""
import json
import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from backbone import packet_rates, build_backbone_model
from coverage import allocate_gamma, build_cover_model, solve_cover
from errors import GraphFormatError, PlannerError, SolveLimitError
from ilp import SolveStatus
from lp_format import export_lp
from pareto import front_energy_vs_ffd, front_ffd_vs_gateways, front_hop_vs_gateways, hop_levels
from plan import DeploymentPlan, summary_text, validate_plan
from run_logging import setup_run_logging
from schemas import PlanDocument
from services import (
    backbone_params,
    coverage_params,
    default_run_config,
    FRONT_COLUMNS,
    energy_front_frame,
    ffd_front_frame,
    hop_fronts_frame,
    load_graph,
    plan_deployment,
    solve_limits,
    write_csv,
)
from settings import PlannerConfig
from streetgraph import derive_wireless_links, dump_street_graph, gen_grid, graph_summary, parse_street_graph

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

_STATUS_EXIT = {
    str(SolveStatus.OPTIMAL): EXIT_OK,
    str(SolveStatus.INFEASIBLE): EXIT_INFEASIBLE,
    str(SolveStatus.NODE_LIMIT): EXIT_LIMIT,
    str(SolveStatus.TIME_LIMIT): EXIT_LIMIT,
}


def _source_options(func):
    func = click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), help="道路グラフJSON")(func)
    func = click.option("--grid", help="合成グリッド (例: 5x5)")(func)
    func = click.option("--edge-len-m", type=float, default=None, help="グリッドの区間長 [m]")(func)
    func = click.option("--density-per-m", type=float, default=None, help="グリッドのセンサー密度 [1/m]")(func)
    func = click.option("--seed", type=int, default=None)(func)
    return func


def _param_options(func):
    func = click.option("--m-ns", type=int, default=None, help=f"FFDあたりの最大センサー数 (既定 {PlannerConfig.M_NS})")(func)
    func = click.option("--m-hop", type=int, default=None, help=f"最大ホップ数 (既定 {PlannerConfig.M_HOP})")(func)
    func = click.option("--m-rt", type=float, default=None, help="ルーター容量 [packets/s]")(func)
    func = click.option("--m-gw", type=float, default=None, help="ゲートウェイ容量 [packets/s]")(func)
    func = click.option("--per-sensor-rate", type=float, default=None, help="センサー1台の生成率 [packets/s]")(func)
    func = click.option(
        "--weibull-scale", "weibull_scale_s", type=float, default=None, help="到着間隔のWeibull尺度 [s]（生成率を上書き）"
    )(func)
    func = click.option("--weibull-shape", type=float, default=None, help="到着間隔のWeibull形状 (既定 1.0)")(func)
    func = click.option("--radio-range", "radio_range_m", type=float, default=None, help="無線到達距離 [m]")(func)
    func = click.option("--link-mode", type=click.Choice(["distance", "street"]), default=None)(func)
    func = click.option("--max-nodes", type=int, default=None)(func)
    func = click.option("--max-seconds", type=float, default=None)(func)
    func = click.option("--out-dir", default="out", show_default=True, type=click.Path(file_okay=False))(func)
    return func


def _build_config(**kwargs):
    try:
        return default_run_config(**kwargs)
    except ValidationError as e:
        raise click.ClickException(f"設定が不正です: {e}")


def _load(cfg):
    try:
        return load_graph(cfg)
    except (GraphFormatError, OSError) as e:
        raise click.ClickException(f"道路グラフを読み込めません: {e}")


@click.group()
@click.option("--log-level", default=PlannerConfig.LOG_LEVEL, show_default=True)
@click.option("--log-dir", default=PlannerConfig.LOG_DIR, show_default=True)
@click.pass_context
def cli(ctx, log_level, log_dir):
    """路上駐車センサー網のFFD・ゲートウェイ配置プランナー"""
    ctx.ensure_object(dict)
    ctx.obj["run_logger"] = setup_run_logging(log_dir, log_level)


@cli.command("gen-grid")
@click.argument("size")
@click.option("--edge-len-m", type=float, default=100.0, show_default=True)
@click.option("--density-per-m", type=float, default=0.1, show_default=True)
@click.option("--jitter-m", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="出力先（省略時は標準出力）")
def gen_grid_cmd(size, edge_len_m, density_per_m, jitter_m, seed, output):
    """ROWSxCOLS のグリッド道路グラフを生成する"""
    try:
        rows, cols = (int(v) for v in size.lower().split("x", 1))
        g = gen_grid(rows, cols, edge_len_m, density_per_m, jitter_m=jitter_m, seed=seed)
    except (ValueError, GraphFormatError) as e:
        raise click.ClickException(f"グリッドを生成できません: {e}")
    text = dump_street_graph(g)
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logger.info("グリッド %dx%d を %s に書き出しました", rows, cols, output)
    else:
        click.echo(text)


@cli.command()
@_source_options
@_param_options
@click.option("--ffd-budget", type=int, default=None, help="FFD数を固定する")
@click.option("--gw-budget", type=int, default=None, help="ゲートウェイ数を固定する")
@click.pass_context
def solve(ctx, **kwargs):
    """FFD配置・Γ・バックボーンを解いて計画を書き出す"""
    cfg = _build_config(**kwargs)
    g = _load(cfg)
    info = graph_summary(g)
    click.echo(
        f"道路グラフ: 交差点 {info['intersections']}, 区間 {info['segments']}, センサー {info['sensors']}"
    )
    try:
        outcome = plan_deployment(g, cfg, ctx.obj.get("run_logger"))
    except PlannerError as e:
        click.echo(f"実行不可能: {e}", err=True)
        ctx.exit(EXIT_INFEASIBLE)

    if outcome.plan is None:
        click.echo(f"{outcome.status}: {outcome.message}", err=True)
        if outcome.incumbent:
            click.echo(f"暫定解: {json.dumps(outcome.incumbent)}", err=True)
        ctx.exit(_STATUS_EXIT.get(outcome.status, EXIT_INFEASIBLE))

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = outcome.plan.to_document()
    (out_dir / "plan.json").write_text(doc.model_dump_json(indent=2), encoding="utf-8")
    summary = summary_text(outcome.plan, info)
    (out_dir / "plan_summary.txt").write_text(summary, encoding="utf-8")
    click.echo(summary, nl=False)
    ctx.exit(EXIT_OK)


@cli.command()
@_source_options
@_param_options
@click.option("--which", type=click.Choice(["energy", "hops", "ffd"]), required=True)
@click.option(
    "--levels",
    default=None,
    help="hops: FFD水準のカンマ区切り（既定: 最悪・中間・最良）、ffd: ゲートウェイ数のカンマ区切り（既定: 1..交差点数）",
)
@click.pass_context
def pareto(ctx, which, levels, **kwargs):
    """パレートフロントをCSVで書き出す"""
    level_list = None
    if levels:
        try:
            level_list = [int(v) for v in levels.split(",") if v.strip()]
        except ValueError:
            raise click.ClickException(f"--levels は整数のカンマ区切りで指定してください: {levels}")
    cfg = _build_config(levels=level_list, **kwargs)
    g = _load(cfg)
    out_dir = Path(cfg.out_dir)
    limits = solve_limits(cfg)
    cov = coverage_params(cfg)
    run_logger = ctx.obj.get("run_logger")

    path = out_dir / f"{which}_front.csv"
    code = EXIT_OK
    try:
        if which == "energy":
            df = energy_front_frame(front_energy_vs_ffd(g, cov, limits, run_logger))
        elif which == "hops":
            w = derive_wireless_links(g, cfg.radio_range_m, cfg.link_mode)
            chosen = cfg.levels or hop_levels(g, cov, limits, PlannerConfig.MEDIOCRE_FRACTION, run_logger)
            fronts = front_hop_vs_gateways(
                g, w, chosen, backbone_params(cfg), cov, limits, cfg.radio_range_m, cfg.link_mode, run_logger
            )
            df = hop_fronts_frame(fronts)
        else:
            w = derive_wireless_links(g, cfg.radio_range_m, cfg.link_mode)
            front = front_ffd_vs_gateways(
                g, w, backbone_params(cfg), cov, limits, cfg.levels, cfg.radio_range_m, cfg.link_mode, run_logger
            )
            df = ffd_front_frame(front)
    except SolveLimitError as e:
        click.echo(f"上限到達: {e}", err=True)
        ctx.exit(EXIT_LIMIT)
    except PlannerError as e:
        click.echo(f"実行可能な点がありません: {e}", err=True)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(",".join(FRONT_COLUMNS[which]) + "\n", encoding="utf-8")
        ctx.exit(EXIT_INFEASIBLE)

    if df.empty:
        code = EXIT_INFEASIBLE
    write_csv(df, path)
    click.echo(f"{len(df)} 点を {path} に書き出しました")
    ctx.exit(code)


@cli.command()
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def validate(ctx, plan_file, graph_file):
    """計画をすべての制約族で検査する（違反がなければ終了コード0）"""
    try:
        doc = PlanDocument.model_validate_json(Path(plan_file).read_text(encoding="utf-8"))
        g = parse_street_graph(Path(graph_file).read_text(encoding="utf-8"))
    except (ValidationError, GraphFormatError) as e:
        raise click.ClickException(f"ファイルの形式が不正です: {e}")
    violations = validate_plan(DeploymentPlan.from_document(doc), g)
    for v in violations:
        click.echo(str(v))
    if violations:
        click.echo(f"違反 {len(violations)} 件", err=True)
        ctx.exit(1)
    click.echo("違反はありません")
    ctx.exit(EXIT_OK)


@cli.command("export-lp")
@_source_options
@_param_options
@click.option("--model", "model_kind", type=click.Choice(["cover", "backbone"]), default="cover", show_default=True)
@click.option("--objective", default="min_gateways", show_default=True)
@click.option("--ffd-budget", type=int, default=None)
@click.option("--gw-budget", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def export_lp_cmd(ctx, model_kind, objective, output, **kwargs):
    """カバーモデルまたはバックボーンモデルをLP形式で書き出す"""
    cfg = _build_config(**kwargs)
    g = _load(cfg)
    cov = coverage_params(cfg)
    try:
        if model_kind == "cover":
            model = build_cover_model(g, cov)
        else:
            cover, report, _ = solve_cover(g, cov, solve_limits(cfg))
            if cover is None:
                click.echo(f"カバーが求まりません ({report.status})", err=True)
                ctx.exit(_STATUS_EXIT.get(str(report.status), EXIT_INFEASIBLE))
            _, counts = allocate_gamma(g, cover, cov)
            traffic = packet_rates(counts, cfg.per_sensor_rate, cover)
            w = derive_wireless_links(g, cfg.radio_range_m, cfg.link_mode)
            model = build_backbone_model(g, w, cover, traffic, backbone_params(cfg), objective)
    except PlannerError as e:
        click.echo(f"モデルを作れません: {e}", err=True)
        ctx.exit(EXIT_INFEASIBLE)
    text = export_lp(model)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def main():
    cli(obj={})


if __name__ == "__main__":
    sys.exit(main())
