"""
プランナー実行用ログ設定
"""
import json
import logging
import logging.handlers
import os
from datetime import datetime


class RunLogger:
    """実行ログとソルバー性能ログの設定"""

    def __init__(self, app_name="backbone_planner", log_dir="logs"):
        self.app_name = app_name
        self.log_dir = log_dir

        os.makedirs(log_dir, exist_ok=True)

        self.app_log_file = os.path.join(log_dir, f"{app_name}.log")
        self.error_log_file = os.path.join(log_dir, f"{app_name}_error.log")
        self.perf_log_file = os.path.join(log_dir, f"{app_name}_performance.log")

    def setup_loggers(self, level=logging.INFO):
        """ルートロガーにファイルハンドラーを追加する"""
        detailed_formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s"
        )

        # ローテーティングファイルハンドラー（10MB、5ファイルまで保持）
        app_handler = logging.handlers.RotatingFileHandler(
            self.app_log_file,
            maxBytes=10 * 1024 * 1024,
            backupCount=5,
            encoding="utf-8",
        )
        app_handler.setLevel(level)
        app_handler.setFormatter(detailed_formatter)

        # エラーログ（ERROR以上）
        error_handler = logging.handlers.RotatingFileHandler(
            self.error_log_file,
            maxBytes=10 * 1024 * 1024,
            backupCount=5,
            encoding="utf-8",
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(detailed_formatter)

        root = logging.getLogger()
        root.addHandler(app_handler)
        root.addHandler(error_handler)
        if root.level > level or root.level == logging.NOTSET:
            root.setLevel(level)

        return app_handler, error_handler

    def log_solve(self, label, report):
        """ソルバー1回分の性能ログを記録"""
        perf_data = {
            "timestamp": datetime.now().isoformat(),
            "label": label,
            "status": str(report.status),
            "objective": report.objective,
            "nodes": report.nodes,
            "rounds": report.rounds,
            "duration_ms": round(report.wall_time * 1000, 2),
        }
        with open(self.perf_log_file, "a", encoding="utf-8") as f:
            f.write(json.dumps(perf_data, ensure_ascii=False) + "\n")


def setup_run_logging(log_dir, level_name="INFO"):
    """CLI用のログセットアップ関数"""
    level = getattr(logging, str(level_name).upper(), logging.INFO)
    logging.basicConfig(level=level)
    manager = RunLogger(log_dir=log_dir)
    manager.setup_loggers(level)
    return manager


def record_solve(run_logger, label, report):
    """run_logger があればソルバー1回分を性能ログに書く"""
    if run_logger is not None:
        run_logger.log_solve(label, report)
