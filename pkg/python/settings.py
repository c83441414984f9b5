"""
プランナーの既定値と環境変数による上書き
"""
import os

from dotenv import load_dotenv

load_dotenv()


def _env(name: str, default, cast):
    raw = os.getenv(f"PLANNER_{name}")
    if raw is None or raw == "":
        return default
    return cast(raw)


class PlannerConfig:
    """プランナー設定クラス"""

    # FFDあたりのセンサー上限（帯域割当から決めた既定値）
    M_NS = _env("M_NS", 256, int)

    # バックボーン
    M_HOP = _env("M_HOP", 10, int)
    M_RT = _env("M_RT", 100.0, float)  # packets/s
    M_GW = _env("M_GW", 1000.0, float)  # packets/s
    PER_SENSOR_RATE = _env("PER_SENSOR_RATE", 0.01, float)  # packets/s

    # 無線リンク
    RADIO_RANGE_M = _env("RADIO_RANGE_M", 150.0, float)
    LINK_MODE = _env("LINK_MODE", "distance", str)  # distance | street

    # ソルバー制限
    MAX_NODES = _env("MAX_NODES", 200000, int)
    MAX_SECONDS = _env("MAX_SECONDS", 120.0, float)
    TOLERANCE = 1e-6

    # パレート掃引
    MEDIOCRE_FRACTION = _env("MEDIOCRE_FRACTION", 0.8, float)
    EXACT_ENUMERATION_MAX_NODES = _env("EXACT_ENUMERATION_MAX_NODES", 12, int)

    # ログ
    LOG_DIR = _env("LOG_DIR", "logs", str)
    LOG_LEVEL = _env("LOG_LEVEL", "INFO", str)

    @classmethod
    def as_dict(cls):
        """現在の設定値を辞書で返す（プランのメタデータ用）"""
        return {
            "m_ns": cls.M_NS,
            "m_hop": cls.M_HOP,
            "m_rt": cls.M_RT,
            "m_gw": cls.M_GW,
            "per_sensor_rate": cls.PER_SENSOR_RATE,
            "radio_range_m": cls.RADIO_RANGE_M,
            "link_mode": cls.LINK_MODE,
            "max_nodes": cls.MAX_NODES,
            "max_seconds": cls.MAX_SECONDS,
        }
