# schemas.py
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, field_validator, model_validator


# --- 道路グラフ文書 ---


class NodeInput(BaseModel):
    """交差点1件（nodes配列の要素）"""

    id: int
    x: float
    y: float
    label: Optional[str] = None

    @field_validator("x", "y")
    @classmethod
    def coordinate_must_be_finite(cls, v: float) -> float:
        """座標が有限値であることを保証する"""
        if not math.isfinite(v):
            raise ValueError("座標は有限値である必要があります。")
        return v


class EdgeInput(BaseModel):
    """道路区間1件（edges配列の要素）"""

    u: int
    v: int
    length_m: float
    density_per_m: float
    parking: bool

    @field_validator("length_m")
    @classmethod
    def length_must_be_positive(cls, v: float) -> float:
        """区間長が正であることを保証する"""
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"length_m が負の値です (negative length): {v}")
        if v == 0:
            raise ValueError("length_m は0より大きい必要があります。")
        return v

    @field_validator("density_per_m")
    @classmethod
    def density_must_not_be_negative(cls, v: float) -> float:
        """センサー密度がゼロ以上であることを保証する"""
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"density_per_m が負の値です (negative density): {v}")
        return v


class StreetGraphDocument(BaseModel):
    """道路グラフ文書全体"""

    nodes: List[NodeInput]
    edges: List[EdgeInput]


# --- 配置計画文書 ---


class GammaEntry(BaseModel):
    """有向区間端 (i, j) の管理長とセンサー数"""

    i: int
    j: int
    managed_len_m: float
    sensors: int


class ObjectivesDoc(BaseModel):
    phi_x: int
    phi_omega: float
    phi_y: int
    phi_hx: float


class PlanParams(BaseModel):
    m_ns: int
    m_hop: int
    m_rt: float
    m_gw: float
    per_sensor_rate: float
    radio_range_m: float
    link_mode: Literal["distance", "street"] = "distance"


class PlanDocument(BaseModel):
    """solveコマンドが書き出す配置計画"""

    format_version: int = 1
    status: str
    ffd: List[int]
    gateways: List[int]
    gamma: List[GammaEntry]
    parents: Dict[int, int]
    ancestors: Dict[int, List[int]]
    gateway_of: Dict[int, int]
    hop: Dict[int, int]
    traffic: Dict[int, float]
    objectives: ObjectivesDoc
    params: PlanParams
    metadata: Dict[str, Any] = {}


# --- 実行設定 ---


class RunConfig(BaseModel):
    """CLIが受け取る実行設定"""

    input_path: Optional[str] = None
    grid: Optional[Tuple[int, int]] = None
    edge_len_m: float = 100.0
    density_per_m: float = 0.1

    m_ns: int
    m_hop: int
    m_rt: float
    m_gw: float
    per_sensor_rate: float
    radio_range_m: float
    link_mode: Literal["distance", "street"] = "distance"
    # 到着間隔の Weibull 分布。scale があれば per_sensor_rate を上書きする
    weibull_scale_s: Optional[float] = None
    weibull_shape: float = 1.0

    ffd_budget: Optional[int] = None
    gw_budget: Optional[int] = None
    levels: Optional[List[int]] = None

    max_nodes: int
    max_seconds: float
    out_dir: str = "out"
    seed: Optional[int] = None

    @field_validator("grid", mode="before")
    @classmethod
    def parse_grid_spec(cls, v):
        """'5x5' 形式のグリッド指定をタプルに変換する"""
        if v is None or isinstance(v, (tuple, list)):
            return v
        text = str(v).lower().strip()
        if "x" not in text:
            raise ValueError("grid は ROWSxCOLS の形式で指定してください。")
        rows, cols = text.split("x", 1)
        return int(rows), int(cols)

    @field_validator("m_ns", "m_hop", "max_nodes")
    @classmethod
    def must_be_positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("1以上の整数を指定してください。")
        return v

    @field_validator("m_rt", "m_gw", "radio_range_m", "max_seconds", "edge_len_m")
    @classmethod
    def must_be_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("正の値を指定してください。")
        return v

    @field_validator("weibull_scale_s", "weibull_shape")
    @classmethod
    def weibull_must_be_positive(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError("Weibull分布のパラメータは正の値を指定してください。")
        return v

    @field_validator("per_sensor_rate", "density_per_m")
    @classmethod
    def must_not_be_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("負の値は指定できません。")
        return v

    @model_validator(mode="after")
    def check_source_and_capacity(self):
        """入力ファイルとグリッド指定のどちらか一方だけを許可する"""
        if (self.input_path is None) == (self.grid is None):
            raise ValueError("--input と --grid はどちらか一方だけを指定してください。")
        if self.m_gw < self.m_rt:
            raise ValueError("M_gw は M_rt 以上である必要があります。")
        return self
