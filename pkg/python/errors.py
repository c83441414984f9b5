# errors.py
# プランナー全体で使う例外の定義


class PlannerError(Exception):
    """プランナーのすべてのドメイン例外の基底クラス"""


class GraphFormatError(PlannerError, ValueError):
    """道路グラフ文書が不正な場合"""


class ModelError(PlannerError, ValueError):
    """線形モデルまたはソルバー引数が不正な場合"""


class MissingValueError(ModelError):
    """割当に変数の値が欠けている場合"""


class InfeasibleCoverError(PlannerError):
    """FFD配置でカバーできない区間、またはM_nsを満たす分割が存在しない場合"""

    def __init__(self, message: str, segment=None, node=None):
        super().__init__(message)
        self.segment = segment
        self.node = node


class BackboneError(PlannerError, ValueError):
    """バックボーンモデルへの入力が不正な場合"""


class BackboneInfeasibleError(BackboneError):
    """モデル構築の時点で実行不可能と分かる場合（ゲートウェイ数 < クラスタ数など）"""


class TopologyError(PlannerError):
    """ソルバーの割当が木構造の不変条件を破っている場合（モデルかソルバーのバグ）"""

    def __init__(self, message: str, tag: str = ""):
        super().__init__(message)
        self.tag = tag


class ParetoError(PlannerError, ValueError):
    """パレート掃引の入力が不正な場合"""


class SolveLimitError(PlannerError):
    """掃引中にノード数または時間の上限に達した場合"""

    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status
