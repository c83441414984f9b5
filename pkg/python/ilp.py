"""
0/1整数線形モデルのコンテナ、分枝限定法ソルバー、割当チェッカー

ノードの下界は scipy.optimize.linprog (HiGHS) の線形緩和で求め、
分枝の前に numpy で行ごとの上下界伝播を行う。
同じ目的値の最適解が複数あるときは、変数index順で辞書式最小の割当を返す
（lexicographic=False なら最初に見つかった最適解を返す）。
"""
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from errors import MissingValueError, ModelError

logger = logging.getLogger(__name__)

BINARY = "binary"
CONTINUOUS = "continuous"

LE = "<="
EQ = "="
GE = ">="

DEFAULT_TOL = 1e-6

# 割当は変数名 -> 値
Assignment = Dict[str, float]


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    """疎な係数マップ・比較子・定数からなる1本の制約

    tag は制約族（例: "eq:sum-bij"）。検証レポートでそのまま表示する。
    """

    name: str
    coeffs: Mapping[str, float]
    sense: str
    rhs: float
    tag: str = ""

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.coeffs.items())

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class SolveLimits:
    max_nodes: int = 200000
    max_seconds: float = 120.0

    def __post_init__(self):
        if self.max_nodes <= 0 or not self.max_seconds > 0:
            raise ModelError(
                f"ソルバーの制限値は正である必要があります: nodes={self.max_nodes}, seconds={self.max_seconds}"
            )


@dataclass
class SolveReport:
    status: SolveStatus
    assignment: Optional[Assignment]
    objective: Optional[float]
    nodes: int
    wall_time: float
    rounds: int = 0
    added_cuts: List[Constraint] = field(default_factory=list, repr=False)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


class LinearModel:
    """変数・制約・目的関数（最小化）を保持する線形モデル

    seal() 以降は変更できない。遅延制約を足すときは with_constraints() で
    新しいモデルを作る。
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self._variables: List[Variable] = []
        self._index: Dict[str, int] = {}
        self._constraints: List[Constraint] = []
        self._objective: Dict[str, float] = {}
        self.objective_constant = 0.0
        self.sense = "min"
        self._sealed = False

    # --- 構築 ---

    def _check_open(self):
        if self._sealed:
            raise ModelError(f"モデル {self.name} は封印済みです。")

    def add_variable(self, name: str, kind: str = BINARY, lb: float = 0.0, ub: float = 1.0) -> str:
        self._check_open()
        if name in self._index:
            raise ModelError(f"変数名が重複しています: {name}")
        if kind not in (BINARY, CONTINUOUS):
            raise ModelError(f"不明な変数の種類です: {kind}")
        self._index[name] = len(self._variables)
        self._variables.append(Variable(name, kind, float(lb), float(ub)))
        return name

    def add_constraint(
        self,
        coeffs: Mapping[str, float],
        sense: str,
        rhs: float,
        name: Optional[str] = None,
        tag: str = "",
    ) -> Constraint:
        self._check_open()
        if sense not in (LE, EQ, GE):
            raise ModelError(f"不明な比較子です: {sense}")
        con = Constraint(
            name=name or f"c{len(self._constraints)}",
            coeffs={v: float(c) for v, c in coeffs.items() if c != 0},
            sense=sense,
            rhs=float(rhs),
            tag=tag,
        )
        self._constraints.append(con)
        return con

    def set_objective(self, coeffs: Mapping[str, float], constant: float = 0.0):
        self._check_open()
        self._objective = {v: float(c) for v, c in coeffs.items() if c != 0}
        self.objective_constant = float(constant)

    def validate(self):
        """未宣言の変数参照と境界の矛盾を検出する"""
        for var in self._variables:
            if var.lb > var.ub:
                raise ModelError(f"変数 {var.name} の下限が上限を超えています。")
            if var.kind == BINARY and (var.lb, var.ub) != (0.0, 1.0):
                raise ModelError(f"0/1変数 {var.name} の境界は [0, 1] である必要があります。")
        for con in self._constraints:
            for v in con.coeffs:
                if v not in self._index:
                    raise ModelError(f"制約 {con.name} が未宣言の変数 {v} を参照しています。")
        for v in self._objective:
            if v not in self._index:
                raise ModelError(f"目的関数が未宣言の変数 {v} を参照しています。")

    def seal(self) -> "LinearModel":
        self.validate()
        self._sealed = True
        return self

    def with_constraints(self, extra: Sequence[Constraint]) -> "LinearModel":
        clone = LinearModel(self.name)
        clone._variables = list(self._variables)
        clone._index = dict(self._index)
        clone._constraints = list(self._constraints) + list(extra)
        clone._objective = dict(self._objective)
        clone.objective_constant = self.objective_constant
        return clone.seal()

    # --- 参照 ---

    @property
    def sealed(self) -> bool:
        return self._sealed

    @property
    def variables(self) -> List[Variable]:
        return list(self._variables)

    @property
    def constraints(self) -> List[Constraint]:
        return list(self._constraints)

    @property
    def objective(self) -> Dict[str, float]:
        return dict(self._objective)

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def index_of(self, name: str) -> int:
        return self._index[name]

    def evaluate(self, values: Mapping[str, float]) -> float:
        return self.objective_constant + sum(c * values[v] for v, c in self._objective.items())

    def __repr__(self) -> str:
        return (
            f"LinearModel({self.name!r}, vars={len(self._variables)}, "
            f"constraints={len(self._constraints)})"
        )


def check(m: LinearModel, a: Mapping[str, float], tol: float = DEFAULT_TOL) -> List[Constraint]:
    """tol を超えて破られている制約をすべて返す（空なら実行可能）"""
    missing = [v.name for v in m.variables if v.name not in a]
    if missing:
        raise MissingValueError(f"割当に値がない変数があります: {missing[:5]}")
    return [con for con in m.constraints if con.violation(a) > tol]


# --- ソルバー本体 ---


class _CompiledModel:
    """LinearModel を numpy / scipy.sparse の配列に変換したもの"""

    def __init__(self, m: LinearModel):
        variables = m.variables
        self.names = [v.name for v in variables]
        self.n = len(variables)
        self.is_bin = np.array([v.kind == BINARY for v in variables], dtype=bool)
        self.has_continuous = bool((~self.is_bin).any())
        self.lb = np.array([v.lb for v in variables], dtype=float)
        self.ub = np.array([v.ub for v in variables], dtype=float)
        self.c = np.zeros(self.n)
        for name, coef in m.objective.items():
            self.c[m.index_of(name)] = coef
        self.constant = m.objective_constant

        ub_rows, ub_cols, ub_vals, ub_rhs = [], [], [], []
        eq_rows, eq_cols, eq_vals, eq_rhs = [], [], [], []
        for con in m.constraints:
            sign = -1.0 if con.sense == GE else 1.0
            if con.sense == EQ:
                r = len(eq_rhs)
                for name, coef in con.coeffs.items():
                    eq_rows.append(r)
                    eq_cols.append(m.index_of(name))
                    eq_vals.append(coef)
                eq_rhs.append(con.rhs)
            else:
                r = len(ub_rhs)
                for name, coef in con.coeffs.items():
                    ub_rows.append(r)
                    ub_cols.append(m.index_of(name))
                    ub_vals.append(sign * coef)
                ub_rhs.append(sign * con.rhs)

        self.A_ub = self._matrix(ub_rows, ub_cols, ub_vals, len(ub_rhs))
        self.b_ub = np.array(ub_rhs, dtype=float) if ub_rhs else None
        self.A_eq = self._matrix(eq_rows, eq_cols, eq_vals, len(eq_rhs))
        self.b_eq = np.array(eq_rhs, dtype=float) if eq_rhs else None

        # 伝播用: すべて「≤」形式に揃えた行（等式は両向き）
        n_ub, n_eq = len(ub_rhs), len(eq_rhs)
        rows = np.concatenate(
            [
                np.array(ub_rows, dtype=np.int64),
                np.array(eq_rows, dtype=np.int64) + n_ub,
                np.array(eq_rows, dtype=np.int64) + n_ub + n_eq,
            ]
        )
        self.p_row = rows
        self.p_col = np.concatenate(
            [np.array(c, dtype=np.int64) for c in (ub_cols, eq_cols, eq_cols)]
        )
        self.p_val = np.concatenate(
            [np.array(ub_vals, dtype=float), np.array(eq_vals, dtype=float), -np.array(eq_vals, dtype=float)]
        )
        self.p_rhs = np.concatenate(
            [np.array(ub_rhs, dtype=float), np.array(eq_rhs, dtype=float), -np.array(eq_rhs, dtype=float)]
        )
        self.p_m = n_ub + 2 * n_eq
        self.p_bin_col = self.is_bin[self.p_col] if self.p_col.size else np.zeros(0, dtype=bool)

    def _matrix(self, rows, cols, vals, m):
        if m == 0:
            return None
        return sparse.csr_matrix((vals, (rows, cols)), shape=(m, self.n))

    def to_assignment(self, x: np.ndarray) -> Assignment:
        return {name: float(val) for name, val in zip(self.names, x)}

    def from_assignment(self, a: Mapping[str, float]) -> np.ndarray:
        return np.array([float(a.get(name, 0.0)) for name in self.names])

    def rows_feasible(self, x: np.ndarray, tol: float) -> bool:
        if self.A_ub is not None and np.any(self.A_ub @ x > self.b_ub + tol):
            return False
        if self.A_eq is not None and np.any(np.abs(self.A_eq @ x - self.b_eq) > tol):
            return False
        return bool(np.all(x >= self.lb - tol) and np.all(x <= self.ub + tol))


class _LpTimeout(Exception):
    """HiGHS 側で時間切れになった"""


class _BranchAndBound:
    """深さ優先の分枝限定法（0側の子から探索）"""

    def __init__(
        self, comp: _CompiledModel, node_budget: int, deadline: float, tol: float, lexicographic: bool = True
    ):
        self.comp = comp
        self.node_budget = node_budget
        self.deadline = deadline
        self.tol = tol
        self.lexicographic = lexicographic
        # 目的関数が0/1変数の整数係数だけなら下界を切り上げられる
        self.integral = bool(
            np.all(comp.c[~comp.is_bin] == 0) and np.allclose(comp.c, np.round(comp.c))
        )
        self.nodes = 0
        self.best_x: Optional[np.ndarray] = None
        self.best_val = math.inf

    # 上下界伝播: 0/1変数の境界だけを締める（その場で更新）
    def _propagate(self, lb: np.ndarray, ub: np.ndarray) -> bool:
        comp, tol = self.comp, self.tol
        if comp.p_row.size == 0:
            return bool(np.all(lb <= ub + tol))
        row, col, val = comp.p_row, comp.p_col, comp.p_val
        pos = (val > 0) & comp.p_bin_col
        neg = (val < 0) & comp.p_bin_col
        for _ in range(comp.n + 1):
            lo = np.where(val > 0, val * lb[col], val * ub[col])
            minact = np.bincount(row, weights=lo, minlength=comp.p_m)
            if np.any(minact > comp.p_rhs + tol):
                return False
            slack = (comp.p_rhs - minact)[row]
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                cand_ub = lb[col] + slack / val
                cand_lb = ub[col] + slack / val
            new_ub = ub.copy()
            new_lb = lb.copy()
            sel = pos & np.isfinite(cand_ub)
            np.minimum.at(new_ub, col[sel], np.floor(cand_ub[sel] + tol))
            sel = neg & np.isfinite(cand_lb)
            np.maximum.at(new_lb, col[sel], np.ceil(cand_lb[sel] - tol))
            if np.any(new_lb > new_ub + tol):
                return False
            changed = np.any(new_ub < ub - 0.5) or np.any(new_lb > lb + 0.5)
            lb[:] = new_lb
            ub[:] = new_ub
            if not changed:
                return True
        return True

    def _relax(self, lb: np.ndarray, ub: np.ndarray):
        comp = self.comp
        remaining = max(self.deadline - time.perf_counter(), 1e-3)
        res = linprog(
            comp.c,
            A_ub=comp.A_ub,
            b_ub=comp.b_ub,
            A_eq=comp.A_eq,
            b_eq=comp.b_eq,
            bounds=np.column_stack((lb, ub)),
            method="highs",
            options={"time_limit": remaining},
        )
        if res.status == 0:
            return float(res.fun), np.asarray(res.x, dtype=float)
        if res.status == 2:
            return None
        if res.status == 1:
            raise _LpTimeout()
        raise ModelError(f"線形緩和が異常終了しました: {res.message}")

    def _polish(self, x: np.ndarray, lb: np.ndarray, ub: np.ndarray):
        """0/1変数を丸めた解を整えて (目的値, 解) を返す"""
        comp = self.comp
        sol = x.copy()
        sol[comp.is_bin] = np.round(x[comp.is_bin])
        if comp.has_continuous:
            flb, fub = lb.copy(), ub.copy()
            flb[comp.is_bin] = sol[comp.is_bin]
            fub[comp.is_bin] = sol[comp.is_bin]
            res = self._relax(flb, fub)
            if res is None:
                return None
            sol = res[1]
            sol[comp.is_bin] = flb[comp.is_bin]
            sol = np.clip(sol, comp.lb, comp.ub)
        if not comp.rows_feasible(sol, self.tol):
            return None
        return float(comp.c @ sol), sol

    def _lex_less(self, a: np.ndarray, b: np.ndarray) -> bool:
        mask = self.comp.is_bin
        diff = np.flatnonzero(mask & (np.abs(a - b) > 0.5))
        return bool(diff.size) and a[diff[0]] < b[diff[0]]

    def _may_undercut(self, lb: np.ndarray, ub: np.ndarray) -> bool:
        """この部分木に現在の最良解より辞書式に小さい解が含まれうるか"""
        best = self.best_x
        fixed = ub - lb < 0.5
        mask = self.comp.is_bin & (
            (fixed & (np.abs(lb - best) > 0.5)) | (~fixed & (best > 0.5))
        )
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return False
        i = idx[0]
        if not fixed[i]:
            return True
        return bool(lb[i] < best[i])

    def _pruned(self, bound: float, lb: np.ndarray, ub: np.ndarray) -> bool:
        if self.best_x is None:
            return False
        if self.integral:
            bound = math.ceil(bound - self.tol)
        if bound > self.best_val + self.tol:
            return True
        if not self.lexicographic:
            return bound >= self.best_val - self.tol
        if bound < self.best_val - self.tol:
            return False
        return not self._may_undercut(lb, ub)

    def offer(self, value: float, sol: np.ndarray) -> bool:
        if (
            self.best_x is None
            or value < self.best_val - self.tol
            or (
                self.lexicographic
                and value <= self.best_val + self.tol
                and self._lex_less(sol, self.best_x)
            )
        ):
            self.best_val = value
            self.best_x = sol
            return True
        return False

    def _children(self, lb, ub, j):
        lb0, ub0 = lb.copy(), ub.copy()
        ub0[j] = 0.0
        lb1, ub1 = lb.copy(), ub.copy()
        lb1[j] = 1.0
        return (lb1, ub1), (lb0, ub0)

    def _lex_regions(self, lb, ub, sol):
        """解 sol より辞書式に小さい部分領域（1の位置ごとに1つ）を作る"""
        free = np.flatnonzero(self.comp.is_bin & (ub - lb > 0.5))
        run_lb, run_ub = lb.copy(), ub.copy()
        regions = []
        for j in free:
            if sol[j] > 0.5:
                child_lb, child_ub = run_lb.copy(), run_ub.copy()
                child_ub[j] = 0.0
                regions.append((child_lb, child_ub))
                run_lb[j] = 1.0
            else:
                run_ub[j] = 0.0
        return regions

    def _round_heuristic(self, x, lb, ub):
        """緩和解の単純な丸めで暫定解を探す"""
        comp = self.comp
        guess = x.copy()
        guess[comp.is_bin] = (x[comp.is_bin] >= 0.5).astype(float)
        glb, gub = lb.copy(), ub.copy()
        glb[comp.is_bin] = guess[comp.is_bin]
        gub[comp.is_bin] = guess[comp.is_bin]
        if not self._propagate(glb, gub):
            return
        cand = self._polish(guess, glb, gub)
        if cand is not None:
            self.offer(*cand)

    def run(self) -> SolveStatus:
        try:
            return self._search()
        except _LpTimeout:
            return SolveStatus.TIME_LIMIT

    def _search(self) -> SolveStatus:
        comp = self.comp
        stack = [(comp.lb.copy(), comp.ub.copy())]
        root = True
        while stack:
            if self.nodes >= self.node_budget:
                return SolveStatus.NODE_LIMIT
            if time.perf_counter() > self.deadline:
                return SolveStatus.TIME_LIMIT
            lb, ub = stack.pop()
            self.nodes += 1
            if not self._propagate(lb, ub):
                continue
            relaxed = self._relax(lb, ub)
            if relaxed is None:
                continue
            bound, x = relaxed
            if root:
                self._round_heuristic(x, lb, ub)
                root = False
            if self._pruned(bound, lb, ub):
                continue

            free = comp.is_bin & (ub - lb > 0.5)
            frac = np.flatnonzero(free & (np.abs(x - np.round(x)) > self.tol))
            if frac.size:
                stack.extend(self._children(lb, ub, frac[0]))
                continue

            cand = self._polish(x, lb, ub)
            if cand is None:
                free_idx = np.flatnonzero(free)
                if free_idx.size:
                    stack.extend(self._children(lb, ub, free_idx[0]))
                continue
            value, sol = cand
            self.offer(value, sol)
            if self.lexicographic:
                # 同じ目的値で辞書式に小さい解だけを追加で探す
                stack.extend(reversed(self._lex_regions(lb, ub, sol)))
        return SolveStatus.OPTIMAL if self.best_x is not None else SolveStatus.INFEASIBLE


Separator = Callable[[Assignment], List[Constraint]]


def solve(
    m: LinearModel,
    limits: Optional[SolveLimits] = None,
    *,
    separator: Optional[Separator] = None,
    hint: Optional[Mapping[str, float]] = None,
    tol: float = DEFAULT_TOL,
    lexicographic: bool = True,
) -> SolveReport:
    """モデルを厳密に解く

    separator を渡した場合は、最適解が見つかるたびに破られた遅延制約を返してもらい、
    それを加えたモデルを解き直す（返す制約がなくなるまで）。
    hint は暫定解の候補で、実行可能なときだけ使う。
    lexicographic=False では同点の解の辞書式比較を省き、目的値だけで枝刈りする。
    """
    limits = limits or SolveLimits()
    if not isinstance(limits, SolveLimits):
        raise ModelError("limits には SolveLimits を渡してください。")
    m.validate()
    if not m.sealed:
        m.seal()

    start = time.perf_counter()
    deadline = start + limits.max_seconds
    nodes_used = 0
    rounds = 0
    added: List[Constraint] = []
    work = m
    while True:
        comp = _CompiledModel(work)
        search = _BranchAndBound(comp, limits.max_nodes - nodes_used, deadline, tol, lexicographic)
        if hint is not None:
            x0 = comp.from_assignment(hint)
            if comp.rows_feasible(x0, tol):
                search.offer(float(comp.c @ x0), x0)
        if comp.n == 0:
            status = (
                SolveStatus.OPTIMAL if comp.rows_feasible(np.zeros(0), tol) else SolveStatus.INFEASIBLE
            )
            if status == SolveStatus.OPTIMAL:
                search.best_x, search.best_val = np.zeros(0), 0.0
        else:
            status = search.run()
        nodes_used += search.nodes

        assignment = comp.to_assignment(search.best_x) if search.best_x is not None else None
        if status == SolveStatus.OPTIMAL and separator is not None:
            cuts = separator(assignment)
            if cuts:
                rounds += 1
                added.extend(cuts)
                logger.debug("遅延制約 %d 本を追加して解き直します (round %d)", len(cuts), rounds)
                work = work.with_constraints(cuts)
                hint = None
                continue
        break

    objective = search.best_val + comp.constant if search.best_x is not None else None
    report = SolveReport(
        status=status,
        assignment=assignment,
        objective=objective,
        nodes=nodes_used,
        wall_time=time.perf_counter() - start,
        rounds=rounds,
        added_cuts=added,
    )
    logger.info(
        "求解 %s: status=%s objective=%s nodes=%d time=%.3fs",
        m.name,
        report.status,
        report.objective,
        report.nodes,
        report.wall_time,
    )
    return report
