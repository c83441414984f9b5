# lp_format.py
# LinearModel を CPLEX LP 形式のテキストに書き出す / 読み戻す
import logging
import re
from typing import Dict, List, Tuple

from errors import ModelError
from ilp import BINARY, CONTINUOUS, EQ, GE, LE, LinearModel

logger = logging.getLogger(__name__)

# LP形式で名前に使える文字（先頭に数字とピリオドは使えない）
_LEGAL = re.compile(r"[^A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]")
_MAX_NAME = 255
_SECTION_KEYWORDS = {
    "minimize", "minimum", "min", "maximize", "maximum", "max",
    "subject", "st", "s.t.", "such", "bounds", "bound", "binary", "binaries",
    "bin", "general", "generals", "gen", "end", "free", "inf", "infinity",
}


def sanitize_names(names: List[str]) -> Dict[str, str]:
    """LP形式で使えない名前を決定的に置き換える（衝突時は連番を付ける）"""
    mapping: Dict[str, str] = {}
    used = set()
    for name in names:
        clean = _LEGAL.sub("_", name) or "_"
        if clean[0].isdigit() or clean[0] == "." or clean[0] in "eE" and (clean[1:] == "" or clean[1:].isdigit()):
            clean = "v_" + clean
        if clean.lower() in _SECTION_KEYWORDS:
            clean = "v_" + clean
        clean = clean[:_MAX_NAME]
        candidate, k = clean, 2
        while candidate in used:
            suffix = f"_{k}"
            candidate = clean[: _MAX_NAME - len(suffix)] + suffix
            k += 1
        used.add(candidate)
        mapping[name] = candidate
    return mapping


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _terms(coeffs, names: Dict[str, str]) -> str:
    parts = []
    for var, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {names[var]}")
    return " ".join(parts)


def export_lp(m: LinearModel) -> str:
    """Minimize / Subject To / Bounds / Binaries / End の順で書き出す"""
    m.validate()
    variables = m.variables
    names = sanitize_names([v.name for v in variables])
    con_names = sanitize_names([c.name for c in m.constraints])

    lines = [f"\\ Problem: {m.name}"]
    if m.objective_constant:
        lines.append(f"\\ objective constant: {_fmt(m.objective_constant)}")
    lines.append("Minimize")
    objective = m.objective
    if objective:
        lines.append(f" obj: {_terms(objective, names)}")
    elif variables:
        lines.append(f" obj: 0 {names[variables[0].name]}")
    else:
        lines.append(" obj:")

    lines.append("Subject To")
    for con in m.constraints:
        op = {LE: "<=", GE: ">=", EQ: "="}[con.sense]
        body = _terms(con.coeffs, names) if con.coeffs else f"0 {names[variables[0].name]}"
        lines.append(f" {con_names[con.name]}: {body} {op} {_fmt(con.rhs)}")

    lines.append("Bounds")
    binaries = []
    for var in variables:
        if var.kind == BINARY:
            binaries.append(names[var.name])
            lines.append(f" 0 <= {names[var.name]} <= 1")
            continue
        lo = "-inf" if var.lb == float("-inf") else _fmt(var.lb)
        hi = "+inf" if var.ub == float("inf") else _fmt(var.ub)
        lines.append(f" {lo} <= {names[var.name]} <= {hi}")

    if binaries:
        lines.append("Binaries")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    logger.debug("LP形式で出力: 変数 %d, 制約 %d", len(variables), len(m.constraints))
    return "\n".join(lines) + "\n"


# --- 読み込み（export_lp が書く範囲の文法のみ） ---

_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+(\S+)")


def _parse_expr(text: str) -> Dict[str, float]:
    coeffs: Dict[str, float] = {}
    text = text.strip()
    if text and text[0] not in "+-":
        text = "+ " + text
    pos = 0
    for match in _TERM.finditer(text):
        if text[pos:match.start()].strip():
            raise ModelError(f"LP式を解釈できません: {text}")
        sign = -1.0 if match.group(1) == "-" else 1.0
        coeffs[match.group(3)] = coeffs.get(match.group(3), 0.0) + sign * float(match.group(2))
        pos = match.end()
    if text[pos:].strip():
        raise ModelError(f"LP式を解釈できません: {text}")
    return coeffs


def read_lp(text: str, name: str = "lp") -> LinearModel:
    """export_lp の出力を LinearModel に戻す"""
    section = None
    objective: Dict[str, float] = {}
    constraints: List[Tuple[str, Dict[str, float], str, float]] = []
    bounds: Dict[str, Tuple[float, float]] = {}
    binaries: List[str] = []
    seen: Dict[str, None] = {}
    constant = 0.0

    def remember(var):
        seen.setdefault(var, None)

    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            if "objective constant:" in line:
                constant = float(line.split(":", 1)[1])
            continue
        if not line:
            continue
        key = line.lower()
        if key in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = key
            continue
        if section == "minimize":
            body = line.split(":", 1)[1] if ":" in line else line
            objective = _parse_expr(body)
            for var in objective:
                remember(var)
        elif section == "subject to":
            label, body = line.split(":", 1)
            match = re.match(r"(.*?)(<=|>=|=)\s*(\S+)$", body.strip())
            if not match:
                raise ModelError(f"制約行を解釈できません: {line}")
            coeffs = _parse_expr(match.group(1))
            for var in coeffs:
                remember(var)
            op = {"<=": LE, ">=": GE, "=": EQ}[match.group(2)]
            constraints.append((label.strip(), coeffs, op, float(match.group(3))))
        elif section == "bounds":
            match = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)$", line)
            if not match:
                raise ModelError(f"境界行を解釈できません: {line}")
            var = match.group(2)
            bounds[var] = (float(match.group(1)), float(match.group(3)))
        elif section == "binaries":
            binaries.append(line)

    # Bounds 節は全変数を元の順序で並べているので、それを変数順とする
    order = list(bounds) + [v for v in seen if v not in bounds]
    model = LinearModel(name)
    binary_set = set(binaries)
    for var in order:
        lo, hi = bounds.get(var, (0.0, float("inf")))
        model.add_variable(var, BINARY if var in binary_set else CONTINUOUS, lo, hi)
    for label, coeffs, op, rhs in constraints:
        model.add_constraint({v: c for v, c in coeffs.items()}, op, rhs, name=label)
    model.set_objective({v: c for v, c in objective.items()}, constant)
    return model.seal()
