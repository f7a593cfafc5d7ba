"""Scenario expression language and JSON scenario documents.

Grammar (no implicit multiplication, trig in radians)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus (``-x^2 == -(x^2)``) and is right
associative.  ``r`` is shorthand for ``sqrt(x^2+y^2+z^2)``; it is kept as a
variable in the tree and expanded at evaluation time.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import jets as J
from .errors import DimensionMismatch, ParseError, SchemaError

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Call", "Expr", "parse", "to_string",
    "evaluate", "variables", "compile_field", "load_scenario", "scenario_from_json",
    "FUNCTIONS", "VARIABLES",
]

VARIABLES = ("x", "y", "z", "t", "r")
FUNCTIONS = {
    "exp": J.exp,
    "log": J.log,
    "sin": J.sin,
    "cos": J.cos,
    "sqrt": J.sqrt,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


# -- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    start: int
    end: int


def _byte_offset(text, i):
    return len(text[:i].encode("utf-8"))


def _tokenize(text):
    toks = []
    i = 0
    n = len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            b = _byte_offset(text, i)
            raise ParseError(f"unexpected character {text[i]!r}", b, b + len(text[i].encode()),
                             expected={"number", "variable", "function", "(", "-"})
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), _byte_offset(text, start),
                         _byte_offset(text, m.end())))
        i = m.end()
    b = _byte_offset(text, n)
    toks.append(_Tok("end", "", b, b))
    return toks


# -- parser ----------------------------------------------------------------

_ATOM_START = frozenset({"number", "variable", "function", "(", "-"})


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0

    @property
    def cur(self):
        return self.toks[self.pos]

    def _is(self, text):
        return self.cur.kind == "op" and self.cur.text == text

    def _fail(self, message, expected, tok=None):
        tok = tok or self.cur
        raise ParseError(message, tok.start, tok.end, expected)

    def parse(self):
        if self.cur.kind == "end":
            self._fail("empty expression", _ATOM_START)
        node = self.expr()
        if self.cur.kind != "end":
            self._fail(f"unexpected token {self.cur.text!r}",
                       {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self.cur.text
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self._is("*") or self._is("/"):
            op = self.cur.text
            self.pos += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self._is("-"):
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self._is("^"):
            self.pos += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.cur
        if tok.kind == "num":
            self.pos += 1
            value = float(tok.text)
            if not math.isfinite(value):
                self._fail("numeric literal out of range", {"number"}, tok)
            return Num(value)
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.pos += 1
                if not self._is("("):
                    self._fail(f"expected '(' after {tok.text}", {"("})
                self.pos += 1
                arg = self.expr()
                if not self._is(")"):
                    self._fail("unbalanced parenthesis", {")"})
                self.pos += 1
                return Call(tok.text, arg)
            if tok.text in VARIABLES:
                self.pos += 1
                return Var(tok.text)
            self._fail(f"unknown identifier {tok.text!r}", {"variable", "function"}, tok)
        if self._is("("):
            self.pos += 1
            node = self.expr()
            if not self._is(")"):
                self._fail("unbalanced parenthesis", {")"})
            self.pos += 1
            return node
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        self._fail(f"unexpected {what}", _ATOM_START)


def parse(text: str) -> Expr:
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


# -- printer ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Num) and math.copysign(1, node.value) < 0:
        return 0
    return 5


def _fmt_num(v):
    if math.copysign(1, v) < 0:
        return f"(-{_fmt_num(-v)})"
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def to_string(node: Expr) -> str:
    """Minimal-parenthesis rendering that reparses to the same tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        return "-" + (inner if _prec(node.arg) >= 3 else f"({inner})")
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) < 5:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left}{node.op}{right}"


# -- evaluation ------------------------------------------------------------

def variables(node: Expr) -> frozenset:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, (Neg, Call)):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def evaluate(node: Expr, env: dict):
    """Evaluate over floats, numpy arrays or jets (same arithmetic for all)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name == "r" and "r" not in env:
            x, y, z = env["x"], env["y"], env["z"]
            return J.sqrt(x * x + y * y + z * z)
        try:
            return env[node.name]
        except KeyError:
            raise DimensionMismatch(f"variable {node.name!r} is not a chart coordinate") from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    if node.op == "^":
        b = evaluate(node.right, env)
        return J.power(a, b)
    b = evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if isinstance(b, J.Jet) or not np.any(np.asarray(b) == 0):
        return a / b
    raise J.DomainError("division by zero")


def _as_tree(expr):
    return parse(expr) if isinstance(expr, str) else expr


def compile_field(expr, dim: int) -> Callable:
    """Scalar field X -> Jet from an expression over the chart variables."""
    node = _as_tree(expr)
    names = J.CHART_VARIABLES[dim]
    used = variables(node)
    allowed = set(names) | ({"r"} if dim >= 3 else set())
    bad = used - allowed
    if bad:
        raise DimensionMismatch(
            f"variables {sorted(bad)} not available on a {dim}-dimensional chart")

    def field(X):
        env = {n: X[i] for i, n in enumerate(names)}
        out = evaluate(node, env)
        if isinstance(out, J.Jet):
            return out
        return J.constant(out, X.dim, with_hess=X.hess is not None)

    field.expr = node
    return field


def compile_array(exprs, dim: int) -> Callable:
    """Nested list of expressions -> callable X -> Jet array.

    Coordinates are bound once per call and the last result is reused when
    the same point jet is passed again (checks at one point share it).
    """
    names = J.CHART_VARIABLES[dim]
    flat, shape = [], []

    def walk(item, depth):
        if isinstance(item, (list, tuple)):
            if len(shape) <= depth:
                shape.append(len(item))
            for it in item:
                walk(it, depth + 1)
        else:
            flat.append(_as_tree(item))

    walk(exprs, 0)
    for node in flat:
        compile_field(node, dim)  # validates variables
    consts = [None if variables(n) else evaluate(n, {}) for n in flat]
    last = [None, None]

    def field(X):
        hit = last
        if hit[0] is X:
            return hit[1]
        env = {n: X[i] for i, n in enumerate(names)}
        hess = X.hess is not None
        vals = []
        for node, c in zip(flat, consts):
            if c is None:
                out = evaluate(node, env)
                if not isinstance(out, J.Jet):
                    out = J.constant(out, X.dim, with_hess=hess)
            else:
                out = c
            vals.append(out)
        res = _assemble(vals, tuple(shape), X.dim, hess)
        last[0], last[1] = X, res
        return res

    field.exprs = exprs
    return field


def _assemble(vals, shape, dim, hess):
    n = len(vals)
    val = np.empty(n)
    grad = np.zeros((n, dim))
    H = np.zeros((n, dim, dim)) if hess else None
    for i, v in enumerate(vals):
        if isinstance(v, J.Jet):
            val[i] = v.val
            grad[i] = v.grad
            if hess:
                if v.hess is None:
                    H = None
                    hess = False
                else:
                    H[i] = v.hess
        else:
            val[i] = v
    return J.Jet(val.reshape(shape), grad.reshape(shape + (dim,)),
                 None if H is None else H.reshape(shape + (dim, dim)))


# -- scenario documents ------------------------------------------------------

_REQUIRED = ("name", "dims", "metric", "map")


def _need(doc, key, kind):
    v = doc[key]
    if not isinstance(v, kind):
        raise SchemaError(f"field {key!r} has the wrong type")
    return v


def _check_expr_list(items, length, where):
    if not isinstance(items, list) or len(items) != length:
        raise SchemaError(f"{where} must be a list of {length} expressions")
    for it in items:
        if not isinstance(it, (str, int, float)) or isinstance(it, bool):
            raise SchemaError(f"{where} entries must be expression strings")
    return [str(it) for it in items]


def _metric_exprs(rows, dim, where):
    if not isinstance(rows, list) or len(rows) != dim:
        raise SchemaError(f"{where} must be a {dim}x{dim} matrix")
    mat = [_check_expr_list(r, dim, where) for r in rows]
    trees = [[parse(e) for e in row] for row in mat]
    for i in range(dim):
        for j in range(i):
            if trees[i][j] != trees[j][i]:
                raise SchemaError(f"{where} is not symmetric at entry ({i}, {j})")
    return trees


def scenario_from_json(doc: dict):
    """Build a zoo scenario from a parsed scenario document."""
    from . import zoo
    from .weyl import WeylStructure

    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a JSON object")
    for key in _REQUIRED:
        if key not in doc:
            raise SchemaError(f"missing field {key!r}")
    known = {"name", "dims", "metric", "lee", "map", "gauge", "k", "box",
             "excluded_radius", "singular_points", "checks", "tol", "target", "orientation"}
    extra = set(doc) - known
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}")
    name = _need(doc, "name", str)
    dims = _need(doc, "dims", list)
    if len(dims) != 2 or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise SchemaError("dims must be [source_dim, target_dim]")
    m, n = dims
    if not (1 <= n < m <= 4):
        raise SchemaError("dims must satisfy 1 <= target < source <= 4")
    metric = _metric_exprs(doc["metric"], m, "metric")
    lee = [parse(e) for e in _check_expr_list(doc.get("lee", ["0"] * m), m, "lee")]
    phi = [parse(e) for e in _check_expr_list(doc["map"], n, "map")]
    target = doc.get("target", {})
    if not isinstance(target, dict):
        raise SchemaError("target must be an object")
    eye = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    tmetric = _metric_exprs(target.get("metric", eye), n, "target.metric")
    tlee = [parse(e) for e in _check_expr_list(target.get("lee", ["0"] * n), n, "target.lee")]
    orientation = doc.get("orientation", [1, 1])
    if (not isinstance(orientation, list) or len(orientation) != 2
            or any(o not in (1, -1) for o in orientation)):
        raise SchemaError("orientation must be [±1, ±1]")
    box = doc.get("box", [[-1.0, 1.0]] * m)
    if (not isinstance(box, list) or len(box) != m
            or any(not isinstance(b, list) or len(b) != 2 for b in box)):
        raise SchemaError("box must list one [lo, hi] interval per source axis")
    excluded = doc.get("excluded_radius")
    if excluded is not None and not isinstance(excluded, (int, float)):
        raise SchemaError("excluded_radius must be a number")
    singular = doc.get("singular_points", [])
    if (not isinstance(singular, list)
            or any(not isinstance(p, list) or not 1 <= len(p) <= m for p in singular)):
        raise SchemaError("singular_points must list coordinate prefixes")
    tol = doc.get("tol", 1e-9)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        raise SchemaError("tol must be a positive number")
    checks = doc.get("checks")
    if checks is not None and (not isinstance(checks, list)
                               or not all(isinstance(c, str) for c in checks)):
        raise SchemaError("checks must be a list of check names")
    try:
        chart = J.Chart(m, tuple(tuple(b) for b in box), excluded_radius=excluded,
                        singular_points=tuple(tuple(p) for p in singular))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    source = WeylStructure.from_expressions(metric, lee, orientation=orientation[0])
    tgt = WeylStructure.from_expressions(tmetric, tlee, orientation=orientation[1])
    phi_map = compile_array(phi, m)

    k_field = None
    if "k" in doc:
        k_dim = m if (m, n) != (4, 3) else n
        k_field = compile_field(parse(str(doc["k"])), k_dim)
    gauge_pair = None
    if "gauge" in doc:
        gdoc = doc["gauge"]
        if not isinstance(gdoc, dict) or "a" not in gdoc or "gamma" not in gdoc:
            raise SchemaError("gauge must be an object with 'a' and 'gamma'")
        from .gauge import GaugePair
        gauge_pair = GaugePair.from_expressions(
            parse(str(gdoc["a"])), [parse(e) for e in _check_expr_list(gdoc["gamma"], n, "gauge.gamma")])
    scenario = zoo.Scenario(
        name=name, chart=chart, source=source, target=tgt, phi=phi_map, k=k_field,
        gauge=gauge_pair, tol=float(tol),
        checks=tuple(checks) if checks is not None else None,
        expected={},
        doc=json.loads(json.dumps(doc)),
    )
    zoo.probe(scenario)
    return scenario


def load_scenario(source):
    """Load a scenario from a path, a JSON string or an already-parsed dict."""
    if isinstance(source, dict):
        return scenario_from_json(source)
    text = str(source)
    if not text.lstrip().startswith("{"):
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return scenario_from_json(doc)
