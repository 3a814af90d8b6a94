"""Safe parsing of potential expressions such as ``"-(x+1)/2*cos(x*(x-2)/2)"``.

Expressions are parsed with :mod:`ast` and only a small whitelist of node
types, the variable ``x``, the constants ``pi`` and ``e`` and a fixed set of
numpy functions is accepted. ``^`` is read as exponentiation.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

from .errors import EvalError, ParseError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "sech": lambda z: 1.0 / np.cosh(z),
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": np.pi, "e": np.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARY = {ast.UAdd: np.positive, ast.USub: np.negative}


def _position(node) -> int:
    return getattr(node, "col_offset", 0)


def _compile(node, src: str) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, src)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"unsupported literal {node.value!r}", _position(node))
        value = float(node.value)
        return lambda x: value
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in CONSTANTS:
            value = CONSTANTS[node.id]
            return lambda x: value
        raise ParseError(f"unknown name {node.id!r}", _position(node))
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise ParseError(f"unsupported operator {type(node.op).__name__}", _position(node))
        left, right = _compile(node.left, src), _compile(node.right, src)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.UnaryOp):
        op = _UNARY.get(type(node.op))
        if op is None:
            raise ParseError(f"unsupported operator {type(node.op).__name__}", _position(node))
        arg = _compile(node.operand, src)
        return lambda x: op(arg(x))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            name = getattr(node.func, "id", ast.unparse(node.func))
            raise ParseError(f"unknown function {name!r}", _position(node))
        if node.keywords or len(node.args) != 1:
            raise ParseError(f"{node.func.id} takes exactly one argument", _position(node))
        fn, arg = FUNCTIONS[node.func.id], _compile(node.args[0], src)
        return lambda x: fn(arg(x))
    raise ParseError(f"unsupported syntax {type(node).__name__}", _position(node))


def parse_expression(src: str) -> Callable:
    """Compile ``src`` into a vectorised function of ``x``.

    The returned callable maps an array ``x`` to an array of the same shape
    and raises :class:`EvalError` when the result is not finite.

    Raises:
        ParseError: on syntax errors or anything outside the whitelist; the
            exception carries the 0-based character offset.
    """
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0)
    lead = len(src) - len(src.lstrip())
    text = src.strip().replace("^", "**")

    def original(col: int) -> int:
        # undo the leading strip and the one-character growth of each '^'
        k = 0
        for i, ch in enumerate(src.strip()):
            if k >= col:
                return lead + i
            k += 2 if ch == "^" else 1
        return lead + len(src.strip())

    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"syntax error: {exc.msg}", original(max((exc.offset or 1) - 1, 0))) from exc
    try:
        body = _compile(tree, src)
    except ParseError as exc:
        raise ParseError(str(exc).rsplit(" (at column", 1)[0], original(exc.position or 0)) from None

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.broadcast_to(np.asarray(body(x), dtype=float), x.shape)
        if not np.all(np.isfinite(out)):
            bad = x[~np.isfinite(out)] if out.ndim else x
            raise EvalError(f"{src!r} is not finite at x = {np.ravel(bad)[0]:.6g}")
        return out

    evaluate.source = src
    return evaluate
