"""A tiny arithmetic grammar for closed-form coefficient tracks.

Accepted syntax is a subset of Python expressions::

    numbers, complex literals (0.5j), the names t, i, j, pi, e
    binary + - * / **, unary + -, parentheses
    calls: sin cos tan exp log sqrt sinh cosh tanh

Anything else (attribute access, subscripts, other names, keyword
arguments) is rejected when the expression is parsed, so evaluating a
validated expression cannot reach arbitrary Python.
"""

from __future__ import annotations

import ast
from functools import lru_cache
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
}
CONSTANTS: dict[str, complex | float] = {"pi": np.pi, "e": np.e, "i": 1j, "j": 1j}
VARIABLE = "t"

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


class ExpressionError(ValueError):
    """Expression text outside the accepted grammar."""


def _check(node: ast.AST, text: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, text)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float, complex)):
            raise ExpressionError(f"unsupported literal {node.value!r} in {text!r}")
    elif isinstance(node, ast.Name):
        if node.id != VARIABLE and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {text!r}")
        _check(node.left, text)
        _check(node.right, text)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _UNARYOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {text!r}")
        _check(node.operand, text)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {text!r}")
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(f"functions take exactly one positional argument: {text!r}")
        _check(node.args[0], text)
    else:
        raise ExpressionError(f"syntax element {type(node).__name__} not allowed in {text!r}")


@lru_cache(maxsize=256)
def compile_expression(text: str) -> Callable[[np.ndarray | float], np.ndarray | complex]:
    """Validate ``text`` and return a vectorised evaluator ``f(t)``.

    Raises:
        ExpressionError: on a syntax error or a construct outside the grammar.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree, text)
    code = compile(tree, "<track>", "eval")
    namespace = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def evaluate(t):
        t_arr = np.asarray(t, dtype=float)
        value = eval(code, namespace, {VARIABLE: t_arr})  # noqa: S307 - grammar checked above
        return np.broadcast_to(np.asarray(value, dtype=complex), t_arr.shape).copy()

    return evaluate
