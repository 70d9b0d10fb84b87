"""Small arithmetic grammar for H and phi: numbers, x, y, r, + - * / ^, sin cos exp sqrt."""

from __future__ import annotations

import ast
import operator

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_VARS = ("x", "y", "r")


class ExpressionError(ValueError):
    pass


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        _check(node.operand)
    elif isinstance(node, ast.Constant) and type(node.value) in (int, float):
        pass
    elif isinstance(node, ast.Name) and node.id in _VARS:
        pass
    elif (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        _check(node.args[0])
    else:
        what = type(node).__name__
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            what = f"function {node.func.id!r}"
        elif isinstance(node, ast.Name):
            what = f"name {node.id!r}"
        raise ExpressionError(f"unsupported element: {what}")


def _eval(node, env):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, env))
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    return _FUNCS[node.func.id](_eval(node.args[0], env))


def parse_expression(text):
    """Compile ``text`` into a vectorized f(x, y)."""
    src = str(text).strip().replace("^", "**")
    if not src:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree)
    body = tree.body

    def f(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        env = {"x": x, "y": y, "r": np.hypot(x, y)}
        with np.errstate(all="ignore"):
            out = _eval(body, env)
        return np.broadcast_to(np.asarray(out, float), np.broadcast(x, y).shape).copy()

    f.source = str(text)
    return f
