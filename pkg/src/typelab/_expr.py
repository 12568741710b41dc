"""Tiny safe evaluator for user-supplied log-weight expressions in ``t``."""
from __future__ import annotations

import ast
import operator

import numpy as np

_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "log1p": np.log1p,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    pass


def compile_expression(text: str):
    """Return a vectorized callable ``f(t)`` for an arithmetic expression."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
    _validate(tree.body, text)

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(tree.body, t)
        return np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy()

    return evaluate


def _validate(node, text):
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, text)
        _validate(node.right, text)
    elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        _validate(node.operand, text)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or node.keywords:
            raise ExpressionError(f"unsupported call in {text!r}")
        for arg in node.args:
            _validate(arg, text)
    elif isinstance(node, ast.Name):
        if node.id != "t" and node.id not in _CONSTS:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    else:
        raise ExpressionError(f"unsupported syntax in {text!r}")


def _eval(node, t):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, t), _eval(node.right, t))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, t))
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](*(_eval(a, t) for a in node.args))
    if isinstance(node, ast.Name):
        return t if node.id == "t" else _CONSTS[node.id]
    return float(node.value)
