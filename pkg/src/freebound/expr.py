"""A small arithmetic expression language for sources and boundary data.

Grammar: numbers, the variables ``x``, ``y`` and ``r`` (= |x|), the
operators ``+ - * / ^`` and the functions ``min``, ``max``, ``pos``
(positive part), ``abs`` and ``powf``.  Python's parser does the heavy
lifting after ``^`` is mapped to ``**``; a whitelist walk then rejects
anything else.

Expressions must evaluate to finite values everywhere on the domain, so:

* a divisor must be a nonzero constant;
* an exponent must be a constant; a fractional exponent needs a base that
  is nonnegative by construction (``pos``, ``abs``, ``r``, even powers, ...)
  and a negative exponent needs a positive constant base.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

VARIABLES = ("x", "y", "r")
FUNCTIONS = {
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "pos": (1, lambda t: np.maximum(t, 0.0)),
    "abs": (1, np.abs),
    "powf": (2, np.power),
}


class ExpressionError(ValueError):
    pass


def _constant(node) -> float | None:
    """Value of a constant subtree, or None if it depends on a variable."""
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.UnaryOp):
        val = _constant(node.operand)
        return None if val is None else (val if isinstance(node.op, ast.UAdd) else -val)
    if isinstance(node, ast.BinOp):
        a, b = _constant(node.left), _constant(node.right)
        if a is None or b is None:
            return None
        try:
            return float(_BINOPS[type(node.op)](a, b))
        except (ZeroDivisionError, OverflowError, ValueError):
            return None
    if isinstance(node, ast.Call):
        args = [_constant(a) for a in node.args]
        if any(a is None for a in args):
            return None
        with np.errstate(all="ignore"):
            return float(FUNCTIONS[node.func.id][1](*args))
    return None


def _nonnegative(node) -> bool:
    """Conservative proof that a subtree is >= 0 everywhere."""
    c = _constant(node)
    if c is not None:
        return c >= 0
    if isinstance(node, ast.Name):
        return node.id == "r"
    if isinstance(node, ast.Call):
        name = node.func.id
        if name in ("pos", "abs"):
            return True
        if name == "max":
            return any(_nonnegative(a) for a in node.args)
        if name == "min":
            return all(_nonnegative(a) for a in node.args)
        if name == "powf":
            return _nonnegative(node.args[0])
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            e = _constant(node.right)
            return _nonnegative(node.left) or (e is not None and e == int(e) and int(e) % 2 == 0)
        if isinstance(node.op, (ast.Add, ast.Mult, ast.Div)):
            return _nonnegative(node.left) and _nonnegative(node.right)
    return False


_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _check_power(base, exponent) -> None:
    e = _constant(exponent)
    if e is None:
        raise ExpressionError("exponents must be constants")
    if e != int(e) and not _nonnegative(base):
        raise ExpressionError("a fractional power needs a base that is nonnegative by construction, e.g. pos(...)")
    if e < 0:
        b = _constant(base)
        if b is None or b <= 0:
            raise ExpressionError("a negative power needs a positive constant base")


def _validate(node) -> None:
    if isinstance(node, ast.Expression):
        return _validate(node.body)
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        return
    if isinstance(node, ast.Name):
        if node.id not in VARIABLES:
            raise ExpressionError(f"unknown variable {node.id!r}; use x, y or r")
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        return _validate(node.operand)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left)
        _validate(node.right)
        if isinstance(node.op, ast.Div):
            d = _constant(node.right)
            if d is None or d == 0:
                raise ExpressionError("divisors must be nonzero constants")
        if isinstance(node.op, ast.Pow):
            _check_power(node.left, node.right)
        return
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in FUNCTIONS:
            raise ExpressionError(f"unknown function {name!r}")
        arity = FUNCTIONS[name][0]
        if len(node.args) != arity:
            raise ExpressionError(f"{name} takes {arity} argument(s)")
        for a in node.args:
            _validate(a)
        if name == "powf":
            _check_power(node.args[0], node.args[1])
        return
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:40]}")


def _evaluate(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        val = _evaluate(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow) and isinstance(node.left, ast.Name) and node.left.id == "r":
            e = _constant(node.right)
            if e is not None and e == int(e) and int(e) % 2 == 0:
                # even powers of r straight from x² + y², without the square root
                return (env["x"] ** 2 + env["y"] ** 2) ** (int(e) // 2)
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    return FUNCTIONS[node.func.id][1](*(_evaluate(a, env) for a in node.args))


@dataclass(frozen=True)
class Expression:
    source: str
    tree: ast.Expression

    def __call__(self, x, y=None):
        """Vectorized evaluation; ``y`` defaults to 0 for one-dimensional grids."""
        x = np.asarray(x, dtype=float)
        y = np.zeros_like(x) if y is None else np.asarray(y, dtype=float)
        env = {"x": x, "y": y, "r": np.sqrt(x * x + y * y)}
        with np.errstate(all="ignore"):
            out = _evaluate(self.tree.body, env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape).copy()

    @property
    def constant(self) -> float | None:
        return _constant(self.tree.body)

    def __str__(self):
        return self.source

    def __eq__(self, other):
        return isinstance(other, Expression) and ast.dump(self.tree) == ast.dump(other.tree)

    def __hash__(self):
        return hash(ast.dump(self.tree))


def parse_expression(text: str) -> Expression:
    src = text.strip()
    if not src:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(src.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error in {src!r}: {exc.msg}") from None
    _validate(tree)
    return Expression(src, tree)


def eval_expression(expr: Expression | str, point) -> float:
    if isinstance(expr, str):
        expr = parse_expression(expr)
    point = np.atleast_1d(np.asarray(point, dtype=float))
    y = point[1] if len(point) > 1 else 0.0
    return float(expr(point[0], y))


def parse_number(text: str) -> float:
    """A constant expression such as ``1/64`` or ``1e-3``."""
    expr = parse_expression(text)
    val = expr.constant
    if val is None or not math.isfinite(val):
        raise ExpressionError(f"{text!r} is not a finite constant")
    return val
