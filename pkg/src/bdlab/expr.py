"""Closed-form descriptors for coefficient fields and charts.

A descriptor is a formula over the variables ``x1, x2, t, theta, r`` and the
constant ``pi`` built from numbers, ``+ - * /``, ``**`` and the functions
``sin, cos, exp, sqrt``. The text is parsed with :mod:`ast` and every node is
checked against that whitelist before compilation, so configuration files
never reach a general interpreter. Symbolic derivatives come from sympy.
"""
from __future__ import annotations

import ast
from functools import cached_property

import numpy as np
import sympy

__all__ = ["Expression", "ExpressionError", "as_field"]

VARIABLES = ("x1", "x2", "t", "theta", "r")
CONSTANTS = {"pi": np.pi}
FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Constant,
    ast.Name,
    ast.Load,
    ast.Call,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


class ExpressionError(ValueError):
    """Raised for descriptors outside the grammar."""


def _validate(tree: ast.AST, text: str) -> None:
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(f"{text!r}: construct {type(node).__name__} is not allowed")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"{text!r}: only numeric constants are allowed")
        if isinstance(node, ast.Constant) and isinstance(node.value, bool):
            raise ExpressionError(f"{text!r}: only numeric constants are allowed")
        if isinstance(node, ast.Name) and node.id not in VARIABLES and node.id not in CONSTANTS and node.id not in FUNCTIONS:
            raise ExpressionError(f"{text!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"{text!r}: only {sorted(FUNCTIONS)} may be called")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{text!r}: functions take exactly one argument")
    # function names may only appear in call position
    callees = {id(node.func) for node in ast.walk(tree) if isinstance(node, ast.Call)}
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id in FUNCTIONS and id(node) not in callees:
            raise ExpressionError(f"{text!r}: {node.id} must be called")


class Expression:
    """Vectorised closed-form field ``g(x1, x2, t)``.

    Parameters
    ----------
    text : str or float
        Formula in the descriptor grammar.

    Examples
    --------
    >>> g = Expression("exp(-t) * cos(theta)")
    >>> float(g(1.0, 0.0, 0.0))
    1.0
    """

    def __init__(self, text: str | float | int):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(float(text))
        text = str(text).strip()
        if not text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"{text!r}: {exc.msg}") from None
        _validate(tree, text)
        self.text = text
        self._code = compile(tree, "<descriptor>", "eval")
        self._names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def __str__(self) -> str:
        return self.text

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and other.text == self.text

    def __hash__(self) -> int:
        return hash(self.text)

    @property
    def variables(self) -> set[str]:
        return self._names & set(VARIABLES)

    @property
    def is_constant(self) -> bool:
        return not self.variables

    @property
    def depends_on_time(self) -> bool:
        return "t" in self._names

    def __call__(self, x1=0.0, x2=0.0, t=0.0) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        t = np.asarray(t, dtype=float)
        env = dict(FUNCTIONS)
        env.update(CONSTANTS)
        env.update(x1=x1, x2=x2, t=t, theta=np.arctan2(x2, x1), r=np.hypot(x1, x2))
        with np.errstate(all="ignore"):
            out = eval(self._code, {"__builtins__": {}}, env)
        shape = np.broadcast_shapes(x1.shape, x2.shape, t.shape)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    @cached_property
    def _sym(self) -> sympy.Expr:
        loc = {v: sympy.Symbol(v, real=True) for v in VARIABLES}
        loc.update(pi=sympy.pi, sin=sympy.sin, cos=sympy.cos, exp=sympy.exp, sqrt=sympy.sqrt)
        return sympy.sympify(self.text, locals=loc)

    def derivative(self, var: str) -> "_SymbolicField":
        """Symbolic partial derivative with respect to one of the grammar variables."""
        if var not in VARIABLES:
            raise ExpressionError(f"cannot differentiate with respect to {var!r}")
        return _SymbolicField(sympy.diff(self._sym, sympy.Symbol(var, real=True)))


class _SymbolicField:
    """Numerical evaluation of a sympy expression with the descriptor calling convention."""

    def __init__(self, expr: sympy.Expr):
        self.expr = expr
        syms = [sympy.Symbol(v, real=True) for v in VARIABLES]
        self._fn = sympy.lambdify(syms, expr, modules="numpy")
        self.text = str(expr)

    def __call__(self, x1=0.0, x2=0.0, t=0.0) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x1.shape, x2.shape, t.shape)
        with np.errstate(all="ignore"):
            out = self._fn(x1, x2, t, np.arctan2(x2, x1), np.hypot(x1, x2))
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    @property
    def depends_on_time(self) -> bool:
        return sympy.Symbol("t", real=True) in self.expr.free_symbols


def as_field(value):
    """Coerce a number, descriptor text or callable ``g(x1, x2, t)`` to a callable field."""
    if isinstance(value, (Expression, _SymbolicField)):
        return value
    if isinstance(value, str):
        return Expression(value)
    if isinstance(value, (int, float, np.floating)) and not isinstance(value, bool):
        return Expression(float(value))
    if callable(value):
        return value
    raise TypeError(f"cannot interpret {value!r} as a field")
