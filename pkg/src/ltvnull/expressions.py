"""Closed-form coefficient expressions in ``t`` for continuous-time systems.

Parsing, differentiation and exact evaluation are delegated to sympy; this
module only restricts the grammar to rationals, ``t``, ``+ - * /``, integer
powers, ``sin``, ``cos`` and ``exp``.
"""

from __future__ import annotations

from numbers import Integral, Real

import sympy as sp
from sympy.parsing.sympy_parser import (
    auto_number,
    convert_xor,
    factorial_notation,
    parse_expr,
    rationalize,
    standard_transformations,
)

t = sp.Symbol("t", real=True)

_NAMES = {"t": t, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp}
_TRANSFORMS = tuple(x for x in standard_transformations if x is not factorial_notation) + (
    convert_xor, rationalize)


class ExpressionError(ValueError):
    pass


def _check(expr: sp.Expr, source: str) -> None:
    for node in sp.preorder_traversal(expr):
        if isinstance(node, sp.Symbol):
            if node != t:
                raise ExpressionError(f"unknown symbol {node} in {source!r}")
        elif isinstance(node, sp.Pow):
            if not node.exp.is_Integer:
                raise ExpressionError(f"only integer powers are allowed: {source!r}")
        elif node.is_Number:
            if not node.is_Rational:
                raise ExpressionError(f"non-rational constant in {source!r}")
        elif not isinstance(node, (sp.Add, sp.Mul, sp.sin, sp.cos, sp.exp)):
            raise ExpressionError(f"{type(node).__name__} is not in the grammar: {source!r}")


def parse(source) -> sp.Expr:
    """Parse one coefficient; numbers and sympy expressions pass through."""
    if isinstance(source, sp.Expr):
        expr = source
    elif isinstance(source, Integral):
        expr = sp.Integer(int(source))
    elif isinstance(source, Real):
        expr = sp.Rational(repr(float(source)))
    else:
        text = str(source).strip()
        if not text:
            raise ExpressionError("empty expression")
        try:
            expr = parse_expr(text, local_dict=dict(_NAMES), global_dict={"Integer": sp.Integer,
                              "Rational": sp.Rational, "Float": sp.Float, "Symbol": sp.Symbol},
                              transformations=_TRANSFORMS + (auto_number,))
        except Exception as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc}") from exc
    _check(expr, str(source))
    return expr


def is_polynomial(expr: sp.Expr) -> bool:
    return expr.is_polynomial(t)


def to_text(expr: sp.Expr) -> str:
    return sp.sstr(expr).replace("**", "^")
