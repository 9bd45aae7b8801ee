"""Affine expressions ``const + sum_i coeff_i * delta_i`` over free variables.

Coefficients live in a plain dict keyed by variable index.  Exact zeros are
never stored; in float mode :func:`dot` additionally prunes coefficients that
are negligible relative to the magnitude of the terms that produced them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .scalar import ScalarPolicy


class AffineExpr:
    __slots__ = ("const", "coeffs")

    def __init__(self, const=Fraction(0), coeffs: Mapping | None = None):
        self.const = const
        self.coeffs = {i: v for i, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def variable(cls, index: int, one=Fraction(1)) -> "AffineExpr":
        return cls(one * 0, {index: one})

    @classmethod
    def constant(cls, value) -> "AffineExpr":
        return cls(value)

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        coeffs = dict(self.coeffs)
        for i, v in other.coeffs.items():
            coeffs[i] = coeffs.get(i, 0) + v
        return AffineExpr(self.const + other.const, coeffs)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.const, {i: -v for i, v in self.coeffs.items()})

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (-other)

    def scale(self, factor) -> "AffineExpr":
        if factor == 0:
            return AffineExpr(self.const * 0)
        return AffineExpr(self.const * factor, {i: v * factor for i, v in self.coeffs.items()})

    __mul__ = scale
    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, AffineExpr):
            return NotImplemented
        return self.const == other.const and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.const, frozenset(self.coeffs.items())))

    def __repr__(self):
        parts = [] if self.const == 0 and self.coeffs else [str(self.const)]
        parts += [f"{v}*d{i}" for i, v in sorted(self.coeffs.items())]
        return "AffineExpr(" + " + ".join(parts) + ")"

    @property
    def variables(self) -> frozenset:
        return frozenset(self.coeffs)

    def magnitude(self) -> float:
        """Largest absolute value among the constant and the coefficients."""
        vals = [abs(float(self.const))] + [abs(float(v)) for v in self.coeffs.values()]
        return max(vals)

    def is_zero(self) -> bool:
        return self.const == 0 and not self.coeffs

    def bare_variable(self) -> int | None:
        """Index ``i`` if the expression is exactly ``delta_i``, else None."""
        if self.const == 0 and len(self.coeffs) == 1:
            (i, v), = self.coeffs.items()
            if v == 1:
                return i
        return None

    def evaluate(self, assignment: Mapping):
        total = self.const
        for i, v in self.coeffs.items():
            total = total + v * assignment[i]
        return total

    def pruned(self, threshold: float) -> "AffineExpr":
        const = self.const if abs(self.const) > threshold else self.const * 0
        return AffineExpr(const, {i: v for i, v in self.coeffs.items() if abs(v) > threshold})


def dot(row, exprs, policy: ScalarPolicy) -> AffineExpr:
    """``sum_j row[j] * exprs[j]``; float mode drops terms below ``tol * scale``."""
    out = AffineExpr(policy.scalar(0))
    scale = 0.0
    for r, e in zip(row, exprs):
        if r == 0:
            continue
        out = out + e.scale(r)
        if not policy.exact:
            scale += abs(float(r)) * e.magnitude()
    if not policy.exact:
        out = out.pruned(policy.tol * scale)
    return out
