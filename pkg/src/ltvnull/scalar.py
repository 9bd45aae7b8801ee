"""Dual-mode scalars and the small amount of linear algebra built on them.

Every array in the package is either a ``float64`` numpy array (float mode)
or an ``object`` array of :class:`fractions.Fraction` (rational mode).  The
:class:`ScalarPolicy` carried by a system decides which, and owns the zero
tolerance used for rank and vanishing decisions in float mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

RATIONAL = "rational"
FLOAT = "float"


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix that must be invertible is not (under the policy)."""


def parse_number(value, mode: str = RATIONAL):
    """Turn an int, float, decimal string or ``"p/q"`` string into a scalar.

    Strings are parsed exactly in rational mode, so ``"0.1"`` becomes 1/10.
    Python floats are converted with ``Fraction(float)``, i.e. exactly to
    their binary value.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if mode == RATIONAL:
        if isinstance(value, str):
            return Fraction(value.strip())
        if isinstance(value, (Rational, float, np.integer, np.floating)):
            return Fraction(value)
        raise TypeError(f"cannot interpret {value!r} as a number")
    if mode == FLOAT:
        if isinstance(value, str):
            return float(Fraction(value.strip()))
        return float(value)
    raise ValueError(f"unknown scalar mode {mode!r}")


def format_number(value) -> str:
    """Locale-free text for a scalar: ``"p/q"`` for rationals, ``repr`` for floats."""
    if isinstance(value, (Fraction, int, np.integer)):
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


@dataclass(frozen=True)
class ScalarPolicy:
    """Arithmetic mode plus the relative zero tolerance for float mode."""

    mode: str = RATIONAL
    tol: float = 1e-10

    def __post_init__(self):
        if self.mode not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown scalar mode {self.mode!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    @property
    def exact(self) -> bool:
        return self.mode == RATIONAL

    def scalar(self, value):
        return parse_number(value, self.mode)

    def array(self, data) -> np.ndarray:
        """Coerce nested sequences (or an array) to this policy's array type."""
        if self.exact:
            arr = np.asarray(data, dtype=object)
            out = np.empty(arr.shape, dtype=object)
            for idx, v in np.ndenumerate(arr):
                out[idx] = parse_number(v, RATIONAL)
            return out
        if isinstance(data, np.ndarray) and data.dtype == object:
            return np.vectorize(float, otypes=[float])(data)
        arr = np.asarray(data)
        if arr.dtype.kind in "US":
            return np.vectorize(lambda s: parse_number(str(s), FLOAT), otypes=[float])(arr)
        return arr.astype(float)

    def zeros(self, shape) -> np.ndarray:
        if self.exact:
            out = np.empty(shape, dtype=object)
            out.fill(Fraction(0))
            return out
        return np.zeros(shape)

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = self.scalar(1)
        return out

    def is_zero(self, value, scale=1.0) -> bool:
        """Exact test in rational mode; ``|value| <= tol * scale`` in float mode."""
        if self.exact:
            return value == 0
        return abs(float(value)) <= self.tol * max(float(scale), np.finfo(float).tiny)


def policy_of(arr: np.ndarray, tol: float = 1e-10) -> ScalarPolicy:
    return ScalarPolicy(RATIONAL if arr.dtype == object else FLOAT, tol)


def to_float(arr) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr)
    return arr.astype(float)


def _check_square(M: np.ndarray) -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M.shape[0]


def _exact_eliminate(M: np.ndarray, rhs: np.ndarray | None = None):
    """Gauss-Jordan elimination over the rationals.

    Returns ``(det, solution)``; ``solution`` is None when ``rhs`` is None or
    the matrix is singular.
    """
    n = _check_square(M)
    a = [[Fraction(x) for x in row] for row in M]
    r = None
    if rhs is not None:
        r = [[Fraction(x) for x in row] for row in np.asarray(rhs, dtype=object).reshape(n, -1)]
    det = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if a[i][col] != 0), None)
        if pivot is None:
            return Fraction(0), None
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            if r is not None:
                r[col], r[pivot] = r[pivot], r[col]
            det = -det
        p = a[col][col]
        det *= p
        inv_p = 1 / p
        a[col] = [x * inv_p for x in a[col]]
        if r is not None:
            r[col] = [x * inv_p for x in r[col]]
        for i in range(n):
            f = a[i][col]
            if i == col or f == 0:
                continue
            a[i] = [x - f * y for x, y in zip(a[i], a[col])]
            if r is not None:
                r[i] = [x - f * y for x, y in zip(r[i], r[col])]
    if r is None:
        return det, None
    out = np.empty((n, len(r[0])), dtype=object)
    for i in range(n):
        for j, v in enumerate(r[i]):
            out[i, j] = v
    return det, out


def det(M: np.ndarray):
    """Determinant; exact for object arrays."""
    M = np.asarray(M)
    n = _check_square(M)
    if n == 0:
        return Fraction(1) if M.dtype == object else 1.0
    if M.dtype == object:
        return _exact_eliminate(M)[0]
    return float(np.linalg.det(M))


def inv(M: np.ndarray, policy: ScalarPolicy | None = None) -> np.ndarray:
    """Inverse, raising :class:`SingularMatrixError` on a singular input."""
    M = np.asarray(M)
    n = _check_square(M)
    policy = policy or policy_of(M)
    if M.dtype == object:
        d, out = _exact_eliminate(M, ScalarPolicy(RATIONAL).eye(n))
        if d == 0:
            raise SingularMatrixError("matrix is singular")
        return out
    ok, _ = nonsingular(M, policy)
    if not ok:
        raise SingularMatrixError("matrix is numerically singular")
    return np.linalg.inv(M)


def solve(M: np.ndarray, rhs: np.ndarray, policy: ScalarPolicy | None = None) -> np.ndarray:
    M = np.asarray(M)
    policy = policy or policy_of(M)
    rhs = np.asarray(rhs)
    if M.dtype == object:
        d, out = _exact_eliminate(M, rhs)
        if d == 0:
            raise SingularMatrixError("matrix is singular")
        return out.reshape(rhs.shape)
    ok, _ = nonsingular(M, policy)
    if not ok:
        raise SingularMatrixError("matrix is numerically singular")
    return np.linalg.solve(M, rhs.astype(float))


def nonsingular(M: np.ndarray, policy: ScalarPolicy | None = None):
    """Rank decision with its diagnostic.

    Rational mode returns ``(det != 0, det)``.  Float mode returns
    ``(s_min >= tol * s_max, s_min)`` from the singular values.
    """
    M = np.asarray(M)
    policy = policy or policy_of(M)
    _check_square(M)
    if M.dtype == object:
        d = det(M)
        return d != 0, d
    s = np.linalg.svd(to_float(M), compute_uv=False)
    if s.size == 0:
        return True, 1.0
    return bool(s[-1] >= policy.tol * s[0] and s[0] > 0), float(s[-1])


def min_singular_value(M: np.ndarray) -> float:
    s = np.linalg.svd(to_float(M), compute_uv=False)
    return float(s[-1])


def matrix_rank(M: np.ndarray, policy: ScalarPolicy | None = None) -> int:
    M = np.asarray(M)
    policy = policy or policy_of(M)
    if M.dtype == object:
        rows = [[Fraction(x) for x in row] for row in M]
        rank, ncols = 0, M.shape[1]
        for col in range(ncols):
            pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
            if pivot is None:
                continue
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            for i in range(rank + 1, len(rows)):
                f = rows[i][col] / rows[rank][col]
                if f:
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
            rank += 1
        return rank
    s = np.linalg.svd(to_float(M), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > policy.tol * s[0]))
