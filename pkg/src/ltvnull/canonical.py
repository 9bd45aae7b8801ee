"""Time-varying controller canonical form and algebraic equivalence.

A system is canonical when every ``A_k`` is a companion matrix (ones on the
superdiagonal, coefficients in the last row) and every ``b_k`` is ``e_n``.
Every completely controllable system is equivalent to one, through
``T_k = Wc_{k-1} W_{k-1}^{-1}`` where ``W`` and ``Wc`` are the controllability
matrices of the original and of the canonical system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm

import numpy as np

from .scalar import ScalarPolicy, SingularMatrixError, det, inv, nonsingular, to_float
from .system import (
    IndexOutOfRange,
    LtvSystem,
    adjugate,
    controllability_matrix,
)


class NotControllableError(SingularMatrixError):
    """A controllability matrix needed by the transform is singular."""

    def __init__(self, k, message=None):
        self.k = k
        super().__init__(message or f"controllability matrix W_{k} is singular")


class IllConditionedError(NotControllableError):
    pass


@dataclass(frozen=True, eq=False)
class EquivalenceTransform:
    """Invertible ``T_k`` over ``[k_min, k_max]``, optionally periodic."""

    k_min: int
    k_max: int
    T: dict
    period: int | None = None
    policy: ScalarPolicy = field(default_factory=ScalarPolicy)
    _inverse: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.period is not None and self.period != self.k_max - self.k_min + 1:
            raise ValueError("a periodic transform must hold exactly one period")
        T = {}
        for k in range(self.k_min, self.k_max + 1):
            Tk = self.policy.array(self.T[k])
            ok, _ = nonsingular(Tk, self.policy)
            if not ok:
                raise SingularMatrixError(f"T_{k} is singular")
            Tk.setflags(write=False)
            T[k] = Tk
        object.__setattr__(self, "T", T)

    @classmethod
    def identity(cls, n: int, k_min: int, k_max: int, period=None, policy=None):
        policy = policy or ScalarPolicy()
        return cls(k_min, k_max, {k: policy.eye(n) for k in range(k_min, k_max + 1)},
                   period, policy)

    def covers(self, k: int) -> bool:
        return self.period is not None or self.k_min <= k <= self.k_max

    def resolve(self, k: int) -> int:
        if self.period is not None:
            return self.k_min + (k - self.k_min) % self.period
        if not self.k_min <= k <= self.k_max:
            raise IndexOutOfRange(f"transform has no T_{k}")
        return k

    def at(self, k: int) -> np.ndarray:
        return self.T[self.resolve(k)]

    def inverse_at(self, k: int) -> np.ndarray:
        r = self.resolve(k)
        if r not in self._inverse:
            self._inverse[r] = inv(self.T[r], self.policy)
        return self._inverse[r]

    def inverse(self) -> "EquivalenceTransform":
        return EquivalenceTransform(self.k_min, self.k_max,
                                    {k: self.inverse_at(k) for k in self.T},
                                    self.period, self.policy)


def companion(alpha, policy: ScalarPolicy | None = None) -> np.ndarray:
    """Companion matrix with last row ``alpha``."""
    policy = policy or ScalarPolicy()
    n = len(alpha)
    A = policy.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = policy.scalar(1)
    A[n - 1, :] = policy.array(alpha)
    return A


def unit_input(n: int, policy: ScalarPolicy | None = None) -> np.ndarray:
    policy = policy or ScalarPolicy()
    e = policy.zeros(n)
    e[n - 1] = policy.scalar(1)
    return e


def is_canonical_form(sys: LtvSystem, k_range=None) -> bool:
    """Exact structural test: shift rows of ``A_k`` and ``b_k = e_n``, no tolerance."""
    n = sys.n
    lo, hi = k_range or (sys.k_min, sys.k_max)
    for k in range(lo, hi + 1):
        A, b = sys.A_at(k), sys.b_at(k)
        for i in range(n - 1):
            for j in range(n):
                if A[i, j] != (1 if j == i + 1 else 0):
                    return False
        for i in range(n):
            if b[i] != (1 if i == n - 1 else 0):
                return False
    return True


def _checked_W(sys: LtvSystem, k: int, cache: dict) -> np.ndarray:
    if k not in cache:
        W = controllability_matrix(sys, k)
        ok, _ = nonsingular(W, sys.policy)
        if not ok:
            if sys.policy.exact:
                raise NotControllableError(k)
            # in float mode "singular" and "cond > 1/tol" are the same test
            cond = np.linalg.cond(to_float(W))
            raise IllConditionedError(
                k, f"W_{k} has condition number {cond:.3g} > 1/tol = {1 / sys.policy.tol:.3g}; "
                   "singular or ill-conditioned, retry in rational mode")
        cache[k] = (W, inv(W, sys.policy))
    return cache[k]


def canonical_coefficients(sys: LtvSystem, k: int, _cache=None) -> np.ndarray:
    """``W_k^{-1} A_k W_{k-1} e_n``.

    Entry ``i`` (0-based) of the result is the coefficient in column ``i`` of
    the canonical last row at index ``k - i``.
    """
    cache = {} if _cache is None else _cache
    W, Winv = _checked_W(sys, k, cache)
    Wprev, _ = _checked_W(sys, k - 1, cache)
    return Winv.dot(sys.A_at(k)).dot(Wprev[:, sys.n - 1])


def canonical_rows(sys: LtvSystem, lo: int, hi: int, _cache=None) -> dict:
    """Canonical last rows for indices ``lo..hi``.

    Row ``j`` gathers entry ``i`` of ``canonical_coefficients`` at ``j + i``,
    so it needs system data from ``j - n`` up to ``j + n - 1``.
    """
    cache = {} if _cache is None else _cache
    n = sys.n
    coeffs = {}
    rows = {}
    for j in range(lo, hi + 1):
        row = sys.policy.zeros(n)
        for i in range(n):
            k = j + i
            if k not in coeffs:
                coeffs[k] = canonical_coefficients(sys, k, cache)
            row[i] = coeffs[k][i]
        rows[j] = row
    return rows


@dataclass(frozen=True, eq=False)
class CanonicalResult:
    transform: EquivalenceTransform
    system: LtvSystem
    rows: dict
    residual: float

    def __iter__(self):
        return iter((self.transform, self.system))


def canonical_range(sys: LtvSystem) -> tuple[int, int]:
    """Largest output range a non-periodic window supports (whole window if periodic)."""
    if sys.periodic:
        return sys.k_min, sys.k_max
    lo, hi = sys.k_min + 2 * sys.n - 1, sys.k_max - sys.n + 1
    if lo > hi:
        raise IndexOutOfRange(
            f"window [{sys.k_min}, {sys.k_max}] is too short for an n={sys.n} canonical "
            f"form: need at least {3 * sys.n - 1} indices")
    return lo, hi


def canonical_transform(sys: LtvSystem, k_range=None) -> CanonicalResult:
    """Canonical form over ``k_range`` and the transform producing it.

    The returned transform covers ``k_range`` plus one index on the right,
    because ``A~_k`` involves ``T_{k+1}``.  A periodic input gives a periodic
    canonical system and transform.  ``residual`` is the largest entry of
    ``T_{k+1} A_k T_k^{-1} - A~_k`` relative to ``max(1, |A~_k|)``; the
    canonical structure itself is imposed exactly.
    """
    pol, n = sys.policy, sys.n
    periodic = sys.periodic and k_range is None
    lo, hi = k_range or canonical_range(sys)
    cache = {}
    rows = canonical_rows(sys, lo - n + 1, hi, cache)
    steps = range(lo, hi + 1)
    canon_A = {k: companion(rows[k], pol) for k in steps}
    e_n = unit_input(n, pol)

    # Wc_{k-1} needs canonical rows k-1 .. k-n+1 and b at k-n; the row at
    # lo-n is never read.
    helper_rows = {lo - n: pol.zeros(n), **rows}
    helper = LtvSystem(n, lo - n, hi,
                       {j: companion(r, pol) for j, r in helper_rows.items()},
                       {j: e_n for j in helper_rows},
                       {j: pol.zeros(n) for j in helper_rows}, None, pol)
    t_hi = hi if periodic else hi + 1
    T = {}
    for k in range(lo, t_hi + 1):
        Wc = controllability_matrix(helper, k - 1)
        _, Winv = _checked_W(sys, k - 1, cache)
        T[k] = Wc.dot(Winv)
    transform = EquivalenceTransform(lo, t_hi, T, sys.period if periodic else None, pol)
    canon_c = {k: sys.c_at(k).dot(transform.inverse_at(k)) for k in steps}
    canon = LtvSystem(n, lo, hi, canon_A, {k: e_n for k in steps}, canon_c,
                      sys.period if periodic else None, pol)

    residual = 0.0
    for k in steps:
        computed = transform.at(k + 1).dot(sys.A_at(k)).dot(transform.inverse_at(k))
        diff = to_float(computed - canon_A[k])
        scale = max(1.0, float(np.max(np.abs(to_float(canon_A[k])))))
        residual = max(residual, float(np.max(np.abs(diff))) / scale)
    return CanonicalResult(transform, canon, rows, residual)


def apply_equivalence(sys: LtvSystem, T: EquivalenceTransform) -> LtvSystem:
    """``(T_{k+1} A_k T_k^{-1}, T_{k+1} b_k, c_k T_k^{-1})`` wherever defined.

    Periodic inputs give a periodic output whose period is the lcm of the two.
    """
    pol = sys.policy
    if sys.periodic and T.period is not None:
        p = lcm(sys.period, T.period)
        lo, hi, period = sys.k_min, sys.k_min + p - 1, p
    else:
        bounds = []
        if not sys.periodic:
            bounds.append((sys.k_min, sys.k_max))
        if T.period is None:
            bounds.append((T.k_min, T.k_max - 1))
        lo = max(b[0] for b in bounds)
        hi = min(b[1] for b in bounds)
        period = None
        if lo > hi:
            raise IndexOutOfRange("system and transform do not overlap")
    A, b, c = {}, {}, {}
    for k in range(lo, hi + 1):
        Tn, Tinv = T.at(k + 1), T.inverse_at(k)
        A[k] = Tn.dot(sys.A_at(k)).dot(Tinv)
        b[k] = Tn.dot(sys.b_at(k))
        c[k] = sys.c_at(k).dot(Tinv)
    return LtvSystem(sys.n, lo, hi, A, b, c, period, pol)


def invariance_residual(sys_a: LtvSystem, sys_b: LtvSystem, T: EquivalenceTransform,
                        k_range=None) -> dict:
    """Per index: ``det(T_k) c~ adj(A~) b~ - det(T_{k+1}) c adj(A) b``.

    Zero for every equivalent pair, since
    ``adj(T_{k+1} A T_k^{-1}) = det(T_{k+1}) / det(T_k) * T_k adj(A) T_{k+1}^{-1}``.
    """
    if k_range is None:
        lo, hi = sys_b.k_min, sys_b.k_max
    else:
        lo, hi = k_range
    for k in (lo, hi):
        if not (sys_a.covers(k) and sys_b.covers(k) and T.covers(k) and T.covers(k + 1)):
            raise IndexOutOfRange(f"index {k} is not covered by both systems and the transform")
    out = {}
    for k in range(lo, hi + 1):
        left = det(T.at(k)) * sys_b.c_at(k).dot(adjugate(sys_b.A_at(k))).dot(sys_b.b_at(k))
        right = det(T.at(k + 1)) * sys_a.c_at(k).dot(adjugate(sys_a.A_at(k))).dot(sys_a.b_at(k))
        out[k] = left - right
    return out
