"""Zero-order-hold sampling of continuous-time LTV systems.

With sampling period ``delta`` and ``t_k = k delta`` the sampled system is

    A_d(k) = Phi(t_{k+1}, t_k)
    b_d(k) = integral over [t_k, t_{k+1}] of Phi(t_{k+1}, s) b(s) ds
    c_d(k) = c(t_k)

``b_d`` is obtained from the same integration pass as ``Phi`` by carrying
``v' = A v + b`` with ``v(t_k) = 0`` next to ``X' = A X``.

The module also checks two combinatorial facts behind controllability
preservation: positivity of ``det((k+i)^{m_j} - (k+i-1)^{m_j})`` and the
expansion of the ``m``-th derivative at zero of
``f(delta) = det[int_{(k+i-1) delta}^{(k+i) delta} psi]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

import mpmath
import numpy as np
import sympy as sp
from scipy.integrate import quad, solve_ivp

from . import expressions
from .expressions import t
from .scalar import FLOAT, ScalarPolicy, matrix_rank, nonsingular
from .system import LtvSystem, adjugate, controllability_matrix


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t_fail: float | None = None):
        self.t_fail = t_fail
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class CtSystem:
    """``x' = A(t) x + b(t) u``, ``y = c(t) x`` with closed-form coefficients."""

    n: int
    A: tuple
    b: tuple
    c: tuple

    def __post_init__(self):
        n = self.n
        A = tuple(tuple(expressions.parse(e) for e in row) for row in self.A)
        b = tuple(expressions.parse(e) for e in self.b)
        c = tuple(expressions.parse(e) for e in self.c)
        if len(A) != n or any(len(row) != n for row in A):
            raise ValueError(f"A must be {n}x{n}")
        if len(b) != n:
            raise ValueError(f"b has length {len(b)}, expected {n}")
        if len(c) != n:
            raise ValueError(f"c has length {len(c)}, expected {n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def A_matrix(self) -> sp.Matrix:
        return sp.Matrix(self.A)

    @property
    def b_vector(self) -> sp.Matrix:
        return sp.Matrix(self.b)

    @property
    def c_row(self) -> sp.Matrix:
        return sp.Matrix([list(self.c)])

    @cached_property
    def _numeric(self):
        fA = sp.lambdify(t, self.A_matrix, "numpy")
        fb = sp.lambdify(t, self.b_vector, "numpy")
        fc = sp.lambdify(t, self.c_row, "numpy")
        ftr = sp.lambdify(t, self.A_matrix.trace(), "numpy")
        return fA, fb, fc, ftr

    def A_at(self, tv: float) -> np.ndarray:
        return np.array(self._numeric[0](tv), dtype=float).reshape(self.n, self.n)

    def b_at(self, tv: float) -> np.ndarray:
        return np.array(self._numeric[1](tv), dtype=float).reshape(self.n)

    def c_at(self, tv: float) -> np.ndarray:
        return np.array(self._numeric[2](tv), dtype=float).reshape(self.n)

    def trace_at(self, tv: float) -> float:
        return float(self._numeric[3](tv))

    def to_dict(self) -> dict:
        return {"n": self.n,
                "A": [[expressions.to_text(e) for e in row] for row in self.A],
                "b": [expressions.to_text(e) for e in self.b],
                "c": [expressions.to_text(e) for e in self.c]}


def rotation_system() -> CtSystem:
    """``A = [[0, 1], [-1, 0]]``, ``b = e_2``, ``c = e_1``."""
    return CtSystem(2, (("0", "1"), ("-1", "0")), ("0", "1"), ("1", "0"))


def vanishing_decoupling_example(n: int, k: int) -> CtSystem:
    """Controllable, observable, analytic, yet ``c_d(k) adj(A_d(k)) b_d(k) = 0`` for all delta.

    ``A = 0``, ``b = (1 - n, 2t, 3t^2, ..., n t^(n-1))`` and
    ``c_i = -(t/k)^(n-i) / ((k+1)^i - k^i)``.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    zero = sp.Integer(0)
    A = tuple(tuple(zero for _ in range(n)) for _ in range(n))
    b = (sp.Integer(1 - n),) + tuple(sp.Integer(i) * t ** (i - 1) for i in range(2, n + 1))
    c = tuple(-(t / sp.Integer(k)) ** (n - i) / sp.Integer((k + 1) ** i - k ** i)
              for i in range(1, n + 1))
    return CtSystem(n, A, b, c)


@dataclass(frozen=True)
class StepReport:
    """Per-interval integrator diagnostics.

    ``liouville`` is ``|det Phi - exp(int tr A)|`` relative to the exact value,
    an error indicator independent of the integrator.
    """

    t0: float
    t1: float
    nfev: int
    liouville: float
    det: float


def _integrate(ct: CtSystem, t1: float, t0: float, tol: float, with_input: bool):
    n = ct.n
    if t1 == t0:
        return np.eye(n), np.zeros(n), StepReport(t0, t1, 0, 0.0, 1.0)

    def rhs(tv, y):
        A = ct.A_at(tv)
        X = y[: n * n].reshape(n, n)
        dX = A @ X
        if not with_input:
            return dX.reshape(-1)
        v = y[n * n:]
        return np.concatenate([dX.reshape(-1), A @ v + ct.b_at(tv)])

    y0 = np.concatenate([np.eye(n).reshape(-1), np.zeros(n if with_input else 0)])
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        where = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationError(f"integration over [{t0}, {t1}] failed at t = {where}: "
                               f"{sol.message}", where)
    y = sol.y[:, -1]
    Phi = y[: n * n].reshape(n, n)
    v = y[n * n:] if with_input else np.zeros(n)
    trace_int, _ = quad(ct.trace_at, t0, t1, epsabs=1e-14, epsrel=1e-13)
    expected = float(np.exp(trace_int))
    d = float(np.linalg.det(Phi))
    return Phi, v, StepReport(t0, t1, int(sol.nfev), abs(d - expected) / expected, d)


def transition(ct: CtSystem, t1: float, t0: float, tol: float = 1e-10) -> np.ndarray:
    """Fundamental matrix ``Phi(t1, t0)`` of ``X' = A(t) X``, ``X(t0) = I``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _integrate(ct, float(t1), float(t0), tol, False)[0]


@dataclass(frozen=True, eq=False)
class SampledSystem:
    delta: float
    system: LtvSystem
    steps: dict

    @property
    def worst_liouville(self) -> float:
        return max(s.liouville for s in self.steps.values())


def discretize(ct: CtSystem, delta: float, k_range: tuple[int, int], tol: float = 1e-10,
               policy: ScalarPolicy | None = None) -> SampledSystem:
    """Zero-order-hold sampled system on ``k_range`` (inclusive)."""
    if not delta > 0:
        raise ValueError("sampling period must be positive")
    policy = policy or ScalarPolicy(FLOAT)
    lo, hi = k_range
    A, b, c, steps = {}, {}, {}, {}
    for k in range(lo, hi + 1):
        t0, t1 = k * delta, (k + 1) * delta
        Phi, v, rep = _integrate(ct, t1, t0, tol, True)
        if rep.det == 0 or not nonsingular(Phi, ScalarPolicy(FLOAT, tol))[0]:
            raise IntegrationError(f"computed transition matrix at k = {k} is singular", t0)
        A[k], b[k], c[k], steps[k] = Phi, v, ct.c_at(t0), rep
    if policy.exact:
        A = {k: np.vectorize(Fraction, otypes=[object])(v) for k, v in A.items()}
        b = {k: np.vectorize(Fraction, otypes=[object])(v) for k, v in b.items()}
        c = {k: np.vectorize(Fraction, otypes=[object])(v) for k, v in c.items()}
    return SampledSystem(float(delta), LtvSystem(ct.n, lo, hi, A, b, c, None, policy), steps)


def controllability_columns(ct: CtSystem) -> list:
    """``p_0 = b``, ``p_{j+1} = A p_j + dp_j/dt`` as sympy column vectors."""
    A = ct.A_matrix
    cols = [ct.b_vector]
    for _ in range(ct.n - 1):
        p = cols[-1]
        cols.append((A * p + p.diff(t)).applyfunc(sp.simplify))
    return cols


@dataclass(frozen=True)
class CtControllability:
    matrix: np.ndarray
    rank: int
    full_rank: bool


def continuous_controllability_matrix(ct: CtSystem, tv, policy: ScalarPolicy | None = None) -> CtControllability:
    """``[p_0(t), ..., p_{n-1}(t)]`` at ``t = tv`` and its rank.

    In rational mode ``tv`` is taken exactly and every entry must evaluate to a
    rational number.
    """
    policy = policy or ScalarPolicy(FLOAT)
    M = sp.Matrix.hstack(*controllability_columns(ct))
    if policy.exact:
        val = M.subs(t, sp.Rational(str(Fraction(tv))))
        out = np.empty((ct.n, ct.n), dtype=object)
        for i in range(ct.n):
            for j in range(ct.n):
                e = sp.nsimplify(val[i, j])
                if not e.is_Rational:
                    raise ValueError(f"entry ({i}, {j}) = {val[i, j]} is not rational at t = {tv}")
                out[i, j] = Fraction(int(e.p), int(e.q))
    else:
        out = np.array(sp.lambdify(t, M, "numpy")(float(tv)), dtype=float).reshape(ct.n, ct.n)
    r = matrix_rank(out, policy)
    return CtControllability(out, r, r == ct.n)


@dataclass(frozen=True)
class SweepPoint:
    delta: float
    k: int
    min_sv: float
    max_sv: float
    decoupling: float
    decoupling_scale: float
    rank_tol: float
    error: str | None = None

    @property
    def controllable(self) -> bool:
        if self.error is not None:
            return False
        return self.max_sv > 0 and self.min_sv >= self.rank_tol * self.max_sv

    @property
    def decoupling_vanishes(self) -> bool:
        return abs(self.decoupling) <= 1e-9 * self.decoupling_scale


@dataclass(frozen=True)
class SweepReport:
    grid: tuple
    points: tuple

    def at(self, delta: float) -> list:
        return [p for p in self.points if p.delta == delta]

    def verdict(self, delta: float) -> bool:
        return all(p.controllable for p in self.at(delta))

    def failures(self) -> list:
        return [d for d in self.grid if not self.verdict(d)]

    def csv_rows(self):
        for p in self.points:
            yield (repr(p.delta), str(p.k),
                   "" if p.error else repr(p.min_sv),
                   "" if p.error else repr(p.decoupling),
                   "error" if p.error else ("controllable" if p.controllable else "singular"))


def _decoupling(sysd: LtvSystem, k: int):
    A, b, c = sysd.A_at(k), sysd.b_at(k), sysd.c_at(k)
    adj = adjugate(A)
    value = float(c.dot(adj).dot(b))
    scale = float(np.linalg.norm(c) * np.linalg.norm(adj, 2) * np.linalg.norm(b))
    return value, scale


def delta_sweep(ct: CtSystem, grid, k_range: tuple[int, int] = (0, 0), tol: float = 1e-10,
                rank_tol: float = 1e-10, workers: int = 1) -> SweepReport:
    """Controllability and decoupling diagnostics at every grid period.

    ``W_k`` needs ``n - 1`` samples before ``k``, so each period discretizes
    ``[k_lo - n + 1, k_hi]``.  An integrator failure is recorded on the
    affected points and the sweep carries on.  ``workers > 1`` spreads the
    grid over a thread pool.
    """
    grid = tuple(float(d) for d in grid)
    if not grid:
        raise ValueError("empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if grid[0] <= 0:
        raise ValueError("sampling periods must be positive")
    lo, hi = k_range

    def one(delta):
        try:
            sampled = discretize(ct, delta, (lo - ct.n + 1, hi), tol)
        except IntegrationError as exc:
            return [SweepPoint(delta, k, float("nan"), float("nan"), float("nan"),
                               float("nan"), rank_tol, str(exc)) for k in range(lo, hi + 1)]
        pts = []
        for k in range(lo, hi + 1):
            W = controllability_matrix(sampled.system, k)
            s = np.linalg.svd(W, compute_uv=False)
            value, scale = _decoupling(sampled.system, k)
            pts.append(SweepPoint(delta, k, float(s[-1]), float(s[0]), value, scale, rank_tol))
        return pts

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(one, grid))
    else:
        chunks = [one(d) for d in grid]
    return SweepReport(grid, tuple(p for chunk in chunks for p in chunk))


def _as_fraction(k) -> Fraction:
    if isinstance(k, float):
        return Fraction(k)
    return Fraction(k)


def coeff_matrix(k, m) -> list:
    """Rows ``i = 1..n``, columns ``j``: ``(k+i)^{m_j} - (k+i-1)^{m_j}``."""
    k = _as_fraction(k)
    m = tuple(int(x) for x in m)
    if not m or m[0] <= 0 or any(b <= a for a, b in zip(m, m[1:])):
        raise ValueError(f"exponents must be strictly increasing positive integers, got {m}")
    n = len(m)
    return [[(k + i) ** mj - (k + i - 1) ** mj for mj in m] for i in range(1, n + 1)]


def coeff_matrix_det(k, m) -> Fraction:
    """Exact ``det((k+i)^{m_j} - (k+i-1)^{m_j})``; positive for ``k >= 0``."""
    from .scalar import det
    M = np.empty((len(m), len(m)), dtype=object)
    for i, row in enumerate(coeff_matrix(k, m)):
        for j, v in enumerate(row):
            M[i, j] = v
    return det(M)


def increasing_partitions(m: int, n: int):
    """Tuples ``0 < m_1 < ... < m_n`` with ``sum = m``."""
    def rec(remaining, parts, low):
        if parts == 0:
            if remaining == 0:
                yield ()
            return
        # the smallest admissible completion is low + (low+1) + ... (parts terms)
        hi = remaining
        for first in range(low, hi + 1):
            if first * parts + parts * (parts - 1) // 2 > remaining:
                break
            for rest in rec(remaining - first, parts - 1, first + 1):
                yield (first,) + rest
    yield from rec(m, n, 1)


def multinomial(m: int, parts) -> int:
    out = factorial(m)
    for p in parts:
        out //= factorial(p)
    return out


def _to_number(expr):
    expr = sp.nsimplify(expr) if not expr.is_Rational else expr
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    return float(expr)


@dataclass(frozen=True)
class DerivativeCheck:
    lhs: object
    rhs: object
    exact: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs))

    @property
    def agrees(self) -> bool:
        """Exact equality, or agreement to ``1e-6`` relative for finite differences."""
        if self.exact:
            return self.lhs == self.rhs
        return abs(float(self.lhs) - float(self.rhs)) <= 1e-6 * max(1.0, abs(float(self.rhs)))


def derivative_sum(psi, k, m: int):
    """Sum over increasing partitions of ``m`` of multinomial * det(coeffs) * det(psi derivatives at 0)."""
    exprs = [expressions.parse(e) for e in psi]
    n = len(exprs)
    vec = sp.Matrix(exprs)
    derivs = {}
    total = Fraction(0)
    exact = True
    for parts in increasing_partitions(m, n):
        cols = []
        for p in parts:
            if p not in derivs:
                derivs[p] = vec.diff(t, p - 1).subs(t, 0) if p > 1 else vec.subs(t, 0)
            cols.append(derivs[p])
        d = _to_number(sp.Matrix.hstack(*cols).det())
        if isinstance(d, float):
            exact = False
        total = total + multinomial(m, parts) * coeff_matrix_det(k, parts) * d
    return total, exact


def _block_determinant(exprs, k, delta_sym):
    n = len(exprs)
    cols = []
    for i in range(1, n + 1):
        cols.append([sp.integrate(e, (t, (k + i - 1) * delta_sym, (k + i) * delta_sym))
                     for e in exprs])
    return sp.Matrix(cols).T.det()


def f_derivative_check(psi, k, m: int, m_max: int = 8, dps: int = 60) -> DerivativeCheck:
    """Both sides of the derivative identity for ``f(delta)``.

    The left side differentiates ``f`` directly: exactly for polynomial
    ``psi``, otherwise by mpmath finite differences of high-precision
    quadratures (only up to order ``m_max``).
    """
    exprs = [expressions.parse(e) for e in psi]
    k = _as_fraction(k)
    rhs, rhs_exact = derivative_sum(exprs, k, m)
    if all(expressions.is_polynomial(e) for e in exprs):
        dsym = sp.Symbol("delta")
        f = _block_determinant(exprs, sp.Rational(k.numerator, k.denominator), dsym)
        lhs = _to_number(sp.diff(f, dsym, m).subs(dsym, 0))
        return DerivativeCheck(lhs, rhs, rhs_exact and isinstance(lhs, Fraction))
    if m > m_max:
        raise ValueError(f"order {m} exceeds m_max = {m_max} for finite differences")
    fns = [sp.lambdify(t, e, "mpmath") for e in exprs]
    n = len(exprs)
    kk = mpmath.mpf(k.numerator) / k.denominator
    with mpmath.workdps(dps):
        def f(delta):
            cols = [[mpmath.quad(fn, [(kk + i - 1) * delta, (kk + i) * delta]) for fn in fns]
                    for i in range(1, n + 1)]
            return mpmath.det(mpmath.matrix(cols).T)
        lhs = float(mpmath.diff(f, 0, m))
    return DerivativeCheck(lhs, float(rhs), False)
