"""Discrete-time LTV single-input single-output systems.

The model is ``x[k+1] = A[k] x[k] + b[k] u[k]``, ``y[k] = c[k] x[k]`` over a
finite index window, optionally extended periodically to all integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .scalar import ScalarPolicy, det, nonsingular, policy_of


class IndexOutOfRange(IndexError):
    """A time index outside the window of a non-periodic system."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LtvSystem:
    """Finite window of ``(A_k, b_k, c_k)`` with an optional periodic extension.

    ``b[k]`` and ``c[k]`` are stored as 1-D arrays of length ``n``.  With
    ``period`` set, the window must hold exactly one period and every index
    ``k`` resolves to ``k_min + (k - k_min) mod period``.
    """

    n: int
    k_min: int
    k_max: int
    A: Mapping[int, np.ndarray]
    b: Mapping[int, np.ndarray]
    c: Mapping[int, np.ndarray]
    period: int | None = None
    policy: ScalarPolicy = field(default_factory=ScalarPolicy)

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"state dimension must be a positive integer, got {n!r}")
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        if self.period is not None:
            if self.period < 1:
                raise ValueError(f"period must be positive, got {self.period}")
            if self.period != self.k_max - self.k_min + 1:
                raise ValueError("a periodic window must hold exactly one period")
        A, b, c = {}, {}, {}
        for k in range(self.k_min, self.k_max + 1):
            for name, src in (("A", self.A), ("b", self.b), ("c", self.c)):
                if k not in src:
                    raise ValueError(f"missing {name} at index {k}")
            Ak = self.policy.array(self.A[k])
            bk = self.policy.array(self.b[k]).reshape(-1)
            ck = self.policy.array(self.c[k]).reshape(-1)
            if Ak.shape != (n, n):
                raise ValueError(f"A at index {k} has shape {Ak.shape}, expected ({n}, {n})")
            if bk.shape != (n,):
                raise ValueError(f"b at index {k} has length {bk.size}, expected {n}")
            if ck.shape != (n,):
                raise ValueError(f"c at index {k} has length {ck.size}, expected {n}")
            A[k], b[k], c[k] = _frozen(Ak), _frozen(bk), _frozen(ck)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_steps(cls, steps: Sequence, k_min: int = 0, periodic: bool = False,
                   policy: ScalarPolicy | None = None) -> "LtvSystem":
        """Build from a list of ``(A, b, c)`` triples starting at ``k_min``."""
        policy = policy or ScalarPolicy()
        if not steps:
            raise ValueError("need at least one step")
        n = np.asarray(steps[0][0], dtype=object).shape[0]
        k_max = k_min + len(steps) - 1
        A = {k_min + i: s[0] for i, s in enumerate(steps)}
        b = {k_min + i: s[1] for i, s in enumerate(steps)}
        c = {k_min + i: s[2] for i, s in enumerate(steps)}
        return cls(n, k_min, k_max, A, b, c, len(steps) if periodic else None, policy)

    @classmethod
    def time_invariant(cls, A, b, c, policy: ScalarPolicy | None = None) -> "LtvSystem":
        return cls.from_steps([(A, b, c)], periodic=True, policy=policy)

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def covers(self, k: int) -> bool:
        return self.periodic or self.k_min <= k <= self.k_max

    def resolve(self, k: int) -> int:
        if self.periodic:
            return self.k_min + (k - self.k_min) % self.period
        if not self.k_min <= k <= self.k_max:
            raise IndexOutOfRange(f"index {k} outside window [{self.k_min}, {self.k_max}]")
        return k

    def A_at(self, k: int) -> np.ndarray:
        return self.A[self.resolve(k)]

    def b_at(self, k: int) -> np.ndarray:
        return self.b[self.resolve(k)]

    def c_at(self, k: int) -> np.ndarray:
        return self.c[self.resolve(k)]

    def indices(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def with_policy(self, policy: ScalarPolicy) -> "LtvSystem":
        return LtvSystem(self.n, self.k_min, self.k_max, self.A, self.b, self.c,
                         self.period, policy)

    def restrict(self, lo: int, hi: int) -> "LtvSystem":
        """Non-periodic copy over ``[lo, hi]`` (indices resolved through the extension)."""
        ks = range(lo, hi + 1)
        return LtvSystem(self.n, lo, hi, {k: self.A_at(k) for k in ks},
                         {k: self.b_at(k) for k in ks}, {k: self.c_at(k) for k in ks},
                         None, self.policy)

    def default_range(self, lead_in: int = 0, lead_out: int = 0) -> tuple[int, int]:
        """Indices ``k`` for which ``k - lead_in`` through ``k + lead_out`` resolve."""
        if self.periodic:
            return self.k_min, self.k_max
        lo, hi = self.k_min + lead_in, self.k_max - lead_out
        if lo > hi:
            raise IndexOutOfRange("window too short for the requested lead-in/lead-out")
        return lo, hi


@dataclass(frozen=True)
class FeedbackSchedule:
    """Gains ``F_k`` for ``k = k_start, ..., k_start + len(gains) - 1``."""

    k_start: int
    gains: tuple

    def __post_init__(self):
        if len(self.gains) < 1:
            raise ValueError("a feedback schedule needs at least one gain")
        object.__setattr__(self, "gains", tuple(self.gains))

    def __len__(self):
        return len(self.gains)

    @property
    def k_end(self) -> int:
        """Index of the state reached after the last gain is applied."""
        return self.k_start + len(self.gains)

    def gain_at(self, k: int):
        return self.gains[k - self.k_start]

    def then(self, other: "FeedbackSchedule") -> "FeedbackSchedule":
        if other.k_start != self.k_end:
            raise ValueError("schedules are not contiguous")
        return FeedbackSchedule(self.k_start, self.gains + other.gains)


@dataclass(frozen=True)
class Trajectory:
    k_start: int
    states: tuple
    outputs: tuple
    controls: tuple

    @property
    def k_end(self) -> int:
        return self.k_start + len(self.states) - 1

    def state_at(self, k: int) -> np.ndarray:
        return self.states[k - self.k_start]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def simulate(sys: LtvSystem, k0: int, x0, controls=None, feedback: FeedbackSchedule | None = None,
             steps: int | None = None) -> Trajectory:
    """Propagate ``x0`` from index ``k0``.

    Exactly one driving mode is used: explicit ``controls``, a ``feedback``
    schedule (``u_k = F_k y_k``, which must start at ``k0``), or neither (zero
    input for ``steps`` steps).  ``outputs[i]`` is ``y`` at ``k0 + i``; the
    last entry is None when ``c`` is not available at the final index.
    """
    if controls is not None and feedback is not None:
        raise ValueError("give either controls or a feedback schedule, not both")
    pol = sys.policy
    x = pol.array(x0).reshape(-1)
    if x.shape != (sys.n,):
        raise ValueError(f"initial state has length {x.size}, expected {sys.n}")
    if controls is not None:
        controls = [pol.scalar(u) for u in controls]
        count = len(controls)
    elif feedback is not None:
        if feedback.k_start != k0:
            raise ValueError(f"feedback starts at {feedback.k_start}, simulation at {k0}")
        count = len(feedback)
    else:
        count = 0 if steps is None else steps
    if steps is not None and steps != count:
        raise ValueError("steps disagrees with the length of the input sequence")

    states, outputs, used = [x], [], []
    for i in range(count):
        k = k0 + i
        Ak, bk, ck = sys.A_at(k), sys.b_at(k), sys.c_at(k)
        y = ck.dot(x)
        if controls is not None:
            u = controls[i]
        elif feedback is not None:
            u = pol.scalar(feedback.gains[i]) * y
        else:
            u = pol.scalar(0)
        x = Ak.dot(x) + bk * u
        states.append(x)
        outputs.append(y)
        used.append(u)
    kf = k0 + count
    outputs.append(sys.c_at(kf).dot(x) if sys.covers(kf) else None)
    return Trajectory(k0, tuple(states), tuple(outputs), tuple(used))


def closed_loop_matrix(sys: LtvSystem, k: int, gain) -> np.ndarray:
    """``A_k + F_k b_k c_k``."""
    return sys.A_at(k) + sys.policy.scalar(gain) * np.outer(sys.b_at(k), sys.c_at(k))


def closed_loop_product(sys: LtvSystem, schedule: FeedbackSchedule) -> np.ndarray:
    """Transition matrix from ``k_start`` to ``k_end`` under the schedule."""
    P = sys.policy.eye(sys.n)
    for i, g in enumerate(schedule.gains):
        P = closed_loop_matrix(sys, schedule.k_start + i, g).dot(P)
    return P


def controllability_matrix(sys: LtvSystem, k: int) -> np.ndarray:
    """``W_k = [b_k, A_k b_{k-1}, ..., A_k ... A_{k-n+2} b_{k-n+1}]``."""
    n = sys.n
    W = sys.policy.zeros((n, n))
    prod = sys.policy.eye(n)
    for j in range(n):
        if j:
            prod = prod.dot(sys.A_at(k - j + 1))
        W[:, j] = prod.dot(sys.b_at(k - j))
    return W


def observability_matrix(sys: LtvSystem, k: int) -> np.ndarray:
    """Rows ``c_k, c_{k+1} A_k, ..., c_{k+n-1} A_{k+n-2} ... A_k``."""
    n = sys.n
    O = sys.policy.zeros((n, n))
    prod = sys.policy.eye(n)
    for j in range(n):
        if j:
            prod = sys.A_at(k + j - 1).dot(prod)
        O[j, :] = sys.c_at(k + j).dot(prod)
    return O


@dataclass(frozen=True)
class RankReport:
    """Verdict over an index range plus the per-index diagnostic.

    The diagnostic is ``det`` in rational mode and the smallest singular value
    in float mode.
    """

    verdict: bool
    diagnostics: dict
    failures: tuple

    def __bool__(self):
        return self.verdict


def _rank_sweep(sys, build, k_range) -> RankReport:
    diags, bad = {}, []
    for k in range(k_range[0], k_range[1] + 1):
        ok, d = nonsingular(build(sys, k), sys.policy)
        diags[k] = d
        if not ok:
            bad.append(k)
    return RankReport(not bad, diags, tuple(bad))


def is_completely_controllable(sys: LtvSystem, k_range: tuple[int, int] | None = None) -> RankReport:
    """Nonsingularity of every ``W_k`` for ``k`` in the inclusive range."""
    k_range = k_range or sys.default_range(lead_in=sys.n - 1)
    return _rank_sweep(sys, controllability_matrix, k_range)


def is_completely_observable(sys: LtvSystem, k_range: tuple[int, int] | None = None) -> RankReport:
    k_range = k_range or sys.default_range(lead_out=sys.n - 1)
    return _rank_sweep(sys, observability_matrix, k_range)


def _minor(M: np.ndarray, i: int, j: int) -> np.ndarray:
    return np.delete(np.delete(M, i, axis=0), j, axis=1)


def adjugate(M) -> np.ndarray:
    """Transpose of the cofactor matrix, so that ``M @ adj(M) = det(M) I``.

    A 1x1 matrix has adjugate ``(1)``.  Float matrices above 4x4 use
    ``det(M) inv(M)`` unless singular.
    """
    M = np.asarray(M)
    n = M.shape[0]
    if M.ndim != 2 or M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    pol = policy_of(M)
    if n == 1:
        return pol.eye(1)
    if not pol.exact and n > 4:
        ok, _ = nonsingular(M, pol)
        if ok:
            return np.linalg.det(M) * np.linalg.inv(M)
    out = pol.zeros((n, n))
    for i in range(n):
        for j in range(n):
            sign = 1 if (i + j) % 2 == 0 else -1
            out[j, i] = sign * det(_minor(M, i, j))
    return out


def decoupling_term(sys: LtvSystem, k: int):
    """The scalar ``c_k adj(A_k) b_k``."""
    return sys.c_at(k).dot(adjugate(sys.A_at(k))).dot(sys.b_at(k))
