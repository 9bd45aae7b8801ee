"""Memoryless output-feedback nullification of canonical-form LTV systems.

The pipeline for one initial state is

1. bring the system to controller canonical form,
2. unroll the symbolic construction: whenever the symbolic output ``c_k x_k``
   is identically zero the state is advanced by ``A_k``, otherwise it is
   shifted and a fresh free variable ``delta_{k+1}`` enters the last slot,
3. find the index ``k0`` after which the count ``d(k)`` of active variables
   in the state window is constant for ``2n + 1`` indices,
4. pick numbers for the free variables (zero after the cutoff, every
   required output nonzero) and
5. read the gains off the realized trace: ``F_k = (delta_{k+1} - a_k x_k) / (c_k x_k)``.

Nullifying every state at once repeats this for the images of a basis under
the closed loop built so far.

Step indices inside a :class:`ConstructionTrace` are relative to its
``k_start``; variable ``delta_j`` is the one introduced in state ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

import numpy as np

from .affine import AffineExpr, dot
from .canonical import (
    CanonicalResult,
    NotControllableError,
    canonical_transform,
    is_canonical_form,
)
from .scalar import ScalarPolicy
from .system import (
    FeedbackSchedule,
    IndexOutOfRange,
    LtvSystem,
    Trajectory,
    closed_loop_matrix,
    closed_loop_product,
    is_completely_observable,
    simulate,
)


class NullificationError(RuntimeError):
    """Failure of one pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


def k0_bound(n: int) -> int:
    return n ** 3 + n ** 2


def state_bound(n: int) -> int:
    """Steps needed for one given initial state."""
    return n ** 3 + n ** 2 + n


def all_states_bound(n: int) -> int:
    """Steps needed for every initial state from a fixed start time."""
    return n ** 4 + n ** 3 + n ** 2


def uniform_bound(n: int) -> int:
    """Steps needed for every initial state from an arbitrary start time."""
    return 2 * all_states_bound(n)


def default_horizon(n: int) -> int:
    return k0_bound(n) + 2 * n


@dataclass(eq=False)
class ConstructionTrace:
    n: int
    k_start: int
    states: list
    outputs: list
    active: dict
    d: list
    policy: ScalarPolicy

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def is_active(self, j: int) -> bool:
        return self.active.get(j, False)

    def active_variables(self) -> list:
        return sorted(j for j, a in self.active.items() if a)


def _count_active(active: dict, j: int, n: int) -> int:
    return sum(1 for i in range(j - n + 1, j + 1) if active.get(i, False))


def build_construction(canon: LtvSystem, k_start: int, x0, horizon: int | None = None) -> ConstructionTrace:
    """Unroll the symbolic construction for ``horizon`` steps from ``x0``.

    ``canon`` must be in controller canonical form with a nonzero first
    coordinate of ``c_k`` on every covered index.
    """
    n, pol = canon.n, canon.policy
    horizon = default_horizon(n) if horizon is None else horizon
    if horizon < state_bound(n):
        raise ValueError(f"horizon {horizon} is below n^3+n^2+n = {state_bound(n)}")
    last = k_start + horizon
    if not (canon.covers(k_start) and canon.covers(last)):
        raise IndexOutOfRange(f"canonical system does not cover [{k_start}, {last}]")
    if not is_canonical_form(canon, (k_start, last) if not canon.periodic else None):
        raise ValueError("system is not in controller canonical form")
    for k in range(k_start, last + 1):
        ck = canon.c_at(k)
        scale = max(abs(float(v)) for v in ck) or 1.0
        if pol.is_zero(ck[0], scale):
            raise ValueError(f"first coordinate of c at index {k} vanishes "
                             "(decoupling term c adj(A) b is zero there)")

    x = tuple(AffineExpr.constant(v) for v in pol.array(x0).reshape(-1))
    if len(x) != n:
        raise ValueError(f"initial state has length {len(x)}, expected {n}")
    one = pol.scalar(1)
    states, outputs, active = [x], [], {}
    for j in range(horizon):
        k = k_start + j
        y = dot(canon.c_at(k), x, pol)
        outputs.append(y)
        if y.is_zero():
            active[j + 1] = False
            last_entry = dot(canon.A_at(k)[n - 1], x, pol)
            x = x[1:] + (last_entry,)
        else:
            active[j + 1] = True
            x = x[1:] + (AffineExpr.variable(j + 1, one),)
        states.append(x)
    outputs.append(dot(canon.c_at(last), x, pol))
    d = [_count_active(active, j, n) for j in range(horizon + 1)]
    return ConstructionTrace(n, k_start, states, outputs, active, d, pol)


def structure_violations(trace: ConstructionTrace, k0: int) -> list:
    """Entries of ``x_{k0}..x_{k0+n}`` that are neither zero nor a bare active variable."""
    bad = []
    for j in range(k0, min(k0 + trace.n, trace.horizon) + 1):
        for pos, e in enumerate(trace.states[j]):
            if e.is_zero():
                continue
            var = e.bare_variable()
            if var is None or not trace.is_active(var):
                bad.append((j, pos, e))
    return bad


@dataclass(frozen=True)
class StabilizationIndex:
    k0: int
    structure_ok: bool
    violations: tuple

    def __int__(self):
        return self.k0


def find_k0(trace: ConstructionTrace) -> StabilizationIndex:
    """Smallest ``k0`` with ``d`` constant on ``[k0, k0 + 2n]``."""
    n, d = trace.n, trace.d
    limit = min(k0_bound(n), trace.horizon - 2 * n)
    for k0 in range(0, limit + 1):
        if len(set(d[k0:k0 + 2 * n + 1])) == 1:
            bad = structure_violations(trace, k0)
            return StabilizationIndex(k0, not bad, tuple(bad))
    raise NullificationError(
        "find_k0", f"d(k) never constant over {2 * n + 1} indices up to k0 = {limit}; "
                   "the system is not observable or a float zero test failed")


def trace_violations(trace: ConstructionTrace) -> list:
    """Breaches of ``d(k) <= n``, ``d(k) <= d(k+n)`` and of the step lemma."""
    n, d = trace.n, trace.d
    out = []
    for k, v in enumerate(d):
        if v > n:
            out.append(("d<=n", k))
        if k + n < len(d) and d[k] > d[k + n]:
            out.append(("d(k)<=d(k+n)", k))
        if k + n + 1 < len(d) and d[k + n] == d[k] and d[k + n + 1] < d[k + n]:
            out.append(("d(k+n+1)>=d(k+n)", k))
    return out


@dataclass(frozen=True)
class Realization:
    """Numbers for the free variables and the realized concrete trace.

    ``end`` is the first step at which the realized state is zero; ``margin``
    is the smallest ``|c_i x_i|`` over the steps ``i < end`` that introduce
    a variable.
    """

    assignment: dict
    margin: float
    end: int
    cutoff: int
    states: tuple
    outputs: tuple


def _evaluate(trace: ConstructionTrace, assignment: dict, cutoff: int):
    pol = trace.policy
    states, outputs = [], []
    end = None
    for j, x in enumerate(trace.states):
        xv = pol.array([e.evaluate(assignment) for e in x])
        states.append(xv)
        if j < len(trace.outputs):
            outputs.append(trace.outputs[j].evaluate(assignment))
        scale = max([1.0] + [e.magnitude() for e in x])
        if j >= 1 and all(pol.is_zero(v, scale) for v in xv):
            end = j
            break
    return states, outputs, end


def realize(trace: ConstructionTrace, k0: int, seed: int = 0, cutoff: int | None = None,
            rounds: int = 32) -> Realization:
    """Draw integer values for the active variables up to ``cutoff`` (default ``k0``).

    Variables after the cutoff are zero.  A draw is accepted when the realized
    trace reaches the origin and every step that introduces a variable before
    that point has a nonzero output, so the gain formula is defined there.
    Draws come from ``{+-1, ..., +-(r + 2)}`` on round ``r``.
    """
    pol = trace.policy
    cutoff = k0 if cutoff is None else cutoff
    rng = Random(seed)
    free = [j for j in trace.active_variables() if j <= cutoff]
    zero = pol.scalar(0)
    best = None
    for r in range(rounds):
        top = r + 2
        assignment = {j: zero for j in trace.active}
        for j in free:
            assignment[j] = pol.scalar(rng.choice([-1, 1]) * rng.randint(1, top))
        states, outputs, end = _evaluate(trace, assignment, cutoff)
        if end is None:
            continue
        margin = float("inf")
        ok = True
        for i in range(end):
            if not trace.is_active(i + 1):
                continue
            y = outputs[i]
            scale = max(1.0, trace.outputs[i].magnitude() * max(1.0, float(top)))
            if pol.is_zero(y, scale):
                ok = False
                break
            margin = min(margin, abs(float(y)))
        if ok:
            return Realization(assignment, margin, end, cutoff, tuple(states), tuple(outputs))
        best = r
    raise NullificationError(
        "realize", f"no admissible realization with cutoff {cutoff} after {rounds} rounds"
                   + ("" if best is None else " (every draw hit a vanishing output)"))


def extract_feedback(canon: LtvSystem, trace: ConstructionTrace, realization: Realization,
                     verify: bool = True) -> FeedbackSchedule:
    """Gains reproducing the realized trace under ``u_k = F_k y_k``.

    ``F_k = 0`` where the output vanishes identically, otherwise
    ``(delta_{k+1} - a_k x_k) / (c_k x_k)`` with ``a_k`` the last row of
    ``A_k``: the last state entry after feedback is ``a_k x_k + F_k c_k x_k``
    and it has to equal ``delta_{k+1}``.
    """
    pol, n = canon.policy, canon.n
    gains = []
    for j in range(realization.end):
        if not trace.is_active(j + 1):
            gains.append(pol.scalar(0))
            continue
        k = trace.k_start + j
        x = realization.states[j]
        y = realization.outputs[j]
        if y == 0:
            raise NullificationError("extract_feedback", f"output vanishes at step {k}")
        a_x = canon.A_at(k)[n - 1].dot(x)
        gains.append((realization.assignment[j + 1] - a_x) / y)
    schedule = FeedbackSchedule(trace.k_start, tuple(gains))
    if verify:
        traj = simulate(canon, trace.k_start, realization.states[0], feedback=schedule)
        scale = _peak(realization.states)
        for j, (got, want) in enumerate(zip(traj.states, realization.states)):
            if not _close(got, want, pol, scale):
                raise NullificationError(
                    "extract_feedback", f"closed loop departs from the trace at step {j}")
    return schedule


# Float-mode verification is relative to the largest magnitude met on the way.
VERIFY_RTOL = 1e-8


def _peak(arrays) -> float:
    return max([1.0] + [float(np.max(np.abs(np.asarray(a, dtype=float)))) for a in arrays])


def _close(a, b, pol: ScalarPolicy, scale: float) -> bool:
    if pol.exact:
        return all(x == y for x, y in zip(a, b))
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.max(np.abs(diff))) <= VERIFY_RTOL * scale


def _vanishes(x, pol: ScalarPolicy, scale: float) -> bool:
    if pol.exact:
        return all(v == 0 for v in np.asarray(x).reshape(-1))
    return float(np.max(np.abs(np.asarray(x, dtype=float)))) <= VERIFY_RTOL * scale


def product_with_peak(sys: LtvSystem, schedule: FeedbackSchedule):
    """Closed-loop product and the largest entry of any partial product."""
    P = sys.policy.eye(sys.n)
    peak = 1.0
    for i, g in enumerate(schedule.gains):
        P = closed_loop_matrix(sys, schedule.k_start + i, g).dot(P)
        peak = max(peak, _peak([P]))
    return P, peak


def _is_zero_vector(x, pol: ScalarPolicy, scale: float = 1.0) -> bool:
    return all(pol.is_zero(v, scale) for v in x)


@dataclass(frozen=True, eq=False)
class StateNullification:
    schedule: FeedbackSchedule
    trajectory: Trajectory
    k0: StabilizationIndex | None
    trace: ConstructionTrace | None
    realization: Realization | None

    @property
    def steps(self) -> int:
        return len(self.schedule)


def _canonical_for(sys: LtvSystem, k: int, horizon: int) -> CanonicalResult:
    if sys.periodic:
        return canonical_transform(sys)
    return canonical_transform(sys, (k, k + horizon))


def check_preconditions(sys: LtvSystem, k: int, horizon: int) -> None:
    """Observability and nonzero decoupling term over the working window."""
    if sys.periodic:
        window = (sys.k_min, sys.k_max)
    else:
        window = (k, k + horizon)
    obs = is_completely_observable(sys, window)
    if not obs:
        raise NullificationError("precondition",
                                 f"not completely observable at k = {obs.failures[0]}")


def nullify_state(sys: LtvSystem, k: int, x0, seed: int = 0, horizon: int | None = None,
                  shortest: bool = True, canonical: CanonicalResult | None = None,
                  check: bool = True) -> StateNullification:
    """Gains driving ``x0`` at time ``k`` to the origin.

    The construction runs in canonical coordinates; the gains carry over
    unchanged because the output is coordinate free.  With ``shortest`` the
    cutoffs ``0, 1, ..., k0`` are tried in turn and the first admissible one
    is used; the guaranteed one is ``k0`` itself.
    """
    n, pol = sys.n, sys.policy
    horizon = default_horizon(n) if horizon is None else horizon
    x0 = pol.array(x0).reshape(-1)
    if x0.shape != (n,):
        raise ValueError(f"initial state has length {x0.size}, expected {n}")
    if _is_zero_vector(x0, pol, 1.0):
        schedule = FeedbackSchedule(k, (pol.scalar(0),))
        return StateNullification(schedule, simulate(sys, k, x0, feedback=schedule),
                                  None, None, None)
    if check:
        check_preconditions(sys, k, horizon)
    try:
        canon = canonical or _canonical_for(sys, k, horizon)
    except (NotControllableError, IndexOutOfRange) as exc:
        raise NullificationError("canonical_transform", str(exc)) from exc
    z0 = canon.transform.at(k).dot(x0)
    try:
        trace = build_construction(canon.system, k, z0, horizon)
    except ValueError as exc:
        raise NullificationError("build_construction", str(exc)) from exc
    k0 = find_k0(trace)
    if not k0.structure_ok:
        raise NullificationError("find_k0", f"entries at k0 = {k0.k0} are not zero/bare: "
                                            f"{k0.violations[:3]}")
    realization = None
    if shortest:
        for cutoff in range(0, k0.k0):
            try:
                realization = realize(trace, k0.k0, seed, cutoff=cutoff, rounds=2)
                break
            except NullificationError:
                continue
    if realization is None:
        realization = realize(trace, k0.k0, seed)
    schedule = extract_feedback(canon.system, trace, realization)
    traj = simulate(sys, k, x0, feedback=schedule)
    if not _vanishes(traj.final, pol, _peak(traj.states)):
        raise NullificationError("verify", f"final state {traj.final} is not zero")
    return StateNullification(schedule, traj, k0, trace, realization)


@dataclass(frozen=True, eq=False)
class AllNullification:
    schedule: FeedbackSchedule
    segments: tuple
    product: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.schedule)


def nullify_all(sys: LtvSystem, k: int, seed: int = 0, horizon: int | None = None,
                shortest: bool = True, basis=None) -> AllNullification:
    """One gain sequence sending every state at time ``k`` to the origin.

    Segment ``i`` nullifies the image of basis vector ``v_i`` under the
    closed loop assembled so far and starts where segment ``i - 1`` ended.
    """
    n, pol = sys.n, sys.policy
    horizon = default_horizon(n) if horizon is None else horizon
    basis = pol.eye(n) if basis is None else pol.array(basis)
    check_preconditions(sys, k, n * horizon if not sys.periodic else horizon)
    canon = _canonical_for(sys, k, n * horizon) if sys.periodic else None
    P = pol.eye(n)
    t = k
    schedule = None
    segments = []
    for i in range(n):
        v = P.dot(basis[:, i])
        if _is_zero_vector(v, pol, 1.0):
            continue
        if canon is None:
            seg = nullify_state(sys, t, v, seed=seed + i, horizon=horizon, shortest=shortest,
                                canonical=_canonical_for(sys, t, horizon), check=False)
        else:
            seg = nullify_state(sys, t, v, seed=seed + i, horizon=horizon, shortest=shortest,
                                canonical=canon, check=False)
        segments.append(seg)
        P = closed_loop_product(sys, seg.schedule).dot(P)
        schedule = seg.schedule if schedule is None else schedule.then(seg.schedule)
        t = schedule.k_end
    product, peak = product_with_peak(sys, schedule)
    if not _vanishes(product, pol, peak):
        raise NullificationError("verify", "closed-loop product is not the zero matrix")
    return AllNullification(schedule, tuple(segments), product)
