"""Seeded random test systems with small integer entries."""

from __future__ import annotations

import numpy as np

from .scalar import ScalarPolicy
from .system import (
    LtvSystem,
    decoupling_term,
    is_completely_controllable,
    is_completely_observable,
)


def random_periodic(rng: np.random.Generator, n: int, period: int, bound: int = 3,
                    policy: ScalarPolicy | None = None) -> LtvSystem:
    """Entries drawn uniformly from ``[-bound, bound]``; no filtering."""
    steps = [(rng.integers(-bound, bound + 1, (n, n)),
              rng.integers(-bound, bound + 1, n),
              rng.integers(-bound, bound + 1, n)) for _ in range(period)]
    return LtvSystem.from_steps(steps, periodic=True, policy=policy)


def random_nullifiable(rng: np.random.Generator, n: int, period: int | None = None,
                       bound: int = 3, controllable_only: bool = False,
                       max_tries: int = 10_000) -> LtvSystem:
    """Rejection-sample a periodic system satisfying the nullification hypotheses.

    The result is completely controllable and, unless ``controllable_only``,
    also completely observable with a nonzero decoupling term at every index.
    ``period`` defaults to a draw from ``1..3``.
    """
    for _ in range(max_tries):
        p = int(rng.integers(1, 4)) if period is None else period
        sys = random_periodic(rng, n, p, bound)
        if not is_completely_controllable(sys):
            continue
        if controllable_only:
            return sys
        if not is_completely_observable(sys):
            continue
        if any(decoupling_term(sys, k) == 0 for k in sys.indices()):
            continue
        return sys
    raise RuntimeError(f"no admissible system found in {max_tries} draws")
