"""
Canonical form and output-feedback nullification
================================================

A period-2 system with integer data is brought to controller canonical form,
then one initial state and afterwards every initial state is driven to the
origin with a memoryless output feedback ``u_k = F_k y_k``.  All arithmetic is
exact.
"""

import numpy as np

from ltvnull import (
    LtvSystem,
    canonical_transform,
    decoupling_term,
    nullify_all,
    nullify_state,
)
from ltvnull.nullifier import all_states_bound, state_bound
from ltvnull.system import closed_loop_product

sys = LtvSystem.from_steps([
    ([[1, 2, 0], [0, 1, 1], [1, 0, 0]], [0, 1, 1], [1, 0, 1]),
    ([[0, 1, 0], [-1, 0, 2], [0, 1, 1]], [1, 0, 1], [1, 1, 0]),
], periodic=True)

print("decoupling term c adj(A) b per index:",
      [str(decoupling_term(sys, k)) for k in sys.indices()])

###############################################################################
# Canonical form.  Rows of the companion matrices carry the time variation.
canon = canonical_transform(sys)
for k in canon.system.indices():
    print(f"k={k}  last row {[str(v) for v in canon.system.A_at(k)[-1]]}  "
          f"c~ {[str(v) for v in canon.system.c_at(k)]}")
print("residual of T_{k+1} A_k T_k^-1 against the imposed structure:", canon.residual)

###############################################################################
# One state.  The gains are read off a realization of the symbolic trace.
x0 = [2, -1, 3]
one = nullify_state(sys, 0, x0, seed=0)
print(f"\nstate {x0}: {one.steps} steps (bound {state_bound(3)}), k0 = {one.k0.k0}")
for k, x in enumerate(one.trajectory.states):
    print(f"  x_{k} = {[str(v) for v in x]}")

###############################################################################
# Every state at once: the closed-loop transition matrix is exactly zero.
full = nullify_all(sys, 0, seed=0)
P = closed_loop_product(sys, full.schedule)
print(f"\nall states: {full.steps} steps (bound {all_states_bound(3)})")
print("gains:", [str(g) for g in full.schedule.gains])
print("closed-loop product is zero:", not np.any(P != 0))
