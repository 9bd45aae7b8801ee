"""
A sampled system whose decoupling term vanishes
===============================================

With ``A = 0``, ``b = (1 - n, 2t, ..., n t^(n-1))`` and
``c_i = -(t/k)^(n-i) / ((k+1)^i - k^i)`` the sampled system keeps a
nonsingular controllability matrix at index ``k`` for every period while
``c_d(k) adj(A_d(k)) b_d(k)`` is identically zero.  The sufficient condition
used by the nullification procedure therefore fails without any loss of
controllability.

The second half checks the two combinatorial facts behind controllability
preservation under sampling.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np

from ltvnull.sampling import (
    coeff_matrix_det,
    delta_sweep,
    f_derivative_check,
    vanishing_decoupling_example,
)

for n, k in ((2, 1), (3, 2)):
    report = delta_sweep(vanishing_decoupling_example(n, k), np.linspace(0.2, 2.0, 6), (k, k))
    print(f"n={n}, k={k}")
    for p in report.points:
        print(f"  delta={p.delta:4.2f}  decoupling={p.decoupling: .1e}  "
              f"min_sv(W)={p.min_sv:.3e}")

###############################################################################
# det((k+i)^{m_j} - (k+i-1)^{m_j}) is positive for k >= 0.
smallest = min(coeff_matrix_det(k, m)
               for n in range(1, 5) for m in combinations(range(1, 9), n)
               for k in (Fraction(0), Fraction(1, 2), Fraction(3)))
print("\nsmallest coefficient determinant over the grid:", smallest)

###############################################################################
# Derivatives of f(delta) at zero, both sides exact for polynomial psi.
for psi, m in ((["1", "t"], 3), (["1", "t", "t^2"], 6), (["1 + t", "t^3"], 5)):
    chk = f_derivative_check(psi, 1, m)
    print(f"psi={psi}, m={m}: lhs={chk.lhs}, rhs={chk.rhs}")
