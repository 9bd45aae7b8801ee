"""
Sampling the harmonic oscillator
================================

``x' = [[0, 1], [-1, 0]] x + (0, 1) u`` is controllable, but its
zero-order-hold sampled version loses controllability when the sampling
period is a multiple of pi.  The sweep shows the smallest singular value of
``W_k`` collapsing at ``delta = pi`` and nowhere else on the grid.
"""

import numpy as np

from ltvnull.sampling import delta_sweep, discretize, rotation_system

ct = rotation_system()

###############################################################################
# The sampled input vector has the closed form (1 - cos d, sin d).
for d in (0.5, 1.0, 2.0):
    b = discretize(ct, d, (0, 0)).system.b_at(0)
    err = np.abs(b - [1 - np.cos(d), np.sin(d)]).max()
    print(f"delta={d:4.2f}  b_d={b}  error {err:.1e}")

###############################################################################
# Sweep a grid that contains pi.
grid = np.sort(np.append(np.linspace(0.25, 3.5, 14), np.pi))
report = delta_sweep(ct, grid)
print("\n delta     min_sv     verdict")
for p in report.points:
    print(f"{p.delta:6.3f}  {p.min_sv:10.3e}  {'controllable' if p.controllable else 'singular'}")
print("\nperiods without full rank:", report.failures())
