"""
Operator, Dirichlet matrices and minors
=======================================

Build the almost Mathieu operator, look at a small Dirichlet matrix, expand
one of its minors as a sum over path systems and fit the constant in the
minor upper bound.
"""

import numpy as np

from bjlab import almost_mathieu, cosine_band, dirichlet_matrix
from bjlab.minors import enumerate_paths, minor_bound_cells, minor_direct, minor_via_paths

np.set_printoptions(precision=3, suppress=True, linewidth=110)

spec = almost_mathieu(10.0)
print(spec.l, spec.lam, spec.omega)

# block n sits at phase x + n omega, so a one-site box at x = 0 is 2 lambda
print(dirichlet_matrix(spec, 0.0, (0, 0)).entries)

D = dirichlet_matrix(spec, 0.1234, (1, 6), E=0.5)
print(D.entries)

# minors: direct determinant against the path expansion
g = D.entries
for a, b in [(1, 4), (6, 2), (3, 5)]:
    paths = list(enumerate_paths(g.shape[0], b, a))
    print(f"({a},{b}): direct {minor_direct(g, a, b):+.6e}  paths {minor_via_paths(g, a, b):+.6e}"
          f"  ({len(paths)} path systems)")

# integer matrices are expanded exactly
gi = np.array([[2, -1, 0], [3, 1, 4], [0, -2, 5]])
print(minor_direct(gi, 2, 3, exact=True), minor_via_paths(gi, 2, 3, exact=True))

# the constant C in log|minor| / (N l) <= (1 - |n - n'| / (N l)) log|lambda| + C
xs = np.arange(64) / 64
for make, name in [(almost_mathieu, "amo"), (lambda lam: cosine_band(lam, hopping=0.3), "block l=2")]:
    for lam in (10.0, 100.0, 1000.0):
        row = []
        for N in (8, 16):
            C, _ = minor_bound_cells(make(lam), N, 0.0, xs)
            row.append(C[np.isfinite(C)].max())
        print(f"{name:10s} lambda={lam:7g}  max C: N=8 {row[0]:+.4f}  N=16 {row[1]:+.4f}")

# C drifts like -log(lambda) / (N l): a minor has one row fewer than the
# determinant, which the leading term does not account for.
