"""
Localization signatures
=======================

Eigenvectors of a 300-site box, their decay rates, and the Lyapunov exponent
of the transfer cocycle.  At lambda = 10 the exact rate is log 10.
"""

import math

import numpy as np

from bjlab import almost_mathieu
from bjlab.localization import (decay_rate, eigensolve, localization_campaign, lyapunov_diagnostic,
                                surrogate_eigenvector, distance_to_spectrum_check)

for lam in (10.0, 0.1):
    rep = localization_campaign(almost_mathieu(lam), 300, 0.1234)
    print(f"lambda={lam:5g}  well inside {rep.n_well_inside:3d}  passing {rep.fraction:.3f}"
          f"  median rate {rep.median_rate:.3f}")

pairs = eigensolve(almost_mathieu(10.0), 0.1234, (1, 300))
p = min(pairs, key=lambda q: abs(q.peak - 150))
norms = np.linalg.norm(p.psi, axis=1)
print(p.E, p.peak, np.round(np.log10(norms[p.peak - 6:p.peak + 5]), 1))
print(decay_rate(p.psi))

res = lyapunov_diagnostic(almost_mathieu(10.0), 0.0, 100_000)
print(f"gamma = {res.exponents[0]:.5f}   log 10 = {math.log(10):.5f}")

# a box eigenvector of a localized operator is nearly an eigenvector of a larger box
spec = almost_mathieu(10.0)
s = surrogate_eigenvector(spec, 0.1234, 10)
print(s.E, s.eta)
print(distance_to_spectrum_check(spec, 0.1234, 10, s.E, s.eta))
