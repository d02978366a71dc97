"""
Green's functions and bad phases
================================

Off-diagonal decay of (H_N - E)^{-1}, the good-Green test, and how often an
orbit average of u_N dips below the threshold.
"""

import math

import numpy as np

from bjlab import almost_mathieu
from bjlab.greens import (bad_set_estimate, diophantine_constant, good_window_search, greens,
                          is_good_green, window_campaign)

spec = almost_mathieu(10.0)
G = greens(spec, 0.25, (1, 40), 0.0)
row = np.log10(G.block_norms()[0])
print(np.round(row[:12], 2))
print("slope per site", np.polyfit(np.arange(40), row, 1)[0], "vs", -math.log10(10.0))
print(is_good_green(G, spec.lam))

w = good_window_search(spec, 0.25, 60, 32)
print("first good j:", w.j)
print(window_campaign(spec, 60, 32, phases=64))

t, k = diophantine_constant(spec.omega, 10**5)
print(f"min k^2 ||k omega|| = {t:.4f} at k = {k}")

est = bad_set_estimate(spec, 60, 32, 0.0, phase_grid=1024, ladder=[4, 8, 16, 32])
for m, f in est.ladder.items():
    print(f"M={m:2d}  bad fraction {f:.4f}")
print("non-increasing:", est.monotone)
