"""
Dirichlet determinants and their averages
=========================================

u_N(z) = log|det(H_N(z) - E)| / (N l) on the torus and on nearby circles.
"""

import math

import numpy as np

from bjlab import almost_mathieu, cosine_band
from bjlab.determinants import (epsilon0_scan, hadamard_upper_check, hardy_convexity_check,
                                phase_average, u_phase, u_value)

spec = almost_mathieu(100.0)
xs = np.linspace(0, 1, 9)
print(np.round(u_phase(spec, xs, 16, 0.0), 4))
print(u_value(spec, 1.1 * np.exp(2j * math.pi * 0.3), 16, 0.0))

# the phase average approaches log(lambda) from below: int log|2 cos| = 0 for N = 1
for N in (1, 4, 16):
    avg, sentinels = phase_average(spec, N, 0.0)
    print(f"N={N:2d}  average {avg:.6f}  deficit {math.log(100.0) - avg:+.2e}  sentinels {sentinels}")

# Hadamard: u_N never exceeds the row-norm bound
rep = hadamard_upper_check(almost_mathieu(10.0), 16, 0.0, check_doubling=False)
print(rep.verdict, rep.summary["max_gap"], rep.summary["max_violation"])

# radial means are convex in log s
for s in (almost_mathieu(10.0), cosine_band(20.0, hopping=0.3)):
    rep = hardy_convexity_check(s, 8, 0.0)
    print(rep.verdict, np.round(rep.summary["means"], 6), f"{rep.summary['max_defect']:.1e}")

# a circle on which det[F(z) - t] stays away from zero
scan = epsilon0_scan(cosine_band(10.0).F, delta=0.1, t_range=(-1.5, 1.5))
print(f"y0 = {scan.y0:.4f}  eps0 = {scan.eps0:.6f}")
