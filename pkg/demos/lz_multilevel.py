"""Multi-level Landau-Zener sweep: closed form vs. numerical propagation.

A spin S in the field (2 Delta, 0, 2 v t) is a ladder of 2S+1 levels that
all cross at t = 0. The 2x2 propagator fixes the whole (2S+1)-dimensional
one, so the closed form needs only delta = Delta^2 / v.

    python demos/lz_multilevel.py
"""

import math

import numpy as np

from spinlz import lz_matrix, lz_numeric_probabilities

np.set_printoptions(precision=5, suppress=True)

two_s = 3
for delta in (0.1, 0.5, 2.0):
    exact = lz_matrix(two_s, delta)
    numeric = lz_numeric_probabilities(two_s, delta)
    print(f"S = {two_s}/2, delta = {delta}")
    print(exact.p)
    print(f"  max |closed form - numeric| = {np.abs(exact.p - numeric.p).max():.1e}\n")

# the top row is binomial: each of the 2S constituent spin-1/2s flips independently
b = math.exp(-math.pi * 0.5)
binomial = [math.comb(two_s, k) * (1 - b) ** k * b ** (two_s - k) for k in range(two_s + 1)]
print("top row at delta = 0.5:", lz_matrix(two_s, 0.5).p[0])
print("binomial               ", np.array(binomial))
