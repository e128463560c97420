"""Building a spin-S propagator from three complex numbers.

Any SU(2) evolution factors as exp(f S-) exp(h Sz) exp(g S+). The triple
(f, e^{h/2}, g) read off the 2x2 propagator fixes the evolution in every
representation, so a spin-S problem costs a spin-1/2 solve.

    python demos/wei_norman_tour.py
"""

import numpy as np

from spinlz import (
    DriveProfile,
    IntegrationWindow,
    extract_wn_from_fundamental,
    propagate_direct,
    scattering_matrix,
    solve_fundamental,
    spin_matrices,
)
from spinlz.su2_algebra import lz_hamiltonian_tensor

# 1. the sweep Hamiltonian is a rank-1 spin tensor
two_s, delta, v, t = 3, 0.4, 1.0, 0.7
m = spin_matrices(two_s)
direct = 2 * delta * m["Sx"] + 2 * v * t * m["Sz"]
print("tensor-built Hamiltonian error:", np.abs(lz_hamiltonian_tensor(two_s, delta, v, t) - direct).max())


# 2. an arbitrary smooth drive, solved once in 2x2
def drive_fn(t):
    t = np.asarray(t)
    return np.stack([1.2 * np.cos(0.9 * t), 0.4 * np.sin(1.7 * t), 0.5 * t])


drive = DriveProfile.from_callable(drive_fn)
window = IntegrationWindow(-4.0, 4.0)
q = extract_wn_from_fundamental(solve_fundamental(drive, window))
print(f"f = {q.f:.6f}\ns_half = {q.s_half:.6f}\ng = {q.g:.6f}")

# 3. the same triple gives every spin; compare with brute-force integration
for two_s in (1, 2, 4, 6):
    u = scattering_matrix(two_s, q).u
    err = np.abs(u - propagate_direct(two_s, drive, window)).max()
    print(f"2S = {two_s}: |U(from coordinates) - U(direct)| = {err:.1e}, unitarity {np.abs(u.conj().T @ u - np.eye(two_s + 1)).max():.1e}")
