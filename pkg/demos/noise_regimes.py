"""Colored transverse noise in the two limits with closed forms.

Fast noise (short correlation time) dephases Bloch tensors; slow noise acts
as a random static coupling. Each Monte Carlo estimate is printed next to
its closed form with the Monte Carlo standard error.

    python demos/noise_regimes.py [n_traj]
"""

import math
import sys

import numpy as np

from spinlz import (
    IntegrationWindow,
    NoiseConfig,
    SlowNoiseParams,
    accumulated_theta,
    fast_noise_matrix,
    monte_carlo_ensemble,
    slow_noise_matrix,
)

n_traj = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
two_s, v, eta = 1, 1.0, math.sqrt(0.1)
window = IntegrationWindow.symmetric(60.0)


def report(label, mc, ref):
    z = (mc.p[0, 0] - ref) / mc.stderr[0, 0]
    print(f"{label}: P(up -> up) = {mc.p[0, 0]:.4f} +- {mc.stderr[0, 0]:.4f}, closed form {ref:.4f}, z = {z:+.2f}")


# fast: gamma^2 = 400 >> v, single noise component
cfg = NoiseConfig(eta, gamma=20.0, components="X", seed=1, n_traj=n_traj)
theta = float(accumulated_theta(eta, cfg.gamma, v, np.inf, convention="doubled"))
report("fast noise", monte_carlo_ensemble(two_s, v, cfg, window), fast_noise_matrix(two_s, theta).p[0, 0])

# slow: gamma^2 = 1e-4 << v, both components (a random complex coupling)
cfg = NoiseConfig(eta, gamma=0.01, components="XY", seed=2, n_traj=n_traj)
report("slow noise", monte_carlo_ensemble(two_s, v, cfg, window), slow_noise_matrix(two_s, SlowNoiseParams(eta, v, 2)).p[0, 0])
