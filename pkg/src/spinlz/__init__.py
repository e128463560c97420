"""Landau-Zener transitions of an arbitrary spin via Wei-Norman coordinates.

Deterministic sweeps (closed form and numerical), and transverse colored
noise (fast and slow closed forms plus Monte Carlo).
"""

from .errors import (
    CapabilityError,
    DomainError,
    ParametrizationSingularityError,
    PropagationError,
    SpinLZError,
    StiffnessError,
)
from .lz_analytic import (
    BPolynomial,
    appell_ell,
    asymptotic_wn,
    b_polynomial,
    lz_matrix,
    lz_probability,
    lz_top_row,
    stokes_phase,
)
from .noise_analytic import (
    SlowNoiseParams,
    accumulated_theta,
    bloch_tensor_decay,
    fast_noise_coefficients,
    fast_noise_matrix,
    slow_noise_matrix,
    slow_noise_quadrature,
    slow_noise_top_row,
    spectral_density,
)
from .noise_mc import NoiseConfig, NoisePath, langevin_trajectory, monte_carlo_ensemble, ou_sample_path
from .propagator import (
    DriveProfile,
    IntegrationWindow,
    RiccatiPath,
    TransitionMatrix,
    lz_numeric_probabilities,
    propagate_direct,
    solve_fundamental,
    solve_riccati,
)
from .su2_algebra import SpinValue, clebsch_gordan, spin_matrices, spin_tensor
from .wei_norman import WNCoordinates, extract_wn_from_fundamental, represent, scattering_matrix

__version__ = "0.1.0"
