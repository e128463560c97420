"""Closed-form transition matrices under transverse colored noise.

Fast noise: Bloch tensors decay as exp(-[L(L+1) - M^2] theta / 4), with theta
the accumulated spectral weight. Slow noise: the static LZ probability is
averaged over a Gaussian coupling; writing it as a polynomial in
b = exp(-pi delta) reduces the average to a map on monomials.

Noise convention: the transverse field is (2 Jx, 2 Jy, 2 v t), so a frozen
noise value J acts as an LZ coupling Delta = J with delta = J^2 / v.
"""

from dataclasses import dataclass
from fractions import Fraction
import math
import warnings

import numpy as np
from scipy.special import roots_hermite

from .errors import DomainError
from .lz_analytic import b_polynomial, lz_probability
from .propagator import TransitionMatrix
from .su2_algebra import as_spin, clebsch_gordan_exact, spin_tensor


def spectral_density(eta, gamma, omega):
    """Integral of eta^2 exp(-gamma tau) cos(omega tau) over tau > 0."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    return eta**2 * gamma / (gamma**2 + np.asarray(omega) ** 2)


THETA_CONVENTIONS = ("integral", "doubled")


def accumulated_theta(eta, gamma, v, t, t0=-np.inf, convention="integral"):
    """Accumulated phase theta(t) for the sweep omega(t) = 2 v t.

    ``integral``: 4 * int_{t0}^{t} Omega dt', whose full-sweep value is
    2 pi eta^2 / v. ``doubled``: twice that, 4 pi eta^2 / v for the full
    sweep. With the noise convention of this package, Monte Carlo with
    single-component (X) noise follows ``doubled``.
    """
    if v <= 0:
        raise DomainError("v must be positive")
    if convention not in THETA_CONVENTIONS:
        raise DomainError(f"unknown theta convention {convention!r}")
    t = np.asarray(t, dtype=float)
    # arctan form, written as a difference so t0 = -inf gives +pi/2
    base = (2 * eta**2 / v) * (np.arctan(2 * v * t / gamma) - np.arctan(2 * v * t0 / gamma))
    base = base if convention == "integral" else 2 * base
    return base[()] if base.ndim == 0 else base


def bloch_tensor_decay(s, L, M, theta):
    s = as_spin(s)
    if not 0 <= L <= s.two_s or abs(M) > L:
        raise DomainError(f"(L, M) = ({L}, {M}) out of range")
    if np.any(np.asarray(theta) < 0):
        raise DomainError("theta must be non-negative")
    return np.exp(-(L * (L + 1) - M * M) * np.asarray(theta) / 4)


def fast_noise_matrix(s, theta):
    """Fast-noise transition matrix P[m -> m'] from the Bloch-tensor decay.

    P = 1/(2S+1) + sum_{L>=1} [T_L0]_mm [T_L0]_m'm' exp(-L(L+1) theta / 4).
    """
    s = as_spin(s)
    if theta < 0:
        raise DomainError("theta must be non-negative")
    p = np.full((s.dim, s.dim), 1.0 / s.dim)
    for L in range(1, s.two_s + 1):
        diag = np.real(np.diag(spin_tensor(s, L, 0)))
        p += np.outer(diag, diag) * math.exp(-L * (L + 1) * theta / 4)
    tm = TransitionMatrix(s, p)
    tm.meta["theta"] = theta
    return tm


def _fraction_sqrt(x):
    num, den = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if num * num != x.numerator or den * den != x.denominator:
        raise ArithmeticError(f"{x} is not a rational square")
    return Fraction(num, den)


def fast_noise_coefficients(s, two_m_from, two_m_to):
    """Exact coefficients {L: c_L} with P = sum_L c_L exp(-L(L+1) theta / 4).

    Products of diagonal tensor elements are rational because T_L0 is a
    polynomial in Sz with rational coefficients up to normalisation.
    """
    s = as_spin(s)
    out = {0: Fraction(1, s.dim)}
    for L in range(1, s.two_s + 1):
        sa, qa = clebsch_gordan_exact(s.two_s, two_m_from, 2 * L, 0, s.two_s, two_m_from)
        sb, qb = clebsch_gordan_exact(s.two_s, two_m_to, 2 * L, 0, s.two_s, two_m_to)
        out[L] = sa * sb * Fraction(2 * L + 1, s.dim) * _fraction_sqrt(qa * qb)
    return out


@dataclass(frozen=True)
class SlowNoiseParams:
    eta: float
    v: float
    kappa: int = 2

    def __post_init__(self):
        if self.kappa not in (1, 2):
            raise DomainError("kappa must be 1 (X noise) or 2 (XY noise)")
        if self.eta < 0 or self.v <= 0:
            raise DomainError("need eta >= 0 and v > 0")

    def p_power(self, n):
        """Gaussian average of b^n = exp(-n pi Q^2 / v)."""
        return (1 + 2 * math.pi * n * self.eta**2 / self.v) ** (-self.kappa / 2)


def slow_noise_matrix(s, params):
    s = as_spin(s)
    p = np.array(
        [[b_polynomial(s, i, j).map_monomials(params.p_power) for j in s.two_m] for i in s.two_m]
    )
    return TransitionMatrix(s, p)


def slow_noise_top_row(s, two_m, params):
    """Top-row entry P[S -> m] as the alternating binomial sum over L."""
    s = as_spin(s)
    S2, m2 = s.two_s, two_m
    fac = math.factorial
    top = (S2 - m2) // 2
    total = 0.0
    for L in range(top + 1):
        c = (-1) ** L * fac(S2) / (fac(L) * fac((S2 + m2) // 2) * fac(top - L))
        total += c * params.p_power((S2 + m2) // 2 + L)
    return total


def slow_noise_quadrature(s, params, nodes=64, tol=1e-10, max_nodes=1024):
    """Gauss-Hermite average of the static LZ matrix over Gaussian noise.

    kappa = 1: delta = x^2 / v with x ~ N(0, eta^2); kappa = 2: delta =
    (x^2 + y^2) / v on a tensor-product grid. The node count starts at
    ``nodes`` and roughly doubles until entries move by less than ``tol``; a
    warning is issued if ``max_nodes`` is reached first. Strong noise makes
    the integrand sharply peaked at zero coupling. Refinements alternate node
    parity (odd counts put a node at zero) so that two rules which both step
    over the peak cannot agree by accident.
    """
    s = as_spin(s)
    if nodes < 20:
        raise DomainError("use at least 20 quadrature nodes")

    def run(k):
        u, w = roots_hermite(k)
        x = math.sqrt(2) * params.eta * u
        w = w / math.sqrt(math.pi)
        if params.kappa == 1:
            deltas, weights = x**2 / params.v, w
        else:
            deltas = ((x[:, None] ** 2 + x[None, :] ** 2) / params.v).ravel()
            weights = np.outer(w, w).ravel()
        return np.array(
            [[np.dot(weights, lz_probability(s, i, j, deltas)) for j in s.two_m] for i in s.two_m]
        )

    k, p = nodes, run(nodes)
    while True:
        k_next = 2 * k + 1 if k % 2 == 0 else 2 * k
        if k_next > max_nodes:
            warnings.warn(f"quadrature not converged to {tol:g} with {k} nodes")
            break
        nxt = run(k_next)
        shift = np.abs(nxt - p).max()
        k, p = k_next, nxt
        if shift < tol:
            break
    tm = TransitionMatrix(s, p)
    tm.meta["nodes"] = k
    return tm
