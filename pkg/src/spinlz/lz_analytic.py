"""Closed-form Landau-Zener results for arbitrary spin.

With a = 1 - exp(-pi*delta) and b = exp(-pi*delta), the asymptotic
probability of m' -> m (m' >= m, m' + m >= 0) is

    (-1)^(S-m') (S+m')!/(S-m')! a^(m'-m) b^(m'+m) / ((m'-m)! (m'+m)!)
        * F4(-(S-m'), S+m'+1; m'-m+1, m'+m+1; a^2, b^2)

The sign factor follows from writing the squared Gauss series of the
scattering matrix as a single Appell F4 (Bailey's product formula plus the
terminating connection formula); without it intermediate entries come out
negative. Other orderings follow from P(m'->m) = P(m->m') = P(-m->-m').
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import DomainError
from .propagator import TransitionMatrix
from .special import appell_f4_terminating, loggamma
from .su2_algebra import as_spin, check_projection


def stokes_phase(delta_param):
    """pi/4 + arg Gamma(1 - i delta) + delta (ln delta - 1)."""
    if delta_param < 0:
        raise DomainError("delta_param must be non-negative")
    if delta_param == 0:
        return math.pi / 4
    return math.pi / 4 + loggamma(1 - 1j * delta_param).imag + delta_param * (math.log(delta_param) - 1)


@dataclass(frozen=True)
class AsymptoticParams:
    delta_param: float
    chi: float
    phi: float
    a: float
    b: float
    f_inf: complex
    h_inf: float
    g_inf: complex

    @property
    def coordinates(self):
        from .wei_norman import WNCoordinates

        return WNCoordinates(self.f_inf, math.exp(self.h_inf / 2), self.g_inf)


def asymptotic_wn(delta_param):
    """Wei-Norman coordinates at t -> +infinity for an LZ sweep from -infinity."""
    if delta_param < 0:
        raise DomainError("delta_param must be non-negative")
    x = math.pi * delta_param
    chi = math.sqrt(2 * math.sinh(x / 2)) * math.exp(x / 4)
    phi = stokes_phase(delta_param)
    b = math.exp(-x)
    return AsymptoticParams(
        delta_param=delta_param,
        chi=chi,
        phi=phi,
        a=-math.expm1(-x),
        b=b,
        f_inf=chi * complex(math.cos(phi), -math.sin(phi)),
        h_inf=-x,
        g_inf=-chi * complex(math.cos(phi), math.sin(phi)),
    )


def _canonical_pair(two_s, two_from, two_to):
    """Map (m', m) onto an equivalent pair with m' >= m and m' + m >= 0."""
    check_projection(two_s, two_from)
    check_projection(two_s, two_to)
    hi, lo = max(two_from, two_to), min(two_from, two_to)
    if hi + lo < 0:
        hi, lo = -lo, -hi
    return hi, lo


def _eq36_parts(two_s, hi, lo):
    """Sign * integer prefactor and F4 parameters for the canonical pair."""
    n = (two_s - hi) // 2
    p = (hi - lo) // 2
    q = (hi + lo) // 2
    fac = math.factorial
    pref = Fraction(fac((two_s + hi) // 2), fac(n) * fac(p) * fac(q))
    sign = -1 if n % 2 else 1
    return sign * pref, n, p, q, (two_s + hi) // 2 + 1


def lz_probability(s, two_m_from, two_m_to, delta_param):
    """Asymptotic LZ probability m_from -> m_to (projections doubled).

    ``delta_param`` may be an array.
    """
    s = as_spin(s)
    delta = np.asarray(delta_param, dtype=float)
    if np.any(delta < 0):
        raise DomainError("delta_param must be non-negative")
    hi, lo = _canonical_pair(s.two_s, two_m_from, two_m_to)
    pref, n, p, q, beta = _eq36_parts(s.two_s, hi, lo)
    b = np.exp(-np.pi * delta)
    a = -np.expm1(-np.pi * delta)
    f4 = appell_f4_terminating(-n, beta, p + 1, q + 1, a * a, b * b)
    out = float(pref) * a**p * b**q * f4
    return out[()] if out.ndim == 0 else out


def appell_ell(s, two_m_from, two_m_to, delta_param):
    """The Appell factor F4(-(S-m'), S+m'+1; m'-m+1, m'+m+1; a^2, b^2).

    Defined for the canonical ordering m' >= m, m' + m >= 0 (m' = from);
    it is identically 1 when m' = S.
    """
    s = as_spin(s)
    hi, lo = two_m_from, two_m_to
    if hi < lo or hi + lo < 0:
        raise DomainError("appell_ell needs m_from >= m_to and m_from + m_to >= 0")
    check_projection(s.two_s, hi)
    check_projection(s.two_s, lo)
    _, n, p, q, beta = _eq36_parts(s.two_s, hi, lo)
    b = np.exp(-np.pi * np.asarray(delta_param, dtype=float))
    a = 1 - b
    out = appell_f4_terminating(-n, beta, p + 1, q + 1, a * a, b * b)
    return out[()] if np.ndim(out) == 0 else out


def lz_top_row(s, two_m_to, delta_param):
    """P(S -> m) = (2S)! a^(S-m) b^(S+m) / ((S-m)! (S+m)!)."""
    s = as_spin(s)
    check_projection(s.two_s, two_m_to)
    b = np.exp(-np.pi * np.asarray(delta_param, dtype=float))
    a = -np.expm1(-np.pi * np.asarray(delta_param, dtype=float))
    up, down = (s.two_s - two_m_to) // 2, (s.two_s + two_m_to) // 2
    return math.comb(s.two_s, up) * a**up * b**down


def lz_matrix(s, delta_param):
    """Full asymptotic transition matrix as a TransitionMatrix."""
    s = as_spin(s)
    p = np.array([[lz_probability(s, i, j, delta_param) for j in s.two_m] for i in s.two_m])
    return TransitionMatrix(s, p)


# --- polynomials in b ----------------------------------------------------


def _pmul(x, y):
    out = [Fraction(0)] * (len(x) + len(y) - 1)
    for i, xi in enumerate(x):
        if xi:
            for j, yj in enumerate(y):
                out[i + j] += xi * yj
    return out


def _ppow(x, k):
    out = [Fraction(1)]
    for _ in range(k):
        out = _pmul(out, x)
    return out


def _padd(x, y):
    n = max(len(x), len(y))
    return [(x[i] if i < len(x) else 0) + (y[i] if i < len(y) else 0) for i in range(n)]


@dataclass(frozen=True)
class BPolynomial:
    """Probability as a polynomial in b = exp(-pi delta); coeffs[n] multiplies b^n."""

    coeffs: tuple

    def __call__(self, b):
        b = np.asarray(b, dtype=float)
        out = np.zeros_like(b)
        for c in reversed(self.coeffs):
            out = out * b + float(c)
        return out[()] if out.ndim == 0 else out

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def map_monomials(self, func):
        """Sum of c_n * func(n): replaces each b^n by ``func(n)`` (b^0 stays 1)."""
        return float(self.coeffs[0]) + sum(float(c) * func(n) for n, c in enumerate(self.coeffs) if n and c)


def b_polynomial(s, two_m_from, two_m_to):
    """Exact coefficients of the LZ probability as a polynomial in b."""
    s = as_spin(s)
    hi, lo = _canonical_pair(s.two_s, two_m_from, two_m_to)
    pref, n, p, q, beta = _eq36_parts(s.two_s, hi, lo)
    one_minus_b = [Fraction(1), Fraction(-1)]
    a2, b2 = _ppow(one_minus_b, 2), [Fraction(0), Fraction(0), Fraction(1)]
    f4 = [Fraction(0)]
    # same double sum as appell_f4_terminating, in exact arithmetic
    row = Fraction(1)
    for j in range(n + 1):
        term = row
        for k in range(n - j + 1):
            f4 = _padd(f4, _pmul([term], _pmul(_ppow(a2, j), _ppow(b2, k))))
            pp = j + k
            term = term * Fraction((pp - n) * (beta + pp), (q + 1 + k) * (k + 1))
        row = row * Fraction((j - n) * (beta + j), (p + 1 + j) * (j + 1))
    poly = _pmul([pref], _pmul(_ppow(one_minus_b, p), _pmul([Fraction(0)] * q + [Fraction(1)], f4)))
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return BPolynomial(tuple(poly))
