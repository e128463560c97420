"""SU(2) representation primitives.

Spins and projections are passed around as doubled integers (``two_s = 2S``,
``two_m = 2m``) so half-integer values never go through floating point.
Every matrix uses the basis ordering m = +S, S-1, ..., -S (row/column 0 is
the top state).
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, order=True)
class SpinValue:
    """Spin S stored as the integer 2S."""

    two_s: int

    def __post_init__(self):
        if int(self.two_s) != self.two_s or self.two_s < 1:
            raise DomainError(f"two_s must be a positive integer, got {self.two_s!r}")
        object.__setattr__(self, "two_s", int(self.two_s))

    @classmethod
    def from_float(cls, s):
        two_s = 2 * float(s)
        if not math.isfinite(two_s) or abs(two_s - round(two_s)) > 1e-9:
            raise DomainError(f"{s} is not a half-integer")
        return cls(int(round(two_s)))

    @property
    def s(self):
        return self.two_s / 2

    @property
    def dim(self):
        return self.two_s + 1

    @property
    def two_m(self):
        """Doubled projections in basis order, +2S down to -2S."""
        return tuple(range(self.two_s, -self.two_s - 1, -2))

    def index(self, two_m):
        """Row/column index of the projection ``two_m``."""
        check_projection(self.two_s, two_m)
        return (self.two_s - two_m) // 2

    def __str__(self):
        return f"{self.two_s}/2" if self.two_s % 2 else str(self.two_s // 2)


def as_spin(s):
    """Coerce an int (taken as 2S) or a SpinValue to SpinValue."""
    return s if isinstance(s, SpinValue) else SpinValue(s)


def check_projection(two_j, two_m):
    if abs(two_m) > two_j or (two_j - two_m) % 2:
        raise DomainError(f"invalid projection 2m={two_m} for 2j={two_j}")


def _half(x2):
    # doubled value known to be even -> plain integer
    return x2 // 2


@lru_cache(maxsize=None)
def clebsch_gordan_exact(two_j1, two_m1, two_j2, two_m2, two_J, two_M):
    """Exact Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> (Condon-Shortley).

    Returns ``(sign, square)`` with ``square`` a Fraction, so that the
    coefficient equals ``sign * sqrt(square)``. Racah's closed sum is evaluated
    in rational arithmetic.
    """
    for tj, tm in ((two_j1, two_m1), (two_j2, two_m2), (two_J, two_M)):
        if tj < 0:
            raise DomainError(f"negative angular momentum 2j={tj}")
        check_projection(tj, tm)
    if two_M != two_m1 + two_m2:
        return 0, Fraction(0)
    if not abs(two_j1 - two_j2) <= two_J <= two_j1 + two_j2 or (two_j1 + two_j2 + two_J) % 2:
        return 0, Fraction(0)

    f = math.factorial
    a = _half(two_j1 + two_j2 - two_J)
    b = _half(two_j1 - two_m1)
    c = _half(two_j2 + two_m2)
    d = _half(two_J - two_j2 + two_m1)
    e = _half(two_J - two_j1 - two_m2)
    prefactor = Fraction(
        (two_J + 1)
        * f(_half(two_J + two_j1 - two_j2))
        * f(_half(two_J - two_j1 + two_j2))
        * f(a),
        f(_half(two_j1 + two_j2 + two_J) + 1),
    )
    prefactor *= (
        f(_half(two_J + two_M))
        * f(_half(two_J - two_M))
        * f(b)
        * f(_half(two_j1 + two_m1))
        * f(_half(two_j2 - two_m2))
        * f(c)
    )
    total = Fraction(0)
    for k in range(max(0, -d, -e), min(a, b, c) + 1):
        denom = f(k) * f(a - k) * f(b - k) * f(c - k) * f(d + k) * f(e + k)
        total += Fraction((-1) ** k, denom)
    if total == 0:
        return 0, Fraction(0)
    return (1 if total > 0 else -1), prefactor * total * total


def clebsch_gordan(j1, two_m1, j2, two_m2, J, two_M):
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> as a float.

    Spins may be SpinValue or doubled ints (a spin of 0 is allowed here, as the
    doubled int 0). Projections are doubled ints.
    """
    tj = [x.two_s if isinstance(x, SpinValue) else int(x) for x in (j1, j2, J)]
    sign, square = clebsch_gordan_exact(tj[0], two_m1, tj[1], two_m2, tj[2], two_M)
    return sign * math.sqrt(square)


def spin_matrices(s):
    """Dict of Sx, Sy, Sz, Splus, Sminus for spin ``s`` (complex arrays)."""
    s = as_spin(s)
    m = np.array(s.two_m) / 2
    ss = s.s
    # S+|m> = sqrt((S - m)(S + m + 1)) |m + 1>, and |m + 1> sits one row up
    ladder = np.sqrt((ss - m[1:]) * (ss + m[1:] + 1))
    splus = np.diag(ladder, k=1).astype(complex)
    sminus = splus.T.copy()
    return {
        "Sx": 0.5 * (splus + sminus),
        "Sy": -0.5j * (splus - sminus),
        "Sz": np.diag(m).astype(complex),
        "Splus": splus,
        "Sminus": sminus,
    }


def spin_tensor(s, L, M):
    """Irreducible spin tensor T_LM as a (2S+1)x(2S+1) matrix.

    [T_LM]_{m m'} = sqrt((2L+1)/(2S+1)) <S m'; L M | S m>.
    """
    s = as_spin(s)
    if not 0 <= L <= s.two_s or abs(M) > L:
        raise DomainError(f"(L, M) = ({L}, {M}) out of range for S = {s}")
    norm = math.sqrt((2 * L + 1) / s.dim)
    out = np.zeros((s.dim, s.dim))
    for j, tmp in enumerate(s.two_m):
        tm = tmp + 2 * M
        if abs(tm) <= s.two_s:
            out[s.index(tm), j] = norm * clebsch_gordan(s.two_s, tmp, 2 * L, 2 * M, s.two_s, tm)
    return out.astype(complex)


def tensor_coefficients(rho, s=None):
    """Expansion coefficients Tr(T_LM^dagger rho), keyed by (L, M)."""
    rho = np.asarray(rho)
    s = SpinValue(rho.shape[0] - 1) if s is None else as_spin(s)
    return {
        (L, M): np.vdot(spin_tensor(s, L, M), rho)
        for L in range(s.two_s + 1)
        for M in range(-L, L + 1)
    }


def tensor_reconstruct(coefficients, s):
    s = as_spin(s)
    out = np.zeros((s.dim, s.dim), dtype=complex)
    for (L, M), c in coefficients.items():
        out += c * spin_tensor(s, L, M)
    return out


def lz_alpha_coefficients(s, delta, v, t):
    """Nonzero tensor coefficients of the LZ Hamiltonian, keyed by (L, M)."""
    s = as_spin(s)
    amp = math.sqrt(s.s * (s.s + 1) * s.dim / 3)
    return {
        (0, 0): 0.0,
        (1, -1): math.sqrt(2) * delta * amp,
        (1, 1): -math.sqrt(2) * delta * amp,
        (1, 0): 2 * v * t * amp,
    }


def lz_hamiltonian_tensor(s, delta, v, t):
    """LZ Hamiltonian 2*delta*Sx + 2*v*t*Sz assembled from spin tensors."""
    return tensor_reconstruct(lz_alpha_coefficients(s, delta, v, t), s)
