"""Special functions: terminating hypergeometric series and complex log-gamma.

All series here terminate because their first numerator parameter is a
non-positive integer, so they are evaluated as exact finite sums with
Pochhammer recurrences. Arguments may be numpy arrays (broadcast elementwise).
"""

import cmath
import math

import numpy as np

from .errors import DomainError

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Bernoulli numbers B_2k for the Stirling series.
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def _check_terminating(neg_n):
    if int(neg_n) != neg_n or neg_n > 0:
        raise DomainError(f"first parameter must be a non-positive integer, got {neg_n}")
    return -int(neg_n)


def _check_no_pole(c, n, name="c"):
    # (c)_k vanishes for some k < n when c is one of 0, -1, ..., -(n - 1)
    if float(c).is_integer() and -(n - 1) <= c <= 0 and n > 0:
        raise DomainError(f"{name} = {c} produces a pole inside the truncated series")


def gauss2f1_terminating(neg_n, b, c, z):
    """Terminating Gauss series 2F1(-n, b; c; z) as an exact finite sum."""
    n = _check_terminating(neg_n)
    _check_no_pole(c, n)
    z = np.asarray(z)
    term = np.ones_like(z, dtype=complex if np.iscomplexobj(z) else float)
    total = term.copy()
    for k in range(n):
        term = term * ((k - n) * (b + k) / ((c + k) * (k + 1))) * z
        total = total + term
    return total[()] if total.ndim == 0 else total


def appell_f4_terminating(neg_n, beta, c1, c2, x, y):
    """Terminating Appell F4(-n, beta; c1, c2; x, y).

    Double sum over j + k <= n of
    (-n)_{j+k} (beta)_{j+k} / ((c1)_j (c2)_k j! k!) x^j y^k.
    """
    n = _check_terminating(neg_n)
    _check_no_pole(c1, n, "c1")
    _check_no_pole(c2, n, "c2")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    # row_coef tracks (-n)_j (beta)_j / ((c1)_j j!) x^j
    row = np.ones_like(total)
    for j in range(n + 1):
        term = row.copy()
        for k in range(n - j + 1):
            total = total + term
            p = j + k
            term = term * ((p - n) * (beta + p) / ((c2 + k) * (k + 1))) * y
        row = row * ((j - n) * (beta + j) / ((c1 + j) * (j + 1))) * x
    return total[()] if total.ndim == 0 else total


def loggamma(z):
    """Complex log-gamma via the Lanczos approximation (g = 7, 9 terms).

    For Re z < 1/2 the argument is pushed to the right by the upward
    recurrence rather than by reflection, so the result stays on the
    continuous branch obtained by summing principal logarithms.
    """
    z = complex(z)
    if z.real <= 0 and z.imag == 0 and z.real.is_integer():
        raise DomainError(f"log-gamma has a pole at z = {z.real}")
    shift = 0.0
    while z.real < 0.5:
        shift += cmath.log(z)
        z += 1.0
    zm1 = z - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (zm1 + k)
    t = zm1 + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm1 + 0.5) * cmath.log(t) - t + cmath.log(acc) - shift


def loggamma_stirling(z, shift_to=20.0):
    """Complex log-gamma by the Stirling series after upward recurrence.

    Independent of :func:`loggamma`; used to cross-check it.
    """
    z = complex(z)
    if z.real <= 0 and z.imag == 0 and z.real.is_integer():
        raise DomainError(f"log-gamma has a pole at z = {z.real}")
    acc = 0.0
    while abs(z) < shift_to or z.real < 1.0:
        acc += cmath.log(z)
        z += 1.0
    series = 0.0
    zpow = z
    z2 = z * z
    for k, b2k in enumerate(_BERNOULLI, start=1):
        series += b2k / (2 * k * (2 * k - 1) * zpow)
        zpow *= z2
    return (z - 0.5) * cmath.log(z) - z + _HALF_LOG_2PI + series - acc
