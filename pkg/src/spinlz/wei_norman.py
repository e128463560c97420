"""Wei-Norman coordinates and the SU(2) scattering matrix for arbitrary spin.

The time-evolution operator is factorised as

    U = exp(f S-) exp(h Sz) exp(g S+)

and its (2S+1)-dimensional matrix follows in closed form from (f, h, g) via
terminating Gauss series. ``h`` is never stored; ``s_half = exp(h/2)`` is
carried instead so every power exp(m h) is an integer power of ``s_half``.

Matrices are operator matrices <m_row| U |m_col> in the descending basis
m = S, ..., -S. In the ``U_{m,m'}`` labelling (``= <m'|U|m>``) the column is
``m`` and the row is ``m'``.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import CapabilityError, DomainError, ParametrizationSingularityError
from .special import gauss2f1_terminating
from .su2_algebra import SpinValue, as_spin, spin_matrices

MAX_TWO_S = 60


@dataclass(frozen=True)
class WNCoordinates:
    """Wei-Norman triple (f, e^{h/2}, g); fields may be numpy arrays."""

    f: complex
    s_half: complex
    g: complex
    gauge_tag: str = "raw"

    def __post_init__(self):
        if self.gauge_tag not in ("raw", "slow"):
            raise DomainError(f"unknown gauge tag {self.gauge_tag!r}")
        if np.any(np.asarray(self.s_half) == 0):
            raise DomainError("s_half = exp(h/2) must be nonzero")

    @classmethod
    def from_h(cls, f, h, g, gauge_tag="raw"):
        return cls(f, np.exp(np.asarray(h) / 2), g, gauge_tag)

    @classmethod
    def identity(cls):
        return cls(0j, 1 + 0j, 0j)

    @property
    def h(self):
        """Principal-branch h = 2 log(s_half) (informational only)."""
        return 2 * np.log(self.s_half)

    @property
    def z(self):
        """Hypergeometric argument -f g e^h."""
        return -self.f * self.g * self.s_half**2


@dataclass(frozen=True)
class ScatteringMatrix:
    s: SpinValue
    u: np.ndarray
    source: WNCoordinates


def _prefactor(two_s, two_hi, two_lo):
    """sqrt((S-lo)!(S+hi)! / ((S+lo)!(S-hi)!)) / (hi-lo)!  for hi >= lo."""
    fac = math.factorial
    ratio = Fraction(
        fac((two_s - two_lo) // 2) * fac((two_s + two_hi) // 2),
        fac((two_s + two_lo) // 2) * fac((two_s - two_hi) // 2),
    )
    return math.sqrt(ratio) / fac((two_hi - two_lo) // 2)


def _int_power(x, k):
    # integer power that tolerates negative k on complex arrays
    return x**k if k >= 0 else 1.0 / x ** (-k)


def scattering_matrix(s, q):
    """Matrix of exp(f S-) exp(h Sz) exp(g S+) in the spin-S representation.

    Broadcasts over array-valued coordinates: the result has shape
    ``broadcast_shape + (2S+1, 2S+1)``.
    """
    s = as_spin(s)
    if s.two_s > MAX_TWO_S:
        raise CapabilityError(f"2S = {s.two_s} exceeds the supported maximum {MAX_TWO_S}")
    f, sh, g = np.broadcast_arrays(
        np.asarray(q.f, dtype=complex), np.asarray(q.s_half, dtype=complex), np.asarray(q.g, dtype=complex)
    )
    z = -f * g * sh**2
    two_m = s.two_m
    u = np.zeros(f.shape + (s.dim, s.dim), dtype=complex)
    for i, tr in enumerate(two_m):
        for j, tc in enumerate(two_m):
            if tr >= tc:
                hi, lo, ladder = tr, tc, g
            else:
                hi, lo, ladder = tc, tr, f
            k = (hi - lo) // 2
            w = gauss2f1_terminating(-((s.two_s - hi) // 2), (s.two_s + hi) // 2 + 1, k + 1, z)
            u[..., i, j] = _prefactor(s.two_s, hi, lo) * ladder**k * _int_power(sh, hi) * w
    return ScatteringMatrix(s, u, q)


def extract_wn_from_fundamental(u2, eps_singular=1e-12, det_tol=1e-8):
    """Read (f, s_half, g) off a unimodular 2x2 propagator.

    Accepts a single matrix or a stack ``(..., 2, 2)``.
    """
    u2 = np.asarray(u2, dtype=complex)
    if u2.shape[-2:] != (2, 2):
        raise DomainError(f"expected 2x2 matrices, got shape {u2.shape}")
    det = u2[..., 0, 0] * u2[..., 1, 1] - u2[..., 0, 1] * u2[..., 1, 0]
    if np.any(np.abs(det - 1) > det_tol):
        raise DomainError("propagator is not unimodular (det != 1)")
    u11 = u2[..., 0, 0]
    if np.any(np.abs(u11) <= eps_singular):
        raise ParametrizationSingularityError("|U11| below singularity threshold; re-anchor required")
    f = u2[..., 1, 0] / u11
    g = u2[..., 0, 1] / u11
    if u2.ndim == 2:
        return WNCoordinates(complex(f), complex(u11), complex(g))
    return WNCoordinates(f, u11, g)


def su2_from_rotation(n, s):
    """exp(-i n.S) for rotation vectors ``n`` of shape (..., 3), via expm."""
    from scipy.linalg import expm

    mats = spin_matrices(s)
    n = np.asarray(n, dtype=float)
    gen = n[..., 0, None, None] * mats["Sx"] + n[..., 1, None, None] * mats["Sy"] + n[..., 2, None, None] * mats["Sz"]
    if gen.ndim == 2:
        return expm(-1j * gen)
    return np.stack([expm(-1j * x) for x in gen.reshape((-1,) + gen.shape[-2:])]).reshape(gen.shape)


def represent(u2, s, threshold=1e-3):
    """Spin-S representation of SU(2) propagators given in the fundamental one.

    Goes through Wei-Norman extraction. Where |U11| < ``threshold`` the chart is
    re-anchored: U = V X with X = exp(-i pi Sx), so V11 is large and
    U^S = V^S X^S.
    """
    s = as_spin(s)
    u2 = np.asarray(u2, dtype=complex)
    single = u2.ndim == 2
    u2 = u2.reshape((-1, 2, 2))
    near = np.abs(u2[:, 0, 0]) < threshold
    out = np.empty((u2.shape[0], s.dim, s.dim), dtype=complex)
    if np.any(~near):
        out[~near] = scattering_matrix(s, extract_wn_from_fundamental(u2[~near])).u
    if np.any(near):
        x2 = su2_from_rotation([np.pi, 0.0, 0.0], 1)
        xs = su2_from_rotation([np.pi, 0.0, 0.0], s)
        v = u2[near] @ x2.conj().T
        out[near] = scattering_matrix(s, extract_wn_from_fundamental(v)).u @ xs
    return out[0] if single else out


# --- differential-operator identities ------------------------------------

_FD_STEP_RANGE = (1e-6, 1e-4)


def _element(s, q, i, j, df=0.0, dh=0.0, dg=0.0):
    shifted = WNCoordinates(q.f + df, q.s_half * np.exp(dh / 2), q.g + dg, q.gauge_tag)
    return scattering_matrix(s, shifted).u[i, j]


def _d1(fun, step):
    def central(h):
        return (fun(h) - fun(-h)) / (2 * h)

    return (4 * central(step / 2) - central(step)) / 3


def _d2(fun, step):
    def central(h):
        return (fun(h) - 2 * fun(0.0) + fun(-h)) / (h * h)

    return (4 * central(step / 2) - central(step)) / 3


def _dmixed(fun, step):
    def central(h):
        return (fun(h, h) - fun(h, -h) - fun(-h, h) + fun(-h, -h)) / (4 * h * h)

    return (4 * central(step / 2) - central(step)) / 3


def apply_left_generator_fd(which, s, two_m, two_mp, q, step=1e-5, checked=False):
    """Apply a differential generator to U_{m,m'}(Q) by finite differences.

    ``which`` is one of ``plus``, ``minus``, ``z``, ``casimir``. The hatted
    operators act through right multiplication by S+-, Sz; with
    ``checked=True`` the operators built on the negative z-axis are used
    instead. ``two_m`` labels the column and ``two_mp`` the row of the
    operator matrix. Central differences with one Richardson refinement;
    second derivatives use a fixed 3e-3 step (roundoff-limited otherwise).
    """
    if not _FD_STEP_RANGE[0] <= step <= _FD_STEP_RANGE[1]:
        raise DomainError(f"step {step} outside {_FD_STEP_RANGE}")
    s = as_spin(s)
    i, j = s.index(two_mp), s.index(two_m)
    f, g, eh = q.f, q.g, q.s_half**2
    step2 = 3e-3

    def du(var, st=step):
        return _d1(lambda e: _element(s, q, i, j, **{var: e}), st)

    if which == "casimir":
        d_fg = _dmixed(lambda a, b: _element(s, q, i, j, df=a, dg=b), step2)
        d_hh = _d2(lambda e: _element(s, q, i, j, dh=e), step2)
        return d_fg / eh + d_hh + du("dh")
    if not checked:
        if which == "plus":
            return du("dg")
        if which == "z":
            return du("dh") - g * du("dg")
        if which == "minus":
            return du("df") / eh + 2 * g * du("dh") - g * g * du("dg")
    else:
        if which == "minus":
            return du("df")
        if which == "z":
            return -du("dh") + f * du("df")
        if which == "plus":
            return du("dg") / eh + 2 * f * du("dh") - f * f * du("df")
    raise DomainError(f"unknown generator {which!r}")


def generator_rhs(which, s, two_m, two_mp, q, checked=False):
    """Right-hand side the generator identities predict for U_{m,m'}(Q)."""
    s = as_spin(s)
    u = scattering_matrix(s, q).u
    S = s.s
    m, mp = two_m / 2, two_mp / 2
    i, j = s.index(two_mp), s.index(two_m)
    if which == "casimir":
        return S * (S + 1) * u[i, j]
    if not checked:
        # column index shifts: U S+- and U Sz
        if which == "z":
            return m * u[i, j]
        sign = 1 if which == "plus" else -1
        target = two_m + 2 * sign
        if abs(target) > s.two_s:
            return 0j
        return math.sqrt((S - sign * m) * (S + sign * m + 1)) * u[i, s.index(target)]
    # row index shifts: S+- U and -Sz U
    if which == "z":
        return -mp * u[i, j]
    sign = 1 if which == "plus" else -1
    source = two_mp - 2 * sign
    if abs(source) > s.two_s:
        return 0j
    ms = source / 2
    return math.sqrt((S - sign * ms) * (S + sign * ms + 1)) * u[s.index(source), j]
