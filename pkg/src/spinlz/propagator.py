"""Numerical time evolution of i dU/dt = (Theta(t) . S) U.

Two integrators for the fundamental (spin-1/2) representation:

* ``rk`` - adaptive embedded Runge-Kutta (scipy DOP853) on the 2x2 matrix.
* ``magnus`` - fourth-order Magnus steps with two Gauss-Legendre nodes. Each
  step is an exact SU(2) rotation exp(-i n.S), so unitarity holds to rounding
  regardless of step size. For drives that are linear on each step (LZ, or
  sampled drives with steps aligned to the samples) the step rotation vector
  n = h*a - h^3/12 (a x b) is the exact fourth-order truncation.

Higher spins are obtained from the 2x2 propagator through the Wei-Norman
coordinates (:func:`spinlz.wei_norman.represent`); :func:`propagate_direct`
integrates the (2S+1)-dimensional equation instead and serves as the oracle.
"""

import csv
from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, PropagationError, StiffnessError
from .su2_algebra import SpinValue, as_spin, spin_matrices
from .wei_norman import WNCoordinates, extract_wn_from_fundamental, represent, scattering_matrix

_GL2 = math.sqrt(3) / 6


@dataclass(frozen=True)
class DriveProfile:
    """Field Theta(t) = (Theta_x, Theta_y, Theta_z), hbar = 1.

    Build with :meth:`lz`, :meth:`sampled`, :meth:`from_callable` or
    :func:`load_drive_csv`. ``theta(t)`` returns shape (3,) + shape(t).
    """

    kind: str
    delta: float = 0.0
    v: float = 0.0
    times: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    func: Optional[Callable] = None

    @classmethod
    def lz(cls, delta, v):
        return cls("lz", delta=float(delta), v=float(v))

    @classmethod
    def sampled(cls, t, theta_x, theta_y, theta_z):
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("sampled drive times must be strictly increasing (at least 2 points)")
        values = np.vstack([np.broadcast_to(np.asarray(x, dtype=float), t.shape) for x in (theta_x, theta_y, theta_z)])
        return cls("sampled", times=t, values=values)

    @classmethod
    def from_callable(cls, fn):
        return cls("callable", func=fn)

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "lz":
            return np.stack([np.full(t.shape, 2 * self.delta), np.zeros(t.shape), 2 * self.v * t])
        if self.kind == "sampled":
            if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
                raise DomainError("time outside the sampled drive range")
            return np.stack([np.interp(t, self.times, row) for row in self.values])
        out = np.asarray(self.func(t), dtype=float)
        if out.shape != (3,) + t.shape:
            out = np.stack([np.asarray(self.func(x), dtype=float) for x in t.ravel()], axis=-1).reshape((3,) + t.shape)
        return out

    def knots(self, t0, t1):
        """Times inside (t0, t1) where the drive is not smooth."""
        if self.kind != "sampled":
            return np.empty(0)
        return self.times[(self.times > t0) & (self.times < t1)]


def load_drive_csv(path):
    """Read a sampled drive from CSV with header t, theta_x, theta_y, theta_z."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = ("t", "theta_x", "theta_y", "theta_z")
        if reader.fieldnames is None or any(k not in reader.fieldnames for k in need):
            raise DomainError(f"drive CSV must have header columns {need}")
        rows = [[float(r[k]) for k in need] for r in reader]
    arr = np.array(rows)
    return DriveProfile.sampled(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


@dataclass(frozen=True)
class IntegrationWindow:
    t_start: float
    t_end: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise DomainError("t_start must be smaller than t_end")
        for tol in (self.rel_tol, self.abs_tol):
            if not 1e-14 <= tol <= 1e-3:
                raise DomainError(f"tolerance {tol} outside [1e-14, 1e-3]")

    @classmethod
    def symmetric(cls, half_width, **kw):
        return cls(-half_width, half_width, **kw)


@dataclass
class TransitionMatrix:
    """p[i, j] = probability of ending in projection two_m[j] when starting in two_m[i]."""

    s: SpinValue
    p: np.ndarray
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_propagator(cls, u, s=None):
        u = np.asarray(u)
        s = SpinValue(u.shape[-1] - 1) if s is None else as_spin(s)
        return cls(s, np.abs(u.T) ** 2)

    @property
    def labels(self):
        return self.s.two_m

    def row_sums(self):
        return self.p.sum(axis=1)

    def __getitem__(self, key):
        """Look up by doubled projections: ``tm[(two_m_from, two_m_to)]``."""
        a, b = key
        return self.p[self.s.index(a), self.s.index(b)]


# --- fundamental representation -----------------------------------------


def _hamiltonian_2x2(th):
    tx, ty, tz = th
    return 0.5 * np.array([[tz, tx - 1j * ty], [tx + 1j * ty, -tz]])


def _project_su2(u, where=None):
    dev = np.abs(u.conj().T @ u - np.eye(2)).max()
    if dev > 1e-6:
        raise PropagationError(f"propagator lost unitarity (deviation {dev:.2e})", where)
    if dev > 1e-10:
        w, _, vh = np.linalg.svd(u)
        u = w @ vh
        u = u / np.sqrt(np.linalg.det(u))
    return u


def _solve_ivp_checked(rhs, t0, t1, y0, window, t_eval=None):
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0,
        method="DOP853",
        rtol=window.rel_tol,
        atol=window.abs_tol,
        max_step=window.max_step,
        t_eval=t_eval,
    )
    if sol.status < 0:
        where = sol.t[-1] if sol.t.size else t0
        if "step size" in sol.message.lower():
            raise StiffnessError(sol.message, where)
        raise PropagationError(sol.message, where)
    return sol


def _su2_steps(drive, edges):
    """Per-step SU(2) factors (alpha, beta) with U = [[a, -b*], [b, a*]]."""
    t0 = edges[:-1]
    h = np.diff(edges)
    th1 = drive.theta(t0 + h * (0.5 - _GL2))
    th2 = drive.theta(t0 + h * (0.5 + _GL2))
    n = 0.5 * h * (th1 + th2) + (math.sqrt(3) / 12) * h**2 * np.cross(th2, th1, axis=0)
    r = np.sqrt((n**2).sum(axis=0))
    half = 0.5 * r
    sinc = np.where(r > 0, np.sin(half) / np.where(r > 0, r, 1.0), 0.5)
    alpha = np.cos(half) - 1j * sinc * n[2]
    beta = sinc * n[1] - 1j * sinc * n[0]
    return alpha, beta


def _reduce(alpha, beta):
    """Time-ordered product (last step leftmost) by pairwise tree reduction."""
    while alpha.size > 1:
        if alpha.size % 2:
            alpha = np.append(alpha, 1 + 0j)
            beta = np.append(beta, 0j)
        a1, b1 = alpha[0::2], beta[0::2]
        a2, b2 = alpha[1::2], beta[1::2]
        alpha = a2 * a1 - np.conj(b2) * b1
        beta = b2 * a1 + np.conj(a2) * b1
    return alpha[0], beta[0]


def _quat_to_matrix(a, b):
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]])


def _magnus_grid(drive, t0, t1, step, extra=()):
    pts = np.concatenate([[t0, t1], drive.knots(t0, t1), np.asarray(extra, dtype=float)])
    pts = np.unique(pts[(pts >= t0) & (pts <= t1)])
    pieces = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(1, int(math.ceil((b - a) / step - 1e-9)))
        pieces.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(pieces)


def default_magnus_step(drive, window):
    """Step size for the Magnus integrator.

    Keeps the rotation per step below ~0.2 rad, capped at 2e-3 and at the
    window's ``max_step``.
    """
    ts = np.linspace(window.t_start, window.t_end, 257)
    peak = np.abs(drive.theta(ts)).max() if drive.kind != "sampled" else np.abs(drive.values).max()
    step = min(2e-3, 0.2 / max(peak, 1e-12), window.max_step)
    return max(step, 1e-5)


def solve_fundamental(drive, window, t_eval=None, method="rk", u0=None, magnus_step=None):
    """Spin-1/2 propagator U(t_end, t_start), starting from ``u0`` (identity).

    With ``t_eval`` also returns the path as an array (len(t_eval), 2, 2).
    """
    u0 = np.eye(2, dtype=complex) if u0 is None else np.asarray(u0, dtype=complex)
    t0, t1 = window.t_start, window.t_end
    if method == "rk":

        def rhs(t, y):
            h = _hamiltonian_2x2(drive.theta(t))
            return (-1j * h @ y.reshape(2, 2)).ravel()

        sol = _solve_ivp_checked(rhs, t0, t1, u0.ravel(), window)
        u = _project_su2(sol.y[:, -1].reshape(2, 2), t1)
        if t_eval is None:
            return u
        t_eval = np.asarray(t_eval, dtype=float)
        path_sol = _solve_ivp_checked(rhs, t0, t1, u0.ravel(), window, t_eval=t_eval)
        path = np.array([_project_su2(m, t) for m, t in zip(path_sol.y.T.reshape(-1, 2, 2), t_eval)])
        return u, path
    if method == "magnus":
        step = default_magnus_step(drive, window) if magnus_step is None else magnus_step
        extra = () if t_eval is None else t_eval
        edges = _magnus_grid(drive, t0, t1, step, extra)
        alpha, beta = _su2_steps(drive, edges)
        if t_eval is None:
            a, b = _reduce(alpha, beta)
            return _quat_to_matrix(a, b) @ u0
        t_eval = np.asarray(t_eval, dtype=float)
        marks = np.searchsorted(edges, t_eval)
        path = np.empty((t_eval.size, 2, 2), dtype=complex)
        cur = np.eye(2, dtype=complex)
        start = 0
        for k, stop in enumerate(marks):
            if stop > start:
                a, b = _reduce(alpha[start:stop], beta[start:stop])
                cur = _quat_to_matrix(a, b) @ cur
                start = stop
            path[k] = cur
        if start < alpha.size:
            a, b = _reduce(alpha[start:], beta[start:])
            cur = _quat_to_matrix(a, b) @ cur
        return cur @ u0, path @ u0
    raise DomainError(f"unknown method {method!r}")


# --- Riccati (Wei-Norman) system --------------------------------------------


@dataclass
class RiccatiPath:
    """Wei-Norman coordinates along a solution, stored in the raw gauge.

    ``vartheta`` is the accumulated longitudinal phase (integral of Theta_z)
    needed to move between the raw and slow gauges.
    """

    t: np.ndarray
    f: np.ndarray
    s_half: np.ndarray
    g: np.ndarray
    vartheta: np.ndarray
    gauge: str
    reanchored_at: Optional[float] = None

    def coordinates(self, index=-1, gauge="raw"):
        f, sh, g = self.f[index], self.s_half[index], self.g[index]
        if gauge == "slow":
            ph = self.vartheta[index]
            return WNCoordinates(f * np.exp(-1j * ph), sh * np.exp(0.5j * ph), g, "slow")
        return WNCoordinates(f, sh, g, "raw")


def _riccati_rhs(drive, gauge):
    def rhs(t, y):
        f, h, g, vt = y
        tx, ty, tz = drive.theta(t)
        tp, tm = tx + 1j * ty, tx - 1j * ty
        if gauge == "raw":
            df = -1j * (0.5 * tp - tz * f - 0.5 * tm * f * f)
            dh = -1j * (tz + tm * f)
            dg = -0.5j * tm * np.exp(-h)
        else:
            ph = np.exp(1j * vt.real)
            df = -1j * (0.5 * tp / ph - 0.5 * tm * f * f * ph)
            dh = -1j * tm * f * ph
            dg = -0.5j * tm * np.exp(-h) * ph
        return np.array([df, dh, dg, tz + 0j])

    return rhs


def solve_riccati(drive, window, gauge="raw", t_eval=None, f_max=1e6):
    """Integrate the Wei-Norman system from f = h = g = 0.

    ``gauge="slow"`` integrates the rotating-frame variables, with the fast
    longitudinal phase factored out. If |f| exceeds ``f_max`` (the chart is
    singular where U11 = 0), integration continues on the 2x2 propagator and
    coordinates are re-extracted from it.
    """
    if gauge not in ("raw", "slow"):
        raise DomainError(f"unknown gauge {gauge!r}")
    t0, t1 = window.t_start, window.t_end
    t_eval = np.array([t1]) if t_eval is None else np.asarray(t_eval, dtype=float)

    def blowup(t, y):
        return abs(y[0]) - f_max

    blowup.terminal = True
    sol = solve_ivp(
        _riccati_rhs(drive, gauge),
        (t0, t1),
        np.zeros(4, dtype=complex),
        method="DOP853",
        rtol=window.rel_tol,
        atol=window.abs_tol,
        max_step=window.max_step,
        dense_output=True,
        events=blowup,
    )
    if sol.status < 0:
        raise PropagationError(sol.message, sol.t[-1])
    t_stop = sol.t[-1]
    inside = t_eval <= t_stop
    y = sol.sol(t_eval[inside]) if inside.any() else np.zeros((4, 0), dtype=complex)
    f, h, g, vt = y
    vt = vt.real
    if gauge == "slow":
        f = f * np.exp(1j * vt)
        h = h - 1j * vt
    n = t_eval.size
    out_f = np.full(n, np.nan + 0j)
    out_s = np.full(n, np.nan + 0j)
    out_g = np.full(n, np.nan + 0j)
    out_v = np.full(n, np.nan)
    out_f[inside], out_s[inside], out_g[inside], out_v[inside] = f, np.exp(h / 2), g, vt
    anchor = None
    if sol.status == 1:
        anchor = t_stop
        # rebuilding U from coordinates near the singularity loses precision,
        # so the fundamental propagator is taken from the window start instead
        later = t_eval[~inside]
        _, path = solve_fundamental(drive, window, t_eval=later)
        phase = _solve_ivp_checked(
            lambda t, y: np.array([drive.theta(t)[2]]), t0, t1, np.zeros(1), window, t_eval=later
        ).y[0]
        for k, (u2, ph) in zip(np.flatnonzero(~inside), zip(path, phase)):
            try:
                q = extract_wn_from_fundamental(u2, det_tol=1e-6)
            except Exception as exc:
                raise PropagationError(f"re-anchoring failed: {exc}", t_eval[k]) from exc
            out_f[k], out_s[k], out_g[k], out_v[k] = q.f, q.s_half, q.g, ph
    return RiccatiPath(t_eval, out_f, out_s, out_g, out_v, gauge, anchor)


# --- direct (2S+1)-dimensional propagation ------------------------------------


def propagate_direct(s, drive, window):
    """Integrate i dU/dt = (Theta . S) U directly in 2S+1 dimensions."""
    s = as_spin(s)
    mats = spin_matrices(s)
    sx, sy, sz = mats["Sx"], mats["Sy"], mats["Sz"]
    d = s.dim

    def rhs(t, y):
        tx, ty, tz = drive.theta(t)
        h = tx * sx + ty * sy + tz * sz
        return (-1j * h @ y.reshape(d, d)).ravel()

    sol = _solve_ivp_checked(rhs, window.t_start, window.t_end, np.eye(d, dtype=complex).ravel(), window)
    u = sol.y[:, -1].reshape(d, d)
    dev = np.abs(u.conj().T @ u - np.eye(d)).max()
    if dev > 1e-6:
        raise PropagationError(f"direct propagator lost unitarity ({dev:.2e})", window.t_end)
    return u


# --- Landau-Zener driver -----------------------------------------------------


def field_frame(theta):
    """SU(2) rotation carrying the z axis onto the field axis (sign-adjusted).

    The field direction is flipped when Theta_z < 0, so the rotation angle
    stays below pi/2 and the frame tends to the identity as |Theta_z| grows.
    ``theta`` has shape (3,) or (..., 3); the result is (..., 2, 2).
    """
    th = np.asarray(theta, dtype=float)
    norm = np.linalg.norm(th, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    n = th / safe[..., None] * np.where(th[..., 2] >= 0, 1.0, -1.0)[..., None]
    sxy = np.hypot(n[..., 0], n[..., 1])
    tilted = (norm > 0) & (sxy > 0)
    den = np.where(tilted, sxy, 1.0)
    ax = np.where(tilted, -n[..., 1] / den, 0.0)
    ay = np.where(tilted, n[..., 0] / den, 0.0)
    half = 0.5 * np.arccos(np.clip(np.where(tilted, n[..., 2], 1.0), -1.0, 1.0))
    c, sn = np.cos(half), np.sin(half)
    out = np.empty(th.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -sn * (ay + 1j * ax)
    out[..., 1, 0] = sn * (ay - 1j * ax)
    out[..., 1, 1] = c
    return out


def tail_average(u2_path, s):
    """Mean transition matrix over a stack of 2x2 propagators."""
    us = represent(u2_path, s)
    return np.mean(np.abs(np.swapaxes(us, -1, -2)) ** 2, axis=0)


def lz_numeric_probabilities(
    s,
    delta_param,
    window_scale=200.0,
    method="magnus",
    tail_fraction=0.1,
    n_tail=64,
    frame="field",
    rel_tol=1e-10,
    abs_tol=1e-12,
):
    """LZ transition matrix from numerical propagation.

    Uses v = 1 and Delta = sqrt(delta_param) on the window
    sqrt(2v)|t| <= window_scale and averages |U|^2 over the final
    ``tail_fraction`` of the window to damp the O(1/t) ringing.

    With ``frame="field"`` the propagator is read in the field-aligned frame
    at both ends, R(t)^dagger U(t, t0) R(t0). This removes the O(Delta/vT)
    admixture caused by switching on at finite -T, which tail averaging
    cannot remove. ``frame="diabatic"`` returns the bare |U|^2.
    """
    s = as_spin(s)
    if delta_param < 0:
        raise DomainError("delta_param must be non-negative")
    if frame not in ("field", "diabatic"):
        raise DomainError(f"unknown frame {frame!r}")
    half = window_scale / math.sqrt(2.0)
    window = IntegrationWindow(-half, half, rel_tol, abs_tol)
    drive = DriveProfile.lz(math.sqrt(delta_param), 1.0)
    t_tail = np.linspace(half - tail_fraction * 2 * half, half, n_tail)
    _, path = solve_fundamental(drive, window, t_eval=t_tail, method=method)
    if frame == "field":
        r0 = field_frame(drive.theta(-half))
        path = np.swapaxes(field_frame(drive.theta(t_tail).T), -1, -2).conj() @ path @ r0
    tm = TransitionMatrix(s, tail_average(path, s))
    tm.meta.update(window_half_width=half, tail_fraction=tail_fraction, method=method, frame=frame)
    return tm
