"""Monte Carlo transition matrices under transverse Ornstein-Uhlenbeck noise.

Each realisation samples J_x(t), J_y(t) exactly on a grid, interpolates them
linearly and propagates the pathwise ODE with field

    Theta(t) = (2 (Delta + J_x), 2 J_y, 2 v t),

so a frozen noise value acts as an LZ coupling (delta = J^2 / v). Random
numbers for trajectory k, component c come from a Philox stream keyed by
(seed, k, c), which makes every trajectory independent of scheduling; the
ensemble is reduced in trajectory order, so results do not depend on the
number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass
import math
import os

import numba
import numpy as np

from .errors import DomainError
from .propagator import (
    DriveProfile,
    TransitionMatrix,
    field_frame,
    solve_fundamental,
    solve_riccati,
)
from .su2_algebra import as_spin
from .wei_norman import represent, scattering_matrix

COMPONENTS = ("X", "XY")


@dataclass(frozen=True)
class NoiseConfig:
    eta: float
    gamma: float
    components: str = "X"
    seed: int = 0
    n_traj: int = 1000

    def __post_init__(self):
        if self.eta < 0 or self.gamma <= 0:
            raise DomainError("need eta >= 0 and gamma > 0")
        if self.components not in COMPONENTS:
            raise DomainError(f"components must be one of {COMPONENTS}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise DomainError("n_traj must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class NoisePath:
    """Sampled noise: ``values`` has shape (2, len(grid)) for (J_x, J_y)."""

    grid: np.ndarray
    values: np.ndarray

    @property
    def jx(self):
        return self.values[0]

    @property
    def jy(self):
        return self.values[1]


def noise_grid(cfg, v, window, dt=None):
    """Uniform grid over the window with dt <= min(0.1/gamma, 0.05/sqrt(v))."""
    dt_max = min(0.1 / cfg.gamma, 0.05 / math.sqrt(v))
    dt = dt_max if dt is None else min(dt, dt_max)
    n = int(math.ceil((window.t_end - window.t_start) / dt)) + 1
    return np.linspace(window.t_start, window.t_end, n)


def _stream(seed, stream_id, component):
    ss = np.random.SeedSequence([int(seed), int(stream_id), component])
    return np.random.Generator(np.random.Philox(ss))


@numba.njit(cache=True, nogil=True)
def _ou_recurse(x0, xi, decay, scale):
    out = np.empty(xi.size + 1)
    out[0] = x0
    for k in range(xi.size):
        out[k + 1] = out[k] * decay[k] + scale[k] * xi[k]
    return out


def ou_sample_path(cfg, grid, stream_id):
    """Exact OU discretisation with stationary start, one stream per component."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    decay = np.exp(-cfg.gamma * np.diff(grid))
    scale = cfg.eta * np.sqrt(-np.expm1(-2 * cfg.gamma * np.diff(grid)))
    values = np.zeros((2, grid.size))
    for c in range(2 if cfg.components == "XY" else 1):
        xi = _stream(cfg.seed, stream_id, c).standard_normal(grid.size)
        values[c] = _ou_recurse(cfg.eta * xi[0], xi[1:], decay, scale)
    return NoisePath(grid, values)


def dump_paths_csv(paths, out):
    """Write sampled paths as rows (trajectory, t, jx, jy)."""
    writer = csv.writer(out)
    writer.writerow(["trajectory", "t", "jx", "jy"])
    for k, path in enumerate(paths):
        for row in zip(path.grid, path.jx, path.jy):
            writer.writerow([k] + [f"{x:.17g}" for x in row])


def _magnus_step(v, window, peak_noise):
    peak = math.hypot(2 * v * max(abs(window.t_start), abs(window.t_end)), 2 * peak_noise)
    return min(2e-3, 0.2 / max(peak, 1e-12), window.max_step)


def _tail_indices(grid, tail_fraction, n_tail):
    if tail_fraction <= 0 or n_tail <= 1:
        return np.array([grid.size - 1])
    t_from = grid[-1] - tail_fraction * (grid[-1] - grid[0])
    first = int(np.searchsorted(grid, t_from))
    return np.unique(np.linspace(first, grid.size - 1, n_tail).round().astype(np.int64))


@numba.njit(cache=True, nogil=True)
def _propagate_paths(grid, jx, jy, delta, v, step, tail_idx, out):
    """Magnus-4 propagation of each row of (jx, jy); out[r, k] = (alpha, beta)."""
    g = math.sqrt(3.0) / 6.0
    c3 = math.sqrt(3.0) / 12.0
    for r in range(jx.shape[0]):
        a = 1.0 + 0.0j
        b = 0.0j
        ti = 0
        for k in range(grid.size - 1):
            t0 = grid[k]
            span = grid[k + 1] - t0
            sub = max(1, int(math.ceil(span / step - 1e-9)))
            h = span / sub
            x0, x1 = jx[r, k], jx[r, k + 1]
            y0, y1 = jy[r, k], jy[r, k + 1]
            for j in range(sub):
                ts = t0 + span * j / sub
                w1 = (ts + h * (0.5 - g) - t0) / span
                w2 = (ts + h * (0.5 + g) - t0) / span
                p1x = 2.0 * (delta + x0 + (x1 - x0) * w1)
                p1y = 2.0 * (y0 + (y1 - y0) * w1)
                p1z = 2.0 * v * (t0 + span * w1)
                p2x = 2.0 * (delta + x0 + (x1 - x0) * w2)
                p2y = 2.0 * (y0 + (y1 - y0) * w2)
                p2z = 2.0 * v * (t0 + span * w2)
                # n = h/2 (th1 + th2) + sqrt(3)/12 h^2 (th2 x th1)
                nx = 0.5 * h * (p1x + p2x) + c3 * h * h * (p2y * p1z - p2z * p1y)
                ny = 0.5 * h * (p1y + p2y) + c3 * h * h * (p2z * p1x - p2x * p1z)
                nz = 0.5 * h * (p1z + p2z) + c3 * h * h * (p2x * p1y - p2y * p1x)
                rr = math.sqrt(nx * nx + ny * ny + nz * nz)
                sc = math.sin(0.5 * rr) / rr if rr > 0 else 0.5
                sa = math.cos(0.5 * rr) - 1j * sc * nz
                sb = sc * ny - 1j * sc * nx
                a, b = sa * a - sb.conjugate() * b, sb * a + sa.conjugate() * b
            if ti < tail_idx.size and k + 1 == tail_idx[ti]:
                norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
                a, b = a / norm, b / norm
                out[r, ti, 0] = a
                out[r, ti, 1] = b
                ti += 1


def _quats_to_matrices(q):
    a, b = q[..., 0], q[..., 1]
    out = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1] = a, -np.conj(b)
    out[..., 1, 0], out[..., 1, 1] = b, np.conj(a)
    return out


def _field(grid, jx, jy, delta, v, idx):
    return np.stack([2 * (delta + jx[..., idx]), 2 * jy[..., idx], np.broadcast_to(2 * v * grid[idx], jx[..., idx].shape)], axis=-1)


def _probabilities(s, u2, frame_start, frame_end):
    """Tail-averaged |U^S|^2 (from x to) per trajectory; u2 is (..., n_tail, 2, 2)."""
    if frame_start is not None:
        u2 = np.swapaxes(frame_end, -1, -2).conj() @ u2 @ frame_start[..., None, :, :]
    us = represent(u2.reshape(-1, 2, 2), s).reshape(u2.shape[:-2] + (s.dim, s.dim))
    return np.mean(np.abs(np.swapaxes(us, -1, -2)) ** 2, axis=-3)


def langevin_trajectory(
    s,
    v,
    path,
    window,
    delta=0.0,
    magnus_step=None,
    tail_fraction=0.1,
    n_tail=16,
    frame="field",
    gauge=None,
):
    """Transition matrix of a single noise realisation.

    The drive interpolates ``path`` linearly; propagation uses the Magnus
    integrator with steps aligned to the samples. ``gauge="slow"`` integrates
    the rotating-frame Wei-Norman equations instead (cross-check; much slower).
    Probabilities are read in the field-aligned frame (``frame="field"``)
    and averaged over tail samples, as in the deterministic LZ driver.
    """
    s = as_spin(s)
    if frame not in ("field", "diabatic"):
        raise DomainError(f"unknown frame {frame!r}")
    grid = path.grid
    if grid[0] > window.t_start + 1e-12 or grid[-1] < window.t_end - 1e-12:
        raise DomainError("noise path does not cover the integration window")
    drive = DriveProfile.sampled(grid, 2 * (delta + path.jx), 2 * path.jy, 2 * v * grid)
    idx = _tail_indices(grid, tail_fraction, n_tail)
    if magnus_step is None:
        magnus_step = _magnus_step(v, window, abs(delta) + np.abs(path.values).max())
    if gauge is None:
        _, u2 = solve_fundamental(drive, window, t_eval=grid[idx], method="magnus", magnus_step=magnus_step)
    elif gauge == "slow":
        rp = solve_riccati(drive, window, gauge="slow", t_eval=grid[idx])
        u2 = np.stack([scattering_matrix(1, rp.coordinates(k)).u for k in range(idx.size)])
    else:
        raise DomainError(f"unknown gauge {gauge!r}")
    if frame == "field":
        r0 = field_frame(_field(grid, path.jx, path.jy, delta, v, 0))
        r1 = field_frame(_field(grid, path.jx, path.jy, delta, v, idx))
        p = _probabilities(s, u2, r0, r1)
    else:
        p = _probabilities(s, u2, None, None)
    return TransitionMatrix(s, p, meta={"tail_points": int(idx.size)})


def monte_carlo_ensemble(
    s,
    v,
    cfg,
    window,
    delta=0.0,
    dt=None,
    magnus_step=None,
    tail_fraction=0.1,
    n_tail=16,
    frame="field",
    threads=None,
    block=32,
):
    """Ensemble-averaged transition matrix with per-entry standard errors.

    Trajectories are processed in blocks on a thread pool (the propagation
    kernel releases the GIL). Per-trajectory matrices are stored by index and
    averaged in index order.
    """
    s = as_spin(s)
    if v <= 0:
        raise DomainError("v must be positive")
    if frame not in ("field", "diabatic"):
        raise DomainError(f"unknown frame {frame!r}")
    threads = (os.cpu_count() or 1) if threads is None else int(threads)
    if threads < 1:
        raise DomainError("threads must be >= 1")
    grid = noise_grid(cfg, v, window, dt)
    idx = _tail_indices(grid, tail_fraction, n_tail)
    if magnus_step is None:
        # noise amplitude bound used only to size the steps
        magnus_step = _magnus_step(v, window, abs(delta) + 6 * cfg.eta * (2 if cfg.components == "XY" else 1))
    per_traj = np.empty((cfg.n_traj, s.dim, s.dim))

    def run(start):
        stop = min(start + block, cfg.n_traj)
        vals = np.stack([ou_sample_path(cfg, grid, k).values for k in range(start, stop)], axis=1)
        jx, jy = np.ascontiguousarray(vals[0]), np.ascontiguousarray(vals[1])
        quats = np.empty((stop - start, idx.size, 2), dtype=complex)
        _propagate_paths(grid, jx, jy, float(delta), float(v), float(magnus_step), idx, quats)
        u2 = _quats_to_matrices(quats)
        if frame == "field":
            r0 = field_frame(_field(grid, jx, jy, delta, v, 0))
            r1 = field_frame(_field(grid, jx, jy, delta, v, idx))
            per_traj[start:stop] = _probabilities(s, u2, r0, r1)
        else:
            per_traj[start:stop] = _probabilities(s, u2, None, None)

    starts = range(0, cfg.n_traj, block)
    if threads == 1:
        for st in starts:
            run(st)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    mean = per_traj.mean(axis=0)
    if cfg.n_traj > 1:
        err = per_traj.std(axis=0, ddof=1) / math.sqrt(cfg.n_traj)
    else:
        err = np.zeros_like(mean)
    meta = {
        "grid_points": int(grid.size),
        "dt": float(grid[1] - grid[0]),
        "magnus_step": float(magnus_step),
        "tail_points": int(idx.size),
        "window": [window.t_start, window.t_end],
        "threads": threads,
    }
    return TransitionMatrix(s, mean, stderr=err, meta=meta)
