import io
import math

import numpy as np
import pytest

from spinlz.errors import DomainError
from spinlz.lz_analytic import lz_matrix
from spinlz.noise_mc import (
    NoiseConfig,
    NoisePath,
    dump_paths_csv,
    langevin_trajectory,
    monte_carlo_ensemble,
    noise_grid,
    ou_sample_path,
)
from spinlz.propagator import IntegrationWindow

SHORT = IntegrationWindow(-8.0, 8.0)


def small_cfg(**kw):
    base = dict(eta=0.4, gamma=4.0, components="XY", seed=3, n_traj=64)
    base.update(kw)
    return NoiseConfig(**base)


def test_config_validation():
    for bad in (dict(eta=-1.0), dict(gamma=0.0), dict(components="Z"), dict(n_traj=0), dict(n_traj=2.5), dict(seed=-1)):
        with pytest.raises(DomainError):
            small_cfg(**bad)


def test_grid_resolution():
    cfg = small_cfg(gamma=10.0)
    grid = noise_grid(cfg, 4.0, SHORT)
    assert grid[0] == SHORT.t_start and grid[-1] == SHORT.t_end
    assert np.diff(grid).max() <= min(0.1 / 10.0, 0.05 / 2.0) + 1e-12
    # a requested dt can only refine the grid
    assert np.diff(noise_grid(cfg, 4.0, SHORT, dt=1.0)).max() <= 0.01 + 1e-12
    assert np.diff(noise_grid(cfg, 4.0, SHORT, dt=1e-3)).max() <= 1e-3 + 1e-12


def test_ou_statistics():
    eta, gamma, n = 0.7, 2.0, 10000
    cfg = NoiseConfig(eta, gamma, components="XY", seed=11)
    grid = np.array([0.0, 1 / gamma])
    vals = np.array([ou_sample_path(cfg, grid, k).values for k in range(n)])
    for c in range(2):
        x0, x1 = vals[:, c, 0], vals[:, c, 1]
        for x in (x0, x1):
            assert abs(x.mean()) < 4 * eta / math.sqrt(n)
            # var of the sample variance is 2 eta^4 / n
            assert abs(x.var() - eta**2) < 4 * eta**2 * math.sqrt(2 / n)
        cov = np.mean(x0 * x1)
        target = eta**2 * math.exp(-1)
        assert abs(cov - target) < 4 * eta**2 * math.sqrt((1 + math.exp(-2)) / n)
    # components are independent
    assert abs(np.mean(vals[:, 0, 0] * vals[:, 1, 0])) < 4 * eta**2 / math.sqrt(n)


def test_single_component_and_zero_noise():
    grid = np.linspace(0, 1, 11)
    x_only = ou_sample_path(small_cfg(components="X"), grid, 0)
    assert np.all(x_only.jy == 0) and np.any(x_only.jx != 0)
    silent = ou_sample_path(small_cfg(eta=0.0), grid, 0)
    assert np.all(silent.values == 0)
    with pytest.raises(DomainError):
        ou_sample_path(small_cfg(), np.array([0.0, 0.0, 1.0]), 0)


def test_paths_are_keyed_by_seed_and_trajectory():
    grid = np.linspace(0, 2, 21)
    a = ou_sample_path(small_cfg(), grid, 5).values
    np.testing.assert_array_equal(a, ou_sample_path(small_cfg(), grid, 5).values)
    assert not np.array_equal(a, ou_sample_path(small_cfg(), grid, 6).values)
    assert not np.array_equal(a, ou_sample_path(small_cfg(seed=4), grid, 5).values)
    # the same trajectory index gives the same noise regardless of n_traj
    np.testing.assert_array_equal(a, ou_sample_path(small_cfg(n_traj=1), grid, 5).values)


def test_dump_paths_csv():
    grid = np.linspace(0, 1, 3)
    paths = [ou_sample_path(small_cfg(), grid, k) for k in range(2)]
    buf = io.StringIO()
    dump_paths_csv(paths, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "trajectory,t,jx,jy"
    assert len(lines) == 7
    k, t, jx, jy = lines[4].split(",")
    assert int(k) == 1 and float(t) == 0.0 and float(jx) == paths[1].jx[0]


def test_frozen_noise_is_static_lz():
    window = IntegrationWindow(-60.0, 60.0)
    grid = np.linspace(-60.0, 60.0, 2401)
    j, v = 0.6, 1.0
    path = NoisePath(grid, np.vstack([np.full(grid.size, j), np.zeros(grid.size)]))
    for two_s in (1, 2, 3):
        tm = langevin_trajectory(two_s, v, path, window)
        np.testing.assert_allclose(tm.p, lz_matrix(two_s, j * j / v).p, atol=1e-4)
    # delta adds to the x component
    tm = langevin_trajectory(1, v, NoisePath(grid, np.zeros((2, grid.size))), window, delta=j)
    np.testing.assert_allclose(tm.p, lz_matrix(1, j * j / v).p, atol=1e-4)


def test_trajectory_validation():
    grid = np.linspace(-1.0, 1.0, 5)
    path = NoisePath(grid, np.zeros((2, 5)))
    with pytest.raises(DomainError):
        langevin_trajectory(1, 1.0, path, IntegrationWindow(-2.0, 1.0))
    with pytest.raises(DomainError):
        langevin_trajectory(1, 1.0, path, IntegrationWindow(-1.0, 1.0), frame="lab")
    with pytest.raises(DomainError):
        langevin_trajectory(1, 1.0, path, IntegrationWindow(-1.0, 1.0), gauge="fast")


def test_ensemble_zero_noise_is_identity():
    tm = monte_carlo_ensemble(2, 1.0, small_cfg(eta=0.0, n_traj=8), SHORT)
    np.testing.assert_allclose(tm.p, np.eye(3), atol=1e-10)
    assert np.all(tm.stderr == 0)


def test_ensemble_matches_individual_trajectories():
    cfg = small_cfg(n_traj=6)
    v = 1.0
    tm = monte_carlo_ensemble(2, v, cfg, SHORT, block=4, threads=1)
    grid = noise_grid(cfg, v, SHORT)
    singles = [
        langevin_trajectory(2, v, ou_sample_path(cfg, grid, k), SHORT, magnus_step=tm.meta["magnus_step"]).p
        for k in range(cfg.n_traj)
    ]
    np.testing.assert_allclose(tm.p, np.mean(singles, axis=0), atol=1e-12)
    np.testing.assert_allclose(tm.stderr, np.std(singles, axis=0, ddof=1) / math.sqrt(6), atol=1e-12)


def test_ensemble_structure_and_threads():
    cfg = small_cfg(n_traj=96)
    one = monte_carlo_ensemble(3, 1.0, cfg, SHORT, threads=1)
    three = monte_carlo_ensemble(3, 1.0, cfg, SHORT, threads=3, block=16)
    np.testing.assert_array_equal(one.p, three.p)
    np.testing.assert_array_equal(one.stderr, three.stderr)
    np.testing.assert_allclose(one.row_sums(), 1, atol=1e-10)
    assert one.p.min() >= 0
    # detailed balance holds in distribution: P(m->m') = P(m'->m) up to noise
    tol = 4 * np.hypot(one.stderr, one.stderr.T) + 1e-9
    assert np.all(np.abs(one.p - one.p.T) <= tol)
    assert one.meta["grid_points"] == noise_grid(cfg, 1.0, SHORT).size


def test_ensemble_validation():
    with pytest.raises(DomainError):
        monte_carlo_ensemble(1, 0.0, small_cfg(), SHORT)
    with pytest.raises(DomainError):
        monte_carlo_ensemble(1, 1.0, small_cfg(), SHORT, threads=0)
    with pytest.raises(DomainError):
        monte_carlo_ensemble(1, 1.0, small_cfg(), SHORT, frame="lab")


def test_stderr_scales_as_inverse_sqrt_n():
    window = IntegrationWindow(-4.0, 4.0)
    errs = []
    for n in (1000, 4000, 16000):
        cfg = NoiseConfig(0.5, 8.0, components="X", seed=21, n_traj=n)
        errs.append(monte_carlo_ensemble(1, 1.0, cfg, window, threads=1).stderr[0, 0])
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(2.0, rel=0.2)


def test_slow_gauge_cross_check():
    window = IntegrationWindow(-5.0, 5.0)
    cfg = small_cfg(eta=0.5, gamma=2.0)
    path = ou_sample_path(cfg, noise_grid(cfg, 1.0, window), 0)
    magnus = langevin_trajectory(2, 1.0, path, window)
    slow = langevin_trajectory(2, 1.0, path, window, gauge="slow")
    np.testing.assert_allclose(slow.p, magnus.p, atol=1e-5)
