import math

import numpy as np
import pytest
from scipy.linalg import expm

from spinlz.errors import DomainError
from spinlz.lz_analytic import asymptotic_wn, lz_matrix
from spinlz.propagator import (
    DriveProfile,
    IntegrationWindow,
    TransitionMatrix,
    field_frame,
    load_drive_csv,
    lz_numeric_probabilities,
    propagate_direct,
    solve_fundamental,
    solve_riccati,
)
from spinlz.su2_algebra import spin_matrices
from spinlz.wei_norman import represent, scattering_matrix


def wiggly_drive():
    return DriveProfile.from_callable(
        lambda t: np.stack([0.8 * np.cos(1.3 * t), 0.5 * np.sin(0.7 * t + 0.2), 0.3 + 0.6 * np.asarray(t)])
    )


def test_drive_profile_shapes_and_validation():
    d = DriveProfile.lz(0.5, 2.0)
    np.testing.assert_allclose(d.theta(1.5), [1.0, 0.0, 6.0])
    assert d.theta(np.zeros((4, 5))).shape == (3, 4, 5)
    samp = DriveProfile.sampled([0, 1, 2], 1.0, [0, 1, 2], 0.0)
    np.testing.assert_allclose(samp.theta(1.5), [1.0, 1.5, 0.0])
    np.testing.assert_allclose(samp.knots(0, 2), [1.0])
    with pytest.raises(DomainError):
        samp.theta(3.0)
    with pytest.raises(DomainError):
        DriveProfile.sampled([0, 0, 1], 0, 0, 0)


def test_load_drive_csv(tmp_path):
    good = tmp_path / "drive.csv"
    good.write_text("t,theta_x,theta_y,theta_z\n0,1,0,-1\n1,1,0,1\n")
    d = load_drive_csv(good)
    np.testing.assert_allclose(d.theta(0.5), [1, 0, 0])
    bad = tmp_path / "bad.csv"
    bad.write_text("time,x\n0,1\n")
    with pytest.raises(DomainError):
        load_drive_csv(bad)


def test_window_validation():
    with pytest.raises(DomainError):
        IntegrationWindow(1.0, 0.0)
    with pytest.raises(DomainError):
        IntegrationWindow(0.0, 1.0, rel_tol=1e-2)
    w = IntegrationWindow.symmetric(3.0)
    assert (w.t_start, w.t_end) == (-3.0, 3.0)


@pytest.mark.parametrize("method", ["rk", "magnus"])
def test_zero_coupling_gives_diagonal_phases(method):
    v, T = 0.7, 4.0
    u = solve_fundamental(DriveProfile.lz(0.0, v), IntegrationWindow(-T, T + 1), method=method)
    phase = v * ((T + 1) ** 2 - T**2) / 2
    np.testing.assert_allclose(u, np.diag([np.exp(-1j * phase), np.exp(1j * phase)]), atol=1e-9)


@pytest.mark.parametrize("method", ["rk", "magnus"])
def test_constant_field_matches_expm(method):
    th = np.array([0.4, -0.3, 1.1])
    drive = DriveProfile.from_callable(lambda t: np.broadcast_to(th.reshape((3,) + (1,) * np.ndim(t)), (3,) + np.shape(t)))
    mats = spin_matrices(1)
    ref = expm(-1j * 2.5 * (th[0] * mats["Sx"] + th[1] * mats["Sy"] + th[2] * mats["Sz"]))
    u = solve_fundamental(drive, IntegrationWindow(0.0, 2.5), method=method)
    np.testing.assert_allclose(u, ref, atol=1e-9)


def test_rk_and_magnus_agree_and_are_special_unitary():
    w = IntegrationWindow(-3.0, 4.0)
    u_rk = solve_fundamental(wiggly_drive(), w, method="rk")
    u_mg = solve_fundamental(wiggly_drive(), w, method="magnus")
    np.testing.assert_allclose(u_rk, u_mg, atol=1e-8)
    # Magnus steps are exact rotations; the adaptive RK result carries its tolerance
    for u, tol in ((u_rk, 1e-10), (u_mg, 1e-13)):
        assert np.linalg.det(u) == pytest.approx(1, abs=tol)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=tol)


def test_path_output_and_initial_condition():
    w = IntegrationWindow(0.0, 2.0)
    ts = np.array([0.5, 1.0, 2.0])
    for method in ("rk", "magnus"):
        u, path = solve_fundamental(wiggly_drive(), w, t_eval=ts, method=method)
        assert path.shape == (3, 2, 2)
        np.testing.assert_allclose(path[-1], u, atol=1e-9)
        mid = solve_fundamental(wiggly_drive(), IntegrationWindow(0.0, 1.0), method=method)
        np.testing.assert_allclose(path[1], mid, atol=1e-9)
    # closure: U(2, 0) = U(2, 1) U(1, 0)
    first = solve_fundamental(wiggly_drive(), IntegrationWindow(0.0, 1.0))
    both = solve_fundamental(wiggly_drive(), IntegrationWindow(1.0, 2.0), u0=first)
    np.testing.assert_allclose(both, solve_fundamental(wiggly_drive(), w), atol=1e-9)
    with pytest.raises(DomainError):
        solve_fundamental(wiggly_drive(), w, method="euler")


@pytest.mark.parametrize("two_s", [1, 2, 3, 4])
def test_direct_matches_represented(two_s):
    w = IntegrationWindow(-2.0, 3.0)
    u2 = solve_fundamental(wiggly_drive(), w)
    np.testing.assert_allclose(propagate_direct(two_s, wiggly_drive(), w), represent(u2, two_s), atol=1e-8)


def test_riccati_zero_coupling():
    path = solve_riccati(DriveProfile.lz(0.0, 1.0), IntegrationWindow(-2.0, 3.0))
    assert path.f[-1] == 0 and path.g[-1] == 0
    assert path.s_half[-1] == pytest.approx(np.exp(-2.5j), abs=1e-10)


@pytest.mark.parametrize("gauge", ["raw", "slow"])
def test_riccati_reproduces_fundamental(gauge):
    w = IntegrationWindow(-2.0, 2.5)
    ts = np.linspace(-1.0, 2.5, 6)
    path = solve_riccati(wiggly_drive(), w, gauge=gauge, t_eval=ts)
    _, fund = solve_fundamental(wiggly_drive(), w, t_eval=ts)
    assert path.reanchored_at is None
    for k in range(ts.size):
        for gg in ("raw", "slow"):
            q = path.coordinates(k, gauge=gg)
            if gg == "slow":
                # the slow gauge factors out exp(-i vartheta Sz) on the left
                ph = path.vartheta[k]
                rot = np.diag([np.exp(-0.5j * ph), np.exp(0.5j * ph)])
                np.testing.assert_allclose(rot @ scattering_matrix(1, q).u, fund[k], atol=1e-8)
            else:
                np.testing.assert_allclose(scattering_matrix(1, q).u, fund[k], atol=1e-8)


def test_riccati_gauges_agree():
    drive = DriveProfile.lz(0.6, 1.0)
    w = IntegrationWindow(-6.0, 6.0)
    raw = solve_riccati(drive, w, gauge="raw").coordinates()
    slow = solve_riccati(drive, w, gauge="slow").coordinates()
    for attr in ("f", "s_half", "g"):
        assert getattr(raw, attr) == pytest.approx(getattr(slow, attr), abs=1e-8)


def test_riccati_reanchors_through_singularity():
    # a pure x drive of strength 2 empties U11 at t = pi/2
    drive = DriveProfile.from_callable(lambda t: np.stack([np.full(np.shape(t), 2.0), np.zeros(np.shape(t)), np.zeros(np.shape(t))]))
    w = IntegrationWindow(0.0, 3.0)
    ts = np.array([1.0, 2.0, 3.0])
    path = solve_riccati(drive, w, t_eval=ts, f_max=1e4)
    assert path.reanchored_at == pytest.approx(math.pi / 2, abs=1e-3)
    _, fund = solve_fundamental(drive, w, t_eval=ts)
    for k in range(3):
        np.testing.assert_allclose(scattering_matrix(1, path.coordinates(k)).u, fund[k], atol=1e-8)


def test_riccati_lz_asymptotics():
    """Gauge-invariant combinations approach their t -> infinity limits."""
    delta = 0.5
    drive = DriveProfile.lz(math.sqrt(delta), 1.0)
    window = IntegrationWindow(-50.0, 50.0, rel_tol=1e-9, abs_tol=1e-11)
    q = solve_riccati(drive, window, gauge="slow").coordinates(gauge="slow")
    ref = asymptotic_wn(delta)
    # finite-window ringing is of order Delta / (v T) ~ 1.5e-2
    assert abs(q.s_half) ** 2 == pytest.approx(math.exp(ref.h_inf), abs=3e-2)
    assert abs(q.f) == pytest.approx(abs(ref.f_inf), rel=5e-2)
    assert abs(q.g) == pytest.approx(abs(ref.g_inf), rel=5e-2)


def test_riccati_bad_gauge():
    with pytest.raises(DomainError):
        solve_riccati(DriveProfile.lz(1, 1), IntegrationWindow(0, 1), gauge="fast")


def test_field_frame_properties():
    r = field_frame([0.0, 0.0, 2.0])
    np.testing.assert_allclose(r, np.eye(2))
    np.testing.assert_allclose(field_frame([0.0, 0.0, -2.0]), np.eye(2))
    th = np.array([[1.0, 0.5, 0.3], [0.2, -0.4, -3.0]])
    rs = field_frame(th)
    assert rs.shape == (2, 2, 2)
    mats = spin_matrices(1)
    for t, r in zip(th, rs):
        np.testing.assert_allclose(r.conj().T @ r, np.eye(2), atol=1e-14)
        h = t[0] * mats["Sx"] + t[1] * mats["Sy"] + t[2] * mats["Sz"]
        rotated = r.conj().T @ h @ r
        assert abs(rotated[0, 1]) < 1e-13
        # the sign adjustment keeps the rotation angle below pi/2
        assert r[0, 0].real > 0.7


def test_transition_matrix_helpers():
    u = scattering_matrix(2, asymptotic_wn(0.4).coordinates).u
    tm = TransitionMatrix.from_propagator(u)
    assert tm.s.two_s == 2
    assert tm[(2, -2)] == pytest.approx(abs(u[2, 0]) ** 2)
    np.testing.assert_allclose(tm.row_sums(), 1, atol=1e-12)


@pytest.mark.parametrize("two_s,delta", [(1, 0.5), (2, 1.0), (3, 0.2)])
def test_lz_numeric_matches_analytic(two_s, delta):
    num = lz_numeric_probabilities(two_s, delta, window_scale=100.0)
    np.testing.assert_allclose(num.p, lz_matrix(two_s, delta).p, atol=1e-6)
    assert num.meta["frame"] == "field"


def test_lz_numeric_field_frame_beats_diabatic():
    ref = lz_matrix(1, 1.0).p
    err = {
        fr: np.abs(lz_numeric_probabilities(1, 1.0, window_scale=60.0, frame=fr).p - ref).max()
        for fr in ("field", "diabatic")
    }
    assert err["field"] < err["diabatic"] / 10


def test_lz_numeric_tolerance_refinement_converges():
    ref = lz_matrix(2, 0.5).p
    errs = [
        np.abs(lz_numeric_probabilities(2, 0.5, window_scale=80.0, method="rk", rel_tol=tol, abs_tol=tol / 100).p - ref).max()
        for tol in (1e-8, 1e-11)
    ]
    assert errs[1] <= errs[0] + 1e-9
    assert errs[1] < 1e-5


def test_lz_numeric_validation():
    with pytest.raises(DomainError):
        lz_numeric_probabilities(1, -0.1)
    with pytest.raises(DomainError):
        lz_numeric_probabilities(1, 0.1, frame="lab")
