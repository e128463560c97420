import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import S as Sym
from sympy.physics.quantum.cg import CG

from spinlz.errors import DomainError
from spinlz.su2_algebra import (
    SpinValue,
    clebsch_gordan,
    lz_alpha_coefficients,
    lz_hamiltonian_tensor,
    spin_matrices,
    spin_tensor,
    tensor_coefficients,
    tensor_reconstruct,
)


def test_spin_value():
    s = SpinValue(3)
    assert (s.s, s.dim, s.two_m) == (1.5, 4, (3, 1, -1, -3))
    assert s.index(-1) == 2
    assert SpinValue.from_float(2.5) == SpinValue(5)
    assert str(s) == "3/2" and str(SpinValue(2)) == "1"
    for bad in (0, -1, 1.5):
        with pytest.raises(DomainError):
            SpinValue(bad)
    with pytest.raises(DomainError):
        SpinValue.from_float(0.3)
    with pytest.raises(DomainError):
        s.index(2)


def test_cg_examples():
    assert clebsch_gordan(SpinValue(1), 1, 0, 0, SpinValue(1), 1) == 1
    assert clebsch_gordan(2, 2, 2, 2, 4, 4) == pytest.approx(1)
    assert clebsch_gordan(1, 1, 2, 0, 1, 1) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert clebsch_gordan(1, 1, 1, 1, 2, 0) == 0  # M != m1 + m2
    assert clebsch_gordan(1, 1, 1, -1, 4, 0) == 0  # triangle
    with pytest.raises(DomainError):
        clebsch_gordan(1, 3, 1, 1, 2, 4)


def _all_cg_args(max_two_j):
    for tj1, tj2 in itertools.product(range(max_two_j + 1), repeat=2):
        for tJ in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            for tm1 in range(-tj1, tj1 + 1, 2):
                for tm2 in range(-tj2, tj2 + 1, 2):
                    if abs(tm1 + tm2) <= tJ:
                        yield tj1, tm1, tj2, tm2, tJ, tm1 + tm2


def test_cg_matches_sympy():
    h = Sym.Half
    for tj1, tm1, tj2, tm2, tJ, tM in _all_cg_args(3):
        ref = float(CG(tj1 * h, tm1 * h, tj2 * h, tm2 * h, tJ * h, tM * h).doit())
        assert clebsch_gordan(tj1, tm1, tj2, tm2, tJ, tM) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("tj1,tj2", [(1, 1), (2, 3), (4, 4), (8, 5), (7, 8)])
def test_cg_orthogonality(tj1, tj2):
    Js = range(abs(tj1 - tj2), tj1 + tj2 + 1, 2)
    pairs = [(J, M) for J in Js for M in range(-J, J + 1, 2)]
    rows = [(m1, m2) for m1 in range(-tj1, tj1 + 1, 2) for m2 in range(-tj2, tj2 + 1, 2)]
    c = np.array([[clebsch_gordan(tj1, m1, tj2, m2, J, M) for (J, M) in pairs] for m1, m2 in rows])
    np.testing.assert_allclose(c.T @ c, np.eye(len(pairs)), atol=1e-12)


def test_spin_matrices():
    half = spin_matrices(1)
    np.testing.assert_array_equal(half["Sz"], np.diag([0.5, -0.5]))
    one = spin_matrices(2)
    np.testing.assert_allclose(one["Sx"] @ one["Sy"] - one["Sy"] @ one["Sx"], 1j * one["Sz"], atol=1e-14)
    np.testing.assert_allclose(np.diag(one["Splus"], 1), [math.sqrt(2)] * 2)
    np.testing.assert_allclose(one["Splus"], one["Sx"] + 1j * one["Sy"], atol=1e-15)


@pytest.mark.parametrize("two_s", [1, 2, 3, 4, 7])
def test_casimir(two_s):
    m = spin_matrices(two_s)
    s = two_s / 2
    c = m["Sx"] @ m["Sx"] + m["Sy"] @ m["Sy"] + m["Sz"] @ m["Sz"]
    np.testing.assert_allclose(c, s * (s + 1) * np.eye(two_s + 1), atol=1e-13)


def test_tensor_examples():
    for two_s in (1, 2, 3):
        np.testing.assert_allclose(spin_tensor(two_s, 0, 0), np.eye(two_s + 1) / math.sqrt(two_s + 1), atol=1e-15)
    np.testing.assert_allclose(spin_tensor(1, 1, 0), np.diag([1, -1]) / math.sqrt(2), atol=1e-15)
    with pytest.raises(DomainError):
        spin_tensor(1, 2, 0)
    with pytest.raises(DomainError):
        spin_tensor(2, 1, 2)


@pytest.mark.parametrize("two_s", [1, 2, 3, 4])
def test_tensor_orthonormal_and_selection_rule(two_s):
    s = SpinValue(two_s)
    keys = [(L, M) for L in range(two_s + 1) for M in range(-L, L + 1)]
    ts = {k: spin_tensor(s, *k) for k in keys}
    gram = np.array([[np.vdot(ts[a], ts[b]) for b in keys] for a in keys])
    np.testing.assert_allclose(gram, np.eye(len(keys)), atol=1e-12)
    for (L, M), t in ts.items():
        rows, cols = np.nonzero(np.abs(t) > 1e-15)
        for i, j in zip(rows, cols):
            assert s.two_m[i] == s.two_m[j] + 2 * M


@settings(max_examples=25, deadline=None)
@given(two_s=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_tensor_completeness(two_s, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(two_s + 1,) * 2) + 1j * rng.normal(size=(two_s + 1,) * 2)
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    back = tensor_reconstruct(tensor_coefficients(rho), two_s)
    np.testing.assert_allclose(back, rho, atol=1e-12)


def test_alpha_coefficients_structure():
    a = lz_alpha_coefficients(3, 0.7, 1.3, -2.0)
    assert a[(0, 0)] == 0 and set(a) == {(0, 0), (1, -1), (1, 0), (1, 1)}
    assert a[(1, 1)] == -a[(1, -1)]


def test_lz_hamiltonian_examples():
    np.testing.assert_allclose(lz_hamiltonian_tensor(2, 0.0, 1.0, 0.0), 0, atol=1e-15)
    np.testing.assert_allclose(lz_hamiltonian_tensor(1, 1.0, 1.0, 0.0), [[0, 1], [1, 0]], atol=1e-14)


@pytest.mark.parametrize("two_s", range(1, 9))
def test_lz_hamiltonian_equals_generator_form(two_s):
    rng = np.random.default_rng(two_s)
    d, v, t = rng.normal(size=3)
    m = spin_matrices(two_s)
    np.testing.assert_allclose(lz_hamiltonian_tensor(two_s, d, v, t), 2 * d * m["Sx"] + 2 * v * t * m["Sz"], atol=1e-12)
