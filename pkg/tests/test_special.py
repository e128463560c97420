import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import loggamma as scipy_loggamma

from spinlz.errors import DomainError
from spinlz.special import appell_f4_terminating, gauss2f1_terminating, loggamma, loggamma_stirling


def brute_2f1(n, b, c, z):
    total = 0j
    for k in range(n + 1):
        num = math.prod(-n + i for i in range(k)) * math.prod(b + i for i in range(k))
        den = math.prod(c + i for i in range(k)) * math.factorial(k)
        total += num / den * z**k
    return total


def brute_f4(n, beta, c1, c2, x, y):
    def poch(a, k):
        return math.prod(a + i for i in range(k))

    return sum(
        poch(-n, j + k) * poch(beta, j + k) / (poch(c1, j) * poch(c2, k) * math.factorial(j) * math.factorial(k))
        * x**j * y**k
        for j in range(n + 1)
        for k in range(n + 1 - j)
    )


def test_2f1_trivial_cases():
    assert gauss2f1_terminating(0, 3.3, 1.7, 0.4 + 2j) == 1
    b, c, z = 2.5, 1.5, 0.3 - 0.2j
    assert gauss2f1_terminating(-1, b, c, z) == pytest.approx(1 - b * z / c, abs=1e-15)


def test_2f1_matches_direct_sum():
    assert gauss2f1_terminating(-3, 5, 2, 0.3) == pytest.approx(brute_2f1(3, 5, 2, 0.3).real, abs=1e-14)


def test_2f1_array_argument():
    z = np.linspace(-1, 1, 7) + 0.5j
    out = gauss2f1_terminating(-4, 1.5, 2.0, z)
    assert out.shape == z.shape
    np.testing.assert_allclose(out, [brute_2f1(4, 1.5, 2.0, x) for x in z], rtol=1e-13)


def test_2f1_pole_rejected():
    with pytest.raises(DomainError):
        gauss2f1_terminating(-3, 1.0, -1.0, 0.2)
    with pytest.raises(DomainError):
        gauss2f1_terminating(1.5, 1.0, 1.0, 0.2)


def test_f4_cases():
    assert appell_f4_terminating(0, 2.0, 1.0, 1.0, 0.3, 0.4) == 1
    beta, c1, c2, x, y = 3.0, 2.0, 5.0, 0.2, 0.7
    assert appell_f4_terminating(-1, beta, c1, c2, x, y) == pytest.approx(1 - beta * (x / c1 + y / c2), abs=1e-15)
    assert appell_f4_terminating(-2, 4, 2, 3, 0.2, 0.5) == pytest.approx(brute_f4(2, 4, 2, 3, 0.2, 0.5), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(0, 6),
    beta=st.floats(0.5, 5),
    c1=st.integers(1, 6),
    c2=st.integers(1, 6),
    x=st.floats(0, 1),
    y=st.floats(0, 1),
)
def test_f4_property_against_double_sum(n, beta, c1, c2, x, y):
    ref = brute_f4(n, beta, c1, c2, x, y)
    assert appell_f4_terminating(-n, beta, c1, c2, x, y) == pytest.approx(ref, rel=1e-11, abs=1e-11)


def test_f4_pole_rejected():
    with pytest.raises(DomainError):
        appell_f4_terminating(-2, 1.0, 0.0, 1.0, 0.1, 0.1)


@pytest.mark.parametrize("z", [1 - 1j, 0.5 + 3j, 10 - 0.1j, 0.1 + 0.1j, -2.5 + 0.7j, 1 - 40j])
def test_loggamma_against_stirling_and_scipy(z):
    got = loggamma(z)
    assert abs(got - loggamma_stirling(z)) < 1e-12 * max(1, abs(got))
    ref = complex(scipy_loggamma(z))
    # compare modulo 2 pi i: branch conventions may differ off the principal strip
    assert abs(got.real - ref.real) < 1e-12 * max(1, abs(ref))
    d = (got.imag - ref.imag) / (2 * math.pi)
    assert abs(d - round(d)) < 1e-12 * max(1, abs(ref))


def test_arg_gamma_value():
    assert loggamma(1 - 1j).imag == pytest.approx(0.301640320467533, abs=1e-12)
    assert cmath.exp(loggamma(5)) == pytest.approx(24)
