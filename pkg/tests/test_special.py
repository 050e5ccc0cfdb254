import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critical_hawkes.errors import DomainError
from critical_hawkes.primitives import mittag_leffler, mittag_leffler_2p
from critical_hawkes.primitives import special

# oracle values: tests/oracles/generate.py (200-term series in 60-digit arithmetic)
E_HALF_HALF_M4 = 0.01619175304751072739
E_HALF_ONE_M1 = 0.42758357615580700441
E_07_13_M25 = 0.26376151727226743039


def _oracle(x, a, b):
    """Power series in enough digits to absorb the cancellation (peak ~ exp(|x|^(1/a)))."""
    if x == 0:
        return float(mp.rgamma(b))
    with mp.workdps(int(30 + 0.45 * abs(x) ** (1 / a))):
        xm, am, bm = mp.mpf(x), mp.mpf(a), mp.mpf(b)
        acc = mp.mpf(0)
        peak = mp.mpf(0)
        k = 0
        while True:
            term = xm**k * mp.rgamma(am * k + bm)
            acc += term
            peak = max(peak, abs(term))
            if k > 10 and abs(term) < peak and abs(term) < mp.mpf(10) ** -30:
                return float(acc)
            k += 1


def test_value_at_zero():
    assert mittag_leffler_2p(0.5, 0.0) == pytest.approx(1 / math.gamma(0.5), rel=1e-15)


def test_exponential_case():
    assert mittag_leffler_2p(1.0, -1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    x = np.linspace(-20, 0, 201)
    assert np.max(np.abs(mittag_leffler(x, 1.0) - np.exp(x))) <= 1e-10


def test_two_parameter_series_oracle():
    assert abs(mittag_leffler_2p(0.5, -4.0) - E_HALF_HALF_M4) <= 1e-10
    assert abs(mittag_leffler(-1.0, 0.5) - E_HALF_ONE_M1) <= 1e-12
    assert abs(mittag_leffler(-2.5, 0.7, 1.3) - E_07_13_M25) <= 1e-12


def test_half_order_closed_form():
    # E_{1/2}(-z) = exp(z^2) erfc(z)
    from scipy.special import erfcx

    z = np.linspace(0, 30, 301)
    assert np.max(np.abs(mittag_leffler(-z, 0.5) - erfcx(z))) <= 1e-12


@st.composite
def _series_domain(draw, diagonal=True):
    """Pairs with |x|^(1/a) <= 300 so the mpmath series stays cheap."""
    a = draw(st.floats(0.1, 1.0))
    b = a if diagonal else draw(st.floats(0.1, 2.5))
    x = -draw(st.floats(0.0, min(60.0, 300.0**a)))
    return a, b, x


@given(_series_domain())
def test_agrees_with_high_precision_series(abx):
    a, _, x = abx
    got = float(mittag_leffler_2p(a, x))
    assert abs(got - _oracle(x, a, a)) <= 1e-10


@given(st.floats(0.1, 0.99), st.floats(0.1, 2.5), st.floats(-5e3, -10.0))
def test_large_argument_agrees_with_oracle(a, b, x):
    # far field: the leading algebraic terms dominate; compare with the contour route
    far = float(mittag_leffler(x, a, b))
    near = float(special._contour(np.array([x]), a, b, use_numba=False)[0])
    assert abs(far - near) <= 1e-10


def test_domain_errors():
    with pytest.raises(DomainError):
        mittag_leffler_2p(0.0, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler_2p(1.5, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler_2p(0.5, 1.0)


@given(_series_domain(diagonal=False))
def test_two_parameter_agrees_with_series(abx):
    a, b, x = abx
    assert abs(float(mittag_leffler(x, a, b)) - _oracle(x, a, b)) <= 1e-10


def test_contour_backends_agree():
    x = -np.linspace(0, 50, 257)
    for a in (0.3, 0.5, 0.9):
        v1 = special._contour(x, a, a, use_numba=True)
        v2 = special._contour(x, a, a, use_numba=False)
        assert np.max(np.abs(v1 - v2)) <= 1e-14
