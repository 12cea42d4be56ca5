import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fluxqlm.specfun import (EULER_GAMMA, PrecisionPolicy, bessel_k0, elliptic_k, laguerre,
                             log_factorial)


def test_elliptic_k_zero_is_half_pi():
    assert elliptic_k(0.0) == pytest.approx(math.pi / 2, rel=1e-15)


@pytest.mark.parametrize("m", [0.5, -1.0, -16 * 0.25 / (8 + 4), 0.9, -50.0])
def test_elliptic_k_matches_quadrature_oracle(m):
    oracle = float(mpmath.quad(lambda t: 1 / mpmath.sqrt(1 - m * mpmath.sin(t) ** 2), [0, mpmath.pi / 2]))
    assert elliptic_k(m) == pytest.approx(oracle, rel=1e-12)


def test_elliptic_k_quoted_values():
    assert elliptic_k(0.5) == pytest.approx(1.8540746773, abs=1e-10)
    assert elliptic_k(-1.0) == pytest.approx(1.3110287771, abs=1e-10)


def test_elliptic_k_domain():
    with pytest.raises(ValueError):
        elliptic_k(1.0)
    assert elliptic_k(0.999) > elliptic_k(0.99) > elliptic_k(0.0)


@given(st.floats(-100, 0.99), st.floats(-100, 0.99))
def test_elliptic_k_increasing(a, b):
    if b - a > 1e-9:
        assert elliptic_k(a) < elliptic_k(b)


def test_bessel_k0_small_x_log_limit():
    for x in (1e-3, 1e-5, 1e-7):
        assert abs(bessel_k0(x) + math.log(x / 2) + EULER_GAMMA) < 2 * x


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 1.999, 2.0, 2.001, 3.7, 10.0, 40.0])
def test_bessel_k0_integral_oracle(x):
    # K0(x) = int_0^inf exp(-x cosh t) dt, truncated where the integrand is below e^-800
    top = float(mpmath.acosh(1 + 800 / x))
    oracle = float(mpmath.quad(lambda t: mpmath.exp(-x * mpmath.cosh(t)), np.linspace(0, top, 12).tolist()))
    assert bessel_k0(x) == pytest.approx(oracle, rel=1e-12)


def test_bessel_k0_quoted_and_asymptotic():
    assert bessel_k0(1.0) == pytest.approx(0.4210244382, abs=1e-10)
    x = 10.0
    asym = math.exp(-x) * math.sqrt(math.pi / (2 * x)) * (1 - 1 / (8 * x))
    assert abs(bessel_k0(x) / asym - 1) < 2e-3


def test_bessel_k0_crossover_continuity():
    lo, hi = bessel_k0(2.0 - 1e-12), bessel_k0(2.0 + 1e-12)
    assert abs(lo - hi) / lo < 1e-10


def test_bessel_k0_domain():
    with pytest.raises(ValueError):
        bessel_k0(0.0)


@given(st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_bessel_k0_decreasing_positive(a, b):
    ka, kb = bessel_k0(a), bessel_k0(b)
    assert ka > 0 and kb > 0
    if b - a > 1e-9:
        assert ka > kb


def _laguerre_explicit(n, b, x):
    return sum((-1) ** i * math.comb(n + b, n - i) * x ** i / math.factorial(i) for i in range(n + 1))


def test_laguerre_trivial_cases():
    assert laguerre(0, 3, 7.5) == 1.0
    assert laguerre(1, 2, 0.5) == pytest.approx(2.5, abs=1e-15)


def test_laguerre_explicit_coefficients():
    assert laguerre(3, 2, 1.0) == pytest.approx(_laguerre_explicit(3, 2, 1.0), rel=1e-14)


@given(st.integers(0, 40), st.integers(0, 10), st.floats(0, 20))
def test_laguerre_matches_high_precision_sum(n, b, x):
    with mpmath.workdps(60):
        xm = mpmath.mpf(x)
        oracle = float(mpmath.fsum((-1) ** i * mpmath.binomial(n + b, n - i) * xm ** i / mpmath.factorial(i)
                                   for i in range(n + 1)))
    assert laguerre(n, b, x) == pytest.approx(oracle, rel=1e-9, abs=1e-9 * max(1.0, abs(oracle)))


@given(st.integers(1, 49), st.integers(0, 6), st.floats(0, 20))
def test_laguerre_recurrence_residual(n, b, x):
    lp, l0, lm = laguerre(n + 1, b, x), laguerre(n, b, x), laguerre(n - 1, b, x)
    res = (n + 1) * lp - (2 * n + 1 + b - x) * l0 + (n + b) * lm
    scale = max(abs((n + 1) * lp), abs((2 * n + 1 + b - x) * l0), abs((n + b) * lm), 1.0)
    assert abs(res) <= 1e-10 * scale


def test_log_factorial():
    assert log_factorial(0) == 0.0
    assert log_factorial(1) == 0.0
    assert log_factorial(20) == pytest.approx(math.log(2432902008176640000), rel=1e-15)


def test_determinism_bit_identical():
    xs = np.linspace(0.05, 30, 50)
    assert [bessel_k0(x) for x in xs] == [bessel_k0(x) for x in xs]
    assert [elliptic_k(-x) for x in xs] == [elliptic_k(-x) for x in xs]


def test_precision_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(rel_tol=0)
    with pytest.raises(ValueError):
        PrecisionPolicy(max_terms=0)
