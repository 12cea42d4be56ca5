"""Special functions used by the device and capacitance formulas.

Everything here is plain float arithmetic: the complete elliptic integral
K(m) in the parameter convention, the modified Bessel function K_0, generalized
Laguerre polynomials and log-factorials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class PrecisionPolicy:
    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_POLICY = PrecisionPolicy()


def elliptic_k(m: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Complete elliptic integral of the first kind, K(m) = int_0^{pi/2} (1 - m sin^2)^(-1/2).

    Parameter convention, so negative m is allowed. Uses the AGM:
    K(m) = pi / (2 AGM(1, sqrt(1 - m))).
    """
    m = float(m)
    if not m < 1.0 or math.isnan(m):
        raise ValueError(f"elliptic_k requires m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(policy.max_terms):
        if abs(a - b) <= policy.rel_tol * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    else:
        raise ArithmeticError("AGM did not converge")
    return math.pi / (a + b)


def _k0_series(x: float, policy: PrecisionPolicy) -> float:
    # K0 = -(ln(x/2) + gamma) I0 + sum_k (x^2/4)^k / (k!)^2 H_k
    y = 0.25 * x * x
    term = 1.0
    i0 = 1.0
    acc = 0.0
    harmonic = 0.0
    for k in range(1, policy.max_terms):
        term *= y / (k * k)
        harmonic += 1.0 / k
        i0 += term
        acc += term * harmonic
        if term * max(harmonic, 1.0) < 1e-17 * (i0 + acc):
            break
    return -(math.log(0.5 * x) + EULER_GAMMA) * i0 + acc


def _k0_steed(x: float, policy: PrecisionPolicy) -> float:
    # Steed's continued fraction for K_nu with Temme normalization, nu = 0
    a1 = 0.25
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, policy.max_terms):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-17:
            break
    else:
        raise ArithmeticError("K0 continued fraction did not converge")
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s


def bessel_k0(x: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Modified Bessel function of the second kind, order zero.

    Power series for x <= 2, Steed's continued fraction above.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"bessel_k0 requires x > 0, got {x}")
    if x <= 2.0:
        return _k0_series(x, policy)
    return _k0_steed(x, policy)


def laguerre(n: int, b: int, x: float) -> float:
    """Generalized Laguerre polynomial L_n^{(b)}(x) by upward recurrence."""
    if n < 0 or b < 0:
        raise ValueError("laguerre requires n, b >= 0")
    prev, cur = 1.0, 1.0 + b - x
    if n == 0:
        return prev
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + b - x) * cur - (k + b) * prev) / (k + 1)
    return cur


def log_factorial(n: int) -> float:
    """ln(n!)."""
    if n < 0:
        raise ValueError("log_factorial requires n >= 0")
    if n < 2:
        return 0.0
    return math.lgamma(n + 1.0)
