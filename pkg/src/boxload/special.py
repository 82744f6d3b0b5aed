"""Numerically careful auxiliary functions.

Pure functions shared by the exact and approximate moment code: log-domain
combinatorics, Poisson weights, and the correction functions that measure
how fast multinomial quantities approach their Poisson limits.

Every "difference of nearly equal quantities times n" is factored through
``expm1``/``log1p``; the literal subtractions lose about ``n * eps`` of
absolute precision, which is exactly the order of the quantities computed
here.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import FactorialOverflow, NegativeInput, RangeError

# Occupancy indices beyond this are meaningless at binary64: the log-domain
# factors r*log(beta) - log(r!) saturate double precision long before.
R_CAP = 1024


def _check_index(r: int) -> None:
    if r < 0:
        raise NegativeInput(f"occupancy index must be >= 0, got {r}")
    if r > R_CAP:
        raise FactorialOverflow(f"occupancy index {r} exceeds cap {R_CAP}")


def _check_nr(n: int, r: int) -> None:
    if n < 1:
        raise RangeError(f"need n >= 1, got {n}")
    if r < 0 or r > n:
        raise RangeError(f"need 0 <= r <= n, got r={r}, n={n}")
    if r > R_CAP:
        raise FactorialOverflow(f"occupancy index {r} exceeds cap {R_CAP}")


def log_factorial(k: int) -> float:
    """log(k!), via lgamma; accurate to a couple of ulps for any k >= 0."""
    if k < 0:
        raise NegativeInput(f"log_factorial needs k >= 0, got {k}")
    return math.lgamma(k + 1)


def log_binomial(n: int, r: int) -> float:
    """log of the binomial coefficient C(n, r), 0 <= r <= n."""
    if r < 0 or r > n:
        raise RangeError(f"need 0 <= r <= n, got r={r}, n={n}")
    return log_factorial(n) - log_factorial(r) - log_factorial(n - r)


def log_multinomial(n: int, r: int, t: int) -> float:
    """log of the trinomial coefficient n! / (r! t! (n-r-t)!)."""
    if r < 0 or t < 0 or r + t > n:
        raise RangeError(f"need r, t >= 0 and r + t <= n, got r={r}, t={t}, n={n}")
    return (log_factorial(n) - log_factorial(r) - log_factorial(t)
            - log_factorial(n - r - t))


def poisson_weight(r: int, x: float) -> float:
    """Poisson(x) probability of the value r: x^r e^{-x} / r!.

    Evaluated as exp(r log x - x - log r!) so neither the power nor the
    factorial can overflow on the way to a result in [0, 1].
    """
    _check_index(r)
    if x < 0:
        raise NegativeInput(f"poisson_weight needs x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if r == 0 else 0.0
    return math.exp(r * math.log(x) - x - log_factorial(r))


def poisson_weights(r: int, x) -> np.ndarray:
    """Vectorized :func:`poisson_weight` over an array of x >= 0."""
    _check_index(r)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeInput("poisson_weights needs x >= 0")
    out = np.empty_like(x)
    zero = x == 0.0
    nz = ~zero
    lf = log_factorial(r)
    out[nz] = np.exp(r * np.log(x[nz]) - x[nz] - lf)
    out[zero] = 1.0 if r == 0 else 0.0
    return out


def varphi(n: int, r: int) -> float:
    """Falling-factorial defect: n * (1 - (n!/(n-r)!) / n^r).

    Zero for r in {0, 1}, exactly 1 for r = 2, and never larger than
    r(r-1)/2. Computed as -n*expm1(sum log1p(-k/n)), which keeps full
    precision even when the product of (1 - k/n) factors is close to 1.
    """
    _check_nr(n, r)
    if r < 2:
        return 0.0
    s = math.fsum(math.log1p(-k / n) for k in range(1, r))
    return -n * math.expm1(s)


def varphi_star(n: int, r: int) -> float:
    """Second-order defect n * (r(r-1)/2 - varphi(n, r)), in [0, r^4].

    Accumulated as sum_{k=1}^{r-1} k * varphi(n, k); the literal
    subtraction would lose ~n*eps of absolute precision.
    """
    _check_nr(n, r)
    if r < 3:
        # varphi(n, 0) = varphi(n, 1) = 0 and varphi(n, 2) = 1 exactly
        return 0.0
    total = 0.0
    logprod = 0.0  # sum_{j<k} log(1 - j/n)
    for k in range(1, r):
        total += k * (-n * math.expm1(logprod))
        logprod += math.log1p(-k / n)
    return total


def delta(n: int, r: int, x: float) -> float:
    """Scaled Poisson-limit gap n * ((1 - x/n)^{n-r} - e^{-x}).

    Cancellation-safe form: n e^{-x} expm1((n-r) log1p(-x/n) + x).
    Defined on 0 <= x <= n; the two-sided inequalities -2 <= delta and
    delta <= r 2^{r-1} are guaranteed only on x <= n/2 and are asserted
    by callers, not here.
    """
    _check_nr(n, r)
    if x < 0 or x > n:
        raise RangeError(f"delta needs 0 <= x <= n, got x={x}, n={n}")
    if x == 0.0:
        return 0.0
    if r == n:
        lg = 0.0  # exponent n - r == 0: the power is exactly 1
    elif x == n:
        return -n * math.exp(-x)  # the power is exactly 0
    else:
        lg = (n - r) * math.log1p(-x / n)
    return n * math.exp(-x) * math.expm1(lg + x)


def delta_star(n: int, r: int, x: float) -> float:
    """Next-order gap n * (delta(n, r, x) - e^{-x} x (r - x/2)).

    On 0 <= x <= n/2 it stays within [-4 - r, x^2 r (r+1) 2^{r+1}]; in
    particular it is never positive for r = 0.
    """
    d = delta(n, r, x)
    return n * (d - math.exp(-x) * x * (r - x / 2.0))
