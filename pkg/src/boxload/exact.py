"""Exact finite-n moments of the occupancy proportions.

The occupancy proportion for count r is the fraction of boxes holding
exactly r balls. Its mean, variance, and covariances have closed
multinomial forms built from single-box and box-pair expectations. Every
per-box (or per-pair) term here is itself a probability, so terms are
exponentiated individually from the log domain and compensated-summed;
no log-sum-exp is needed.

Conventions: 0^0 = 1 throughout (a zero base only ever appears with a
zero exponent at support boundaries), and (a)_+ = max(a, 0) keeps the
pair formulas valid for arbitrarily large weights.

A brute-force enumeration oracle over all count vectors is included for
independent verification at tiny sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ApplicabilityError, EqualIndices, RangeError, TooLarge
from .model import AllocationModel, e_xi, e_xi_pair
from .special import log_binomial, log_factorial, log_multinomial


@dataclass
class MomentSet:
    """Exact or approximate first/second moments for a set of counts."""

    model: AllocationModel
    indices: list[int]
    means: dict = field(default_factory=dict)
    variances: dict = field(default_factory=dict)
    covariances: dict = field(default_factory=dict)
    kind: str = "exact"


def _check_count(r: int, n: int) -> None:
    if r < 0 or r > n:
        raise RangeError(f"occupancy count must satisfy 0 <= r <= n, got r={r}, n={n}")


def _mean_integrand(n: int, r: int, lc: float):
    def f(xs):
        xs = np.asarray(xs, dtype=float)
        q = xs / n
        expo = np.full(q.shape, lc)
        if r > 0:
            expo += r * np.log(q)  # q > 0 always
        if n - r > 0:
            with np.errstate(divide="ignore"):
                expo += (n - r) * np.log1p(-q)  # -inf at q == 1 -> term 0
        return np.exp(expo)

    return f


@lru_cache(maxsize=8192)
def exact_mean(model: AllocationModel, r: int) -> float:
    """E[proportion of boxes with exactly r balls] = C(n,r) E[q_X^r (1-q_X)^{n-r}]."""
    n = model.ball_count
    _check_count(r, n)
    if n == 0:
        return 1.0  # r == 0 forced; the empty allocation leaves every box empty
    return e_xi(model, _mean_integrand(n, r, log_binomial(n, r)))


def _pair_integrand(n: int, r: int, t: int, lmult: float):
    m = n - r - t

    def g(X, Y):
        qx = np.asarray(X, dtype=float) / n
        qy = np.asarray(Y, dtype=float) / n
        expo = np.full(np.broadcast_shapes(qx.shape, qy.shape), lmult)
        if r > 0:
            expo += r * np.log(qx)
        if t > 0:
            expo += t * np.log(qy)
        if m > 0:
            base = 1.0 - qx - qy
            with np.errstate(divide="ignore"):
                lb = np.where(base > 0, np.log(np.where(base > 0, base, 1.0)), -np.inf)
            expo = expo + m * lb  # (a)_+^m: zero or negative base -> term 0
        return np.exp(expo)

    return g


def _diag_integrand(n: int, s: int, lmult: float):
    m = n - s

    def f(xs):
        q = np.asarray(xs, dtype=float) / n
        expo = np.full(q.shape, lmult)
        if s > 0:
            expo += s * np.log(q)
        if m > 0:
            base = 1.0 - 2.0 * q
            with np.errstate(divide="ignore"):
                lb = np.where(base > 0, np.log(np.where(base > 0, base, 1.0)), -np.inf)
            expo = expo + m * lb
        return np.exp(expo)

    return f


def phi(model: AllocationModel, r: int, t: int) -> float:
    """Cross moment E[q̂_r q̂_t] (distinct boxes) minus the mean product.

    Equals the covariance for r != t; the variance adds back N^{-1} times
    the mean. When r + t > n no two boxes can hold r and t balls at once,
    so the multinomial term vanishes and only -E[q̂_r]E[q̂_t] remains.
    """
    n = model.ball_count
    boxes = model.profile.box_count
    _check_count(r, n)
    _check_count(t, n)
    mr = exact_mean(model, r)
    mt = exact_mean(model, t)
    if r + t > n:
        return -mr * mt
    if n == 0:
        return 1.0 - 1.0 / boxes - mr * mt  # all exponents vanish; terms are 1
    lmult = log_multinomial(n, r, t)
    pair = e_xi_pair(model, _pair_integrand(n, r, t, lmult))
    diag = e_xi(model, _diag_integrand(n, r + t, lmult))
    return pair - diag / boxes - mr * mt


def exact_variance(model: AllocationModel, r: int) -> float:
    """V[q̂_r] = phi(r, r) + N^{-1} E[q̂_r]; non-negative up to round-off."""
    _check_count(r, model.ball_count)
    return phi(model, r, r) + exact_mean(model, r) / model.profile.box_count


def exact_covariance(model: AllocationModel, r: int, t: int) -> float:
    """C[q̂_r, q̂_t] = phi(r, t) for r != t; exactly symmetric in (r, t)."""
    if r == t:
        raise EqualIndices(f"covariance needs r != t, got r = t = {r}")
    _check_count(r, model.ball_count)
    _check_count(t, model.ball_count)
    return phi(model, r, t)


def q_functional(model: AllocationModel, r: int, t: int) -> float:
    """Pair load functional E[xi^r eta^t (1 - q_X - q_Y)^{n-r-t}] / (r! t!).

    Requires q_1 <= 1/2 so the base is never negative; the value lies in
    [0, beta^{r+t} / (r! t!)].
    """
    n = model.ball_count
    if r < 0 or t < 0 or r + t > n:
        raise RangeError(f"need r, t >= 0 and r + t <= n, got r={r}, t={t}, n={n}")
    if float(model.profile.weights[0]) > 0.5:
        raise ApplicabilityError(
            f"q_functional needs q_1 <= 1/2, got q_1 = {model.profile.weights[0]}")
    if n == 0:
        return 1.0  # r = t = 0 forced; empty product
    lpref = -log_factorial(r) - log_factorial(t)
    m = n - r - t

    def g(X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        expo = np.full(np.broadcast_shapes(X.shape, Y.shape), lpref)
        if r > 0:
            expo += r * np.log(X)
        if t > 0:
            expo += t * np.log(Y)
        if m > 0:
            with np.errstate(divide="ignore"):
                expo = expo + m * np.log1p(-(X + Y) / n)  # base >= 0 under q_1 <= 1/2
        return np.exp(expo)

    return e_xi_pair(model, g)


def _compositions(total: int, parts: int):
    # weak compositions of `total` into `parts` ordered non-negative terms
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


#: Enumeration gate for the brute-force oracle.
MAX_COMPOSITIONS = 2_000_000


def brute_force_moments(model: AllocationModel) -> MomentSet:
    """Independent oracle: enumerate every count vector with its multinomial
    probability and accumulate exact means/variances/covariances of all
    occupancy proportions.
    """
    n = model.ball_count
    boxes = model.profile.box_count
    size = math.comb(n + boxes - 1, boxes - 1)
    if size > MAX_COMPOSITIONS:
        raise TooLarge(f"{size} compositions exceeds the gate {MAX_COMPOSITIONS}")
    logq = np.log(model.profile.weights)
    lf = [log_factorial(k) for k in range(n + 1)]
    dim = n + 1
    m1 = np.zeros(dim)
    m2 = np.zeros((dim, dim))
    for combo in _compositions(n, boxes):
        counts = np.asarray(combo)
        logp = lf[n] - math.fsum(lf[c] for c in combo) + float(counts @ logq)
        p = math.exp(logp)
        qhat = np.bincount(counts, minlength=dim) / boxes
        m1 += p * qhat
        m2 += p * np.outer(qhat, qhat)
    cov = m2 - np.outer(m1, m1)
    return MomentSet(
        model=model,
        indices=list(range(dim)),
        means={r: float(m1[r]) for r in range(dim)},
        variances={r: float(cov[r, r]) for r in range(dim)},
        covariances={(r, t): float(cov[r, t])
                     for r in range(dim) for t in range(r + 1, dim)},
        kind="exact",
    )
