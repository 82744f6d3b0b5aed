"""Poisson-limit expansions of the occupancy moments, with certified
two-sided remainder bounds.

Each moment expands as ``leading + correction + scale * R`` where the
correction already carries its 1/n factor and the remainder scale is
n^{-2} (n^{-1} for the one-term mean expansion). Residual extractors
recompute R end to end as exact-minus-truncation, never from intermediate
algebra, so the bound functions certify the whole pipeline.

The bounds hold whenever the largest weight is at most 1/4. Outside that
region the expansions and residuals remain well defined and are still
reported; only the certification flag drops. All beta^r / r! prefactors
are evaluated in the log domain so large indices cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ApplicabilityError, EqualIndices, RangeError
from .exact import exact_covariance, exact_mean, exact_variance
from .model import AllocationModel, e_xi, parse_profile_spec
from .special import _check_index, log_factorial, poisson_weights

_LOG2 = math.log(2.0)

#: Largest weight admitted by the certified bounds.
APPLICABILITY_Q1 = 0.25

#: Relative slack used when testing residual membership in a bound interval.
BOUND_SLACK = 1e-8


@dataclass(frozen=True)
class ApproxExpansion:
    """Truncated expansion of one moment: leading + correction + scale*R."""

    leading: float
    correction: float
    remainder_scale: float

    @property
    def value(self) -> float:
        return self.leading + self.correction


@dataclass(frozen=True)
class BoundReport:
    """A residual together with its certified interval.

    ``applicable`` records whether the largest weight is within the
    certified region (q_1 <= 1/4); ``satisfied`` is the slack-padded
    membership test, reported in either case.
    """

    remainder: float
    lower: float
    upper: float
    applicable: bool
    satisfied: bool


def make_bound_report(remainder: float, lower: float, upper: float,
                      applicable: bool) -> BoundReport:
    slack = BOUND_SLACK * max(1.0, abs(lower), abs(upper))
    satisfied = (lower - slack) <= remainder <= (upper + slack)
    return BoundReport(remainder, lower, upper, applicable, satisfied)


def bounds_applicable(model: AllocationModel) -> bool:
    """True when the certified bounds apply (largest weight <= 1/4)."""
    return float(model.profile.weights[0]) <= APPLICABILITY_Q1


# ---------------------------------------------------------------------------
# cached load-distribution expectations of Poisson weights

def _check_expansion_args(model: AllocationModel, r: int) -> None:
    n = model.ball_count
    if n < 1:
        raise RangeError(f"expansions need n >= 1, got {n}")
    if r < 0 or r > n:
        raise RangeError(f"need 0 <= r <= n, got r={r}, n={n}")


@lru_cache(maxsize=8192)
def _e_p(model: AllocationModel, r: int) -> float:
    # E[p_r(xi)]
    return e_xi(model, lambda xs: poisson_weights(r, xs))


@lru_cache(maxsize=8192)
def _e_p_centered(model: AllocationModel, r: int) -> float:
    # E[p_r(xi) (xi - r)]
    return e_xi(model, lambda xs: poisson_weights(r, xs) * (xs - r))


@lru_cache(maxsize=8192)
def _e_p_curvature(model: AllocationModel, r: int) -> float:
    # E[p_r(xi) (r - (xi - r)^2)]
    return e_xi(model, lambda xs: poisson_weights(r, xs) * (r - (xs - r) ** 2))


@lru_cache(maxsize=8192)
def _e_p_one_minus(model: AllocationModel, r: int) -> float:
    # E[p_r(xi) (1 - p_r(xi))]
    def f(xs):
        p = poisson_weights(r, xs)
        return p * (1.0 - p)

    return e_xi(model, f)


@lru_cache(maxsize=8192)
def _e_pp(model: AllocationModel, r: int, t: int) -> float:
    # E[p_r(xi) p_t(xi)]
    return e_xi(model, lambda xs: poisson_weights(r, xs) * poisson_weights(t, xs))


# ---------------------------------------------------------------------------
# expansions

def mean_expansion(model: AllocationModel, r: int) -> ApproxExpansion:
    """E[q̂_r] ~ E[p_r(xi)] + (2n)^{-1} E[p_r(xi)(r - (xi-r)^2)] + n^{-2} R1."""
    _check_expansion_args(model, r)
    n = model.ball_count
    return ApproxExpansion(
        leading=_e_p(model, r),
        correction=_e_p_curvature(model, r) / (2.0 * n),
        remainder_scale=n ** -2.0,
    )


def variance_expansion(model: AllocationModel, r: int) -> ApproxExpansion:
    """V[q̂_r] ~ n^{-1}(alpha E[p_r(1-p_r)] - E[p_r(xi)(xi-r)]^2) + n^{-2}(R2 + alpha R1)."""
    _check_expansion_args(model, r)
    n = model.ball_count
    correction = (model.alpha * _e_p_one_minus(model, r)
                  - _e_p_centered(model, r) ** 2) / n
    return ApproxExpansion(leading=0.0, correction=correction,
                           remainder_scale=n ** -2.0)


def covariance_expansion(model: AllocationModel, r: int, t: int) -> ApproxExpansion:
    """C[q̂_r, q̂_t] ~ -n^{-1}(alpha E[p_r p_t] + E[p_r(xi)(xi-r)] E[p_t(xi)(xi-t)])."""
    if r == t:
        raise EqualIndices(f"covariance expansion needs r != t, got r = t = {r}")
    _check_expansion_args(model, r)
    _check_expansion_args(model, t)
    n = model.ball_count
    correction = (-model.alpha * _e_pp(model, r, t)
                  - _e_p_centered(model, r) * _e_p_centered(model, t)) / n
    return ApproxExpansion(leading=0.0, correction=correction,
                           remainder_scale=n ** -2.0)


# ---------------------------------------------------------------------------
# residual extraction (exact minus truncated expansion, rescaled)

def residual_r1(model: AllocationModel, r: int) -> float:
    """n^2 * (exact mean - two-term expansion); bounded by r1_bounds."""
    exp = mean_expansion(model, r)
    n = model.ball_count
    return n ** 2 * (exact_mean(model, r) - exp.leading - exp.correction)


def residual_r2_var(model: AllocationModel, r: int) -> float:
    """n^2 * (exact variance - one-term expansion).

    Extracts the combined remainder R2(n,r,r) + alpha*R1(n,r); its
    certified interval is the interval sum, variance_residual_bounds.
    """
    exp = variance_expansion(model, r)
    n = model.ball_count
    return n ** 2 * (exact_variance(model, r) - exp.correction)


def residual_r2_cov(model: AllocationModel, r: int, t: int) -> float:
    """n^2 * (exact covariance - one-term expansion); bounded by r2_bounds."""
    exp = covariance_expansion(model, r, t)
    n = model.ball_count
    return n ** 2 * (exact_covariance(model, r, t) - exp.correction)


def r0_residual(model: AllocationModel, r: int) -> float:
    """n * (exact mean - E[p_r(xi)]); bounded by r0_bounds."""
    _check_expansion_args(model, r)
    n = model.ball_count
    return n * (exact_mean(model, r) - _e_p(model, r))


# ---------------------------------------------------------------------------
# certified intervals

def _log_sum(terms) -> float:
    # log(sum(exp(t))) over possibly -inf terms
    return float(np.logaddexp.reduce(np.asarray(terms, dtype=float)))


def _check_bound_args(r: int, beta: float) -> None:
    if r < 0:
        raise RangeError(f"index must be >= 0, got {r}")
    _check_index(r)
    if not beta > 0:
        raise RangeError(f"beta must be positive, got {beta}")


def r1_bounds(r: int, beta: float) -> tuple[float, float]:
    """Interval for the mean remainder:
    [-(beta^r/r!)(r^3 2^{r-1} + 4), (beta^r/r!) r^2 (2r^2 + 4 beta^2)].
    """
    _check_bound_args(r, beta)
    if r == 0:
        return (-4.0, 0.0)
    lpref = r * math.log(beta) - log_factorial(r)
    llo = _log_sum([3 * math.log(r) + (r - 1) * _LOG2, math.log(4.0)])
    lhi = 2 * math.log(r) + _log_sum(
        [_LOG2 + 2 * math.log(r), math.log(4.0) + 2 * math.log(beta)])
    return (-math.exp(lpref + llo), math.exp(lpref + lhi))


def _log_l2(u: int, beta: float) -> float:
    lb = math.log(beta)
    terms = [math.log(12.0), _LOG2 + lb,
             math.log(5.0) + math.log(u ** 3 + beta) + u * _LOG2,
             2 * lb + math.log(u * u + 1.0)]
    return _log_sum(terms)


def _log_k2(u: int, beta: float) -> float:
    lb = math.log(beta)
    terms = [math.log(8.0)]
    if u >= 1:
        lu = math.log(u)
        terms += [math.log(12.0) + 3 * lu + u * _LOG2,
                  math.log(4.0) + lb + lu,
                  2 * lb + (2 * u + 6) * _LOG2 + 2 * lu]
    return _log_sum(terms)


def r2_bounds(r: int, t: int, beta: float) -> tuple[float, float]:
    """Interval for the covariance remainder:
    [-(beta^{2u}/(r! t!)) L2(u, beta), (beta^{2u}/(r! t!)) K2(u, beta)],
    u = max(r, t), with the second-order envelopes
    L2(u,b) = 12 + 2b + 5(u^3 + b) 2^u + b^2 (u^2 + 1) and
    K2(u,b) = 8 + 12 u^3 2^u + 4 b u + b^2 2^{2u+6} u^2.
    """
    _check_bound_args(r, beta)
    _check_bound_args(t, beta)
    u = max(r, t)
    lpref = 2 * u * math.log(beta) - log_factorial(r) - log_factorial(t)
    return (-math.exp(lpref + _log_l2(u, beta)),
            math.exp(lpref + _log_k2(u, beta)))


def variance_residual_bounds(r: int, beta: float, alpha: float) -> tuple[float, float]:
    """Interval sum certifying the combined variance remainder R2 + alpha*R1."""
    lo2, hi2 = r2_bounds(r, r, beta)
    lo1, hi1 = r1_bounds(r, beta)
    return (lo2 + alpha * lo1, hi2 + alpha * hi1)


def r0_bounds(r: int, beta: float) -> tuple[float, float]:
    """Interval for the one-term mean remainder:
    [-(beta^r/r!)(r^2 + 2), (r/r!) (2 beta)^r].
    """
    _check_bound_args(r, beta)
    if r == 0:
        return (-2.0, 0.0)
    lpref = r * math.log(beta) - log_factorial(r)
    lower = -math.exp(lpref + math.log(r * r + 2.0))
    upper = math.exp(math.log(r) + r * (_LOG2 + math.log(beta)) - log_factorial(r))
    return (lower, upper)


# ---------------------------------------------------------------------------
# equiprobable specialization

def equiprobable_envelope(n: int, box_count: int, which: str):
    """Order-n^{-1} approximation and n^{-2} error band for the empty-box
    statistics of the equiprobable allocation.

    Returns (approximation, band_lower, band_upper) such that the exact
    value minus the approximation lies in [band_lower, band_upper].
    Requires box_count >= 4 so the largest weight is at most 1/4.
    """
    if box_count < 4:
        raise ApplicabilityError(
            f"error bands need at least 4 boxes, got {box_count}")
    if n < 1:
        raise RangeError(f"need n >= 1, got {n}")
    alpha = n / box_count
    nsq = float(n) ** 2
    if which == "mean":
        approx = math.exp(-alpha) * (1.0 - alpha * alpha / (2.0 * n))
        return approx, -4.0 / nsq, 0.0
    if which == "variance":
        ea = math.exp(-alpha)
        e2a = math.exp(-2.0 * alpha)
        approx = (alpha * ea - alpha * e2a - alpha * alpha * e2a) / n
        return approx, -(alpha * alpha + 11.0 * alpha + 12.0) / nsq, 8.0 / nsq
    raise ValueError(f"which must be 'mean' or 'variance', got {which!r}")


# ---------------------------------------------------------------------------
# bound certification corpus

def default_verification_corpus() -> list[tuple[str, AllocationModel]]:
    """Desk-scale grid of models on which every certified bound is checked."""
    entries = []
    for spec, n_list in [
        ("equi:4", (8, 16, 40)),
        ("equi:10", (10, 60)),
        ("equi:100", (10, 100, 200)),
        ("powerlaw:100:0.5", (20, 100)),
        ("powerlaw:100:1", (20, 100)),
    ]:
        profile = parse_profile_spec(spec)
        for n in n_list:
            entries.append((spec, AllocationModel(n, profile)))
    return entries


def certify_bounds(corpus=None, max_index: int = 8) -> list[dict]:
    """Check every residual against its certified interval on a model corpus.

    Returns one row per (model, kind, indices): the residual, the interval,
    the applicability flag, and the slack-padded membership verdict. The
    variance rows use the interval sum of the covariance and alpha-scaled
    mean intervals; covariance rows require r + t <= n and variance rows
    2r <= n (no second-order expansion exists beyond that).
    """
    if corpus is None:
        corpus = default_verification_corpus()
    rows = []

    def add(model_id, model, kind, r, t, residual, interval, applicable):
        report = make_bound_report(residual, interval[0], interval[1], applicable)
        rows.append({
            "model_id": model_id,
            "n": model.ball_count,
            "N": model.profile.box_count,
            "r": r,
            "t": t,
            "kind": kind,
            "remainder": report.remainder,
            "lower": report.lower,
            "upper": report.upper,
            "applicable": report.applicable,
            "satisfied": report.satisfied,
        })

    for model_id, model in corpus:
        n = model.ball_count
        beta = model.beta
        alpha = model.alpha
        applicable = bounds_applicable(model)
        top = min(max_index, n)
        for r in range(top + 1):
            add(model_id, model, "r0", r, None,
                r0_residual(model, r), r0_bounds(r, beta), applicable)
            add(model_id, model, "r1", r, None,
                residual_r1(model, r), r1_bounds(r, beta), applicable)
            if 2 * r <= n:
                add(model_id, model, "var", r, r,
                    residual_r2_var(model, r),
                    variance_residual_bounds(r, beta, alpha), applicable)
        for r in range(top + 1):
            for t in range(r + 1, top + 1):
                if r + t <= n:
                    add(model_id, model, "cov", r, t,
                        residual_r2_cov(model, r, t),
                        r2_bounds(r, t, beta), applicable)
    return rows
