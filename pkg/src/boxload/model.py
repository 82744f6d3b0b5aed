"""Allocation model: box weights and expectations over the random box load.

A profile holds the sorted box probabilities q_1 >= ... >= q_N > 0. The
load of a uniformly chosen box takes the value n*q_k with probability 1/N;
all expectations over that distribution (single box, or an independent
pair of boxes) funnel through :func:`e_xi` / :func:`e_xi_pair`. Both group
boxes by bit-identical weight, so the equiprobable profile costs O(1) and
a profile with D distinct weights costs O(D) / O(D^2) per expectation.
Sums are accumulated with math.fsum, which is exactly rounded, so results
do not depend on grouping or traversal order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    EmptyList,
    NonFiniteFunctional,
    NonPositiveWeight,
    ProfileParseError,
    RangeError,
    SumNotOne,
    ZeroBoxes,
)

#: Construction tolerance on |sum(weights) - 1|.
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """Sorted box-probability vector; validated, never renormalized."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise EmptyList("a profile needs at least one weight")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise NonPositiveWeight("all weights must be positive and finite")
        if np.any(np.diff(w) > 0):
            raise ValueError(
                "weights must be sorted non-increasing; use make_profile()")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise SumNotOne(f"weights sum to {total!r}, not 1 within {SUM_TOLERANCE}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def box_count(self) -> int:
        return int(self.weights.size)

    @cached_property
    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """(values ascending, multiplicities) for bit-identical weights."""
        values, counts = np.unique(self.weights, return_counts=True)
        values.setflags(write=False)
        counts.setflags(write=False)
        return values, counts

    @cached_property
    def alias_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Vose alias table (prob, alias) for O(1) categorical draws."""
        w = self.weights
        size = w.size
        scaled = w * (size / math.fsum(w.tolist()))
        prob = np.ones(size)
        alias = np.arange(size, dtype=np.int64)
        small = [i for i in range(size) if scaled[i] < 1.0]
        large = [i for i in range(size) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        for i in small + large:
            prob[i] = 1.0
        prob.setflags(write=False)
        alias.setflags(write=False)
        return prob, alias


def make_profile(weights) -> WeightProfile:
    """Build a profile from arbitrary positive weights summing to 1.

    Entries are stable-sorted non-increasing; the sum is validated, never
    silently renormalized (renormalization would mask caller bugs).
    """
    ws = [float(w) for w in weights]
    if not ws:
        raise EmptyList("a profile needs at least one weight")
    return WeightProfile(np.asarray(sorted(ws, reverse=True), dtype=float))


def equiprobable_profile(box_count: int) -> WeightProfile:
    """Profile with every weight exactly 1/N."""
    if box_count < 1:
        raise ZeroBoxes(f"need at least one box, got {box_count}")
    return WeightProfile(np.full(box_count, 1.0 / box_count))


def powerlaw_profile(box_count: int, exponent: float) -> WeightProfile:
    """Profile with q_k proportional to k^{-s}, normalized to machine precision."""
    if box_count < 1:
        raise ZeroBoxes(f"need at least one box, got {box_count}")
    raw = np.arange(1, box_count + 1, dtype=float) ** (-float(exponent))
    w = raw / math.fsum(raw.tolist())
    w = np.sort(w)[::-1].copy()
    return WeightProfile(w)


@dataclass(frozen=True, eq=False)
class AllocationModel:
    """n balls thrown independently into the boxes of a profile."""

    ball_count: int
    profile: WeightProfile

    def __post_init__(self):
        if self.ball_count < 0:
            raise RangeError(f"ball count must be >= 0, got {self.ball_count}")

    @property
    def alpha(self) -> float:
        """Average load n/N."""
        return self.ball_count / self.profile.box_count

    @property
    def beta(self) -> float:
        """Largest possible box load n*q_1."""
        return self.ball_count * float(self.profile.weights[0])

    @cached_property
    def load_support(self) -> tuple[np.ndarray, np.ndarray]:
        """(distinct load values ascending, multiplicities)."""
        values, counts = self.profile.distinct
        loads = self.ball_count * values
        loads.setflags(write=False)
        return loads, counts


def _apply(f, xs: np.ndarray) -> np.ndarray:
    # Prefer one vectorized call; fall back to pointwise evaluation for
    # scalar-only callables (math.* functions and the like).
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
    except (TypeError, ValueError, IndexError):
        pass
    return np.asarray([float(f(float(x))) for x in xs], dtype=float)


def _apply_pair(g, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(g(X, Y), dtype=float)
        if vals.shape == X.shape:
            return vals
    except (TypeError, ValueError, IndexError):
        pass
    out = np.empty(X.shape)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            out[i, j] = float(g(float(X[i, j]), float(Y[i, j])))
    return out


def e_xi(model: AllocationModel, f) -> float:
    """Exact average of f over the load distribution: N^{-1} sum_k f(n q_k).

    f may be numpy-vectorized or scalar. Non-finite values raise
    NonFiniteFunctional. For a single distinct weight (equiprobable) this
    returns f(alpha) exactly.
    """
    loads, counts = model.load_support
    vals = _apply(f, loads)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteFunctional("functional produced a non-finite value")
    if loads.size == 1:
        return float(vals[0])
    total = math.fsum(c * v for c, v in zip(counts.tolist(), vals.tolist()))
    return total / model.profile.box_count


def e_xi_pair(model: AllocationModel, g) -> float:
    """Exact double average N^{-2} sum_{k,l} g(n q_k, n q_l).

    Runs over ALL ordered pairs including k == l; callers that need
    distinct boxes subtract the diagonal term themselves.
    """
    loads, counts = model.load_support
    d = loads.size
    X, Y = np.meshgrid(loads, loads, indexing="ij")
    vals = _apply_pair(g, X, Y)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteFunctional("pair functional produced a non-finite value")
    if d == 1:
        return float(vals[0, 0])
    weights = np.multiply.outer(counts, counts).astype(float)
    total = math.fsum((weights * vals).ravel().tolist())
    return total / float(model.profile.box_count) ** 2


def parse_profile_text(text: str) -> WeightProfile:
    """Parse the profile file format.

    Either one weight per line, or a single line ``equi N``, or a single
    line ``powerlaw N s``.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ProfileParseError("empty profile")
    head = lines[0].split()
    if head and head[0] in ("equi", "powerlaw"):
        if len(lines) != 1:
            raise ProfileParseError(f"'{head[0]}' must be the only line")
        try:
            if head[0] == "equi":
                if len(head) != 2:
                    raise ProfileParseError("expected: equi N")
                return equiprobable_profile(int(head[1]))
            if len(head) != 3:
                raise ProfileParseError("expected: powerlaw N s")
            return powerlaw_profile(int(head[1]), float(head[2]))
        except ValueError as exc:
            raise ProfileParseError(f"bad '{head[0]}' arguments: {exc}") from exc
    try:
        weights = [float(ln) for ln in lines]
    except ValueError as exc:
        raise ProfileParseError(f"bad weight line: {exc}") from exc
    return make_profile(weights)


def load_profile(path) -> WeightProfile:
    """Read a profile file (see :func:`parse_profile_text`)."""
    return parse_profile_text(Path(path).read_text())


def parse_profile_spec(spec: str) -> WeightProfile:
    """Parse the CLI micro-grammar: ``equi:N``, ``powerlaw:N:s``, ``file:PATH``."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ProfileParseError(
            f"bad profile spec {spec!r}; expected equi:N, powerlaw:N:s, or file:PATH")
    try:
        if kind == "equi":
            return equiprobable_profile(int(rest))
        if kind == "powerlaw":
            n_str, sep2, s_str = rest.partition(":")
            if not sep2:
                raise ProfileParseError("powerlaw spec needs two arguments: powerlaw:N:s")
            return powerlaw_profile(int(n_str), float(s_str))
        if kind == "file":
            return load_profile(rest)
    except (ValueError, OSError) as exc:
        raise ProfileParseError(f"bad profile spec {spec!r}: {exc}") from exc
    raise ProfileParseError(f"unknown profile kind {kind!r}")
