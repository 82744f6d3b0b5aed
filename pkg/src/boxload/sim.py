"""Reproducible Monte Carlo for the allocation model.

Reproducibility contract: replicate i draws from its own Philox
counter-based stream keyed by the pair (seed, i), so the samples are a
pure function of (seed, replicate index) and any partition of replicates
across workers sees the same draws. Accumulation happens over fixed-size
chunks of replicates: each chunk's moments come from a vectorized
two-pass computation, and chunk accumulators merge in index order through
the standard parallel moment-combination update. The chunk size is a
constant, so the result is bit-identical for any worker count.

Sampling is exact (no normal approximation anywhere): for N <= n the
counts come from numpy's multinomial, which draws the conditional
binomial chain box by box using inversion for small expectations and the
BTPE rejection method otherwise; for n < N each ball picks a box through
a Vose alias table and the counts are tallied.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import exact
from .approx import equiprobable_envelope
from .errors import RangeError
from .model import AllocationModel, equiprobable_profile

#: Replicates per accumulation chunk. Fixed: worker-count independence
#: relies on the partition being a function of the replicate count only.
CHUNK_SIZE = 4096


@dataclass
class SimulationSummary:
    """Empirical occupancy moments with standard errors."""

    model: AllocationModel
    replicates: int
    seed: int
    means: dict = field(default_factory=dict)
    variances: dict = field(default_factory=dict)
    covariances: dict = field(default_factory=dict)
    std_errors: dict = field(default_factory=dict)
    #: standard error of each variance estimate, from the 4th central moment
    var_std_errors: dict = field(default_factory=dict)


def _as_seed(seed) -> int:
    s = int(seed)
    if not 0 <= s < 2 ** 64:
        raise RangeError(f"seed must fit in 64 unsigned bits, got {seed}")
    return s


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """The named substream for one replicate: Philox keyed by (seed, index)."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_allocation(model: AllocationModel, rng: np.random.Generator) -> np.ndarray:
    """One draw of the box counts; they sum to the ball count exactly."""
    n = model.ball_count
    boxes = model.profile.box_count
    if n == 0:
        return np.zeros(boxes, dtype=np.int64)
    if boxes <= n:
        return rng.multinomial(n, model.profile.weights).astype(np.int64)
    prob, alias = model.profile.alias_table
    idx = rng.integers(0, boxes, size=n)
    u = rng.random(n)
    chosen = np.where(u < prob[idx], idx, alias[idx])
    return np.bincount(chosen, minlength=boxes).astype(np.int64)


def _chunk_worker(args):
    model, seed, start, length, r_values, check = args
    n = model.ball_count
    boxes = model.profile.box_count
    sel = np.asarray(r_values, dtype=np.int64)
    x = np.empty((length, sel.size))
    for j in range(length):
        rng = replicate_rng(seed, start + j)
        counts = sample_allocation(model, rng)
        occ = np.bincount(counts, minlength=n + 1)
        if check:
            if int(occ.sum()) != boxes:
                raise AssertionError("conservation violated: sum_r N_r != N")
            if int((occ * np.arange(occ.size)).sum()) != n:
                raise AssertionError("conservation violated: sum_r r*N_r != n")
        x[j] = occ[sel] / boxes
    mean = x.mean(axis=0)
    d = x - mean
    m2 = np.einsum("ij,ik->jk", d, d)
    m3 = (d ** 3).sum(axis=0)
    m4 = (d ** 4).sum(axis=0)
    return length, mean, m2, m3, m4


def _merge(a, b):
    # parallel combination of two central-moment accumulators
    na, ma, m2a, m3a, m4a = a
    nb, mb, m2b, m3b, m4b = b
    m = na + nb
    d = mb - ma
    f = na * nb / m
    mean = ma + d * (nb / m)
    m2 = m2a + m2b + np.outer(d, d) * f
    va = np.diagonal(m2a)
    vb = np.diagonal(m2b)
    m3 = (m3a + m3b + d ** 3 * f * (na - nb) / m
          + 3.0 * d * (na * vb - nb * va) / m)
    m4 = (m4a + m4b + d ** 4 * f * (na * na - na * nb + nb * nb) / (m * m)
          + 6.0 * d * d * (na * na * vb + nb * nb * va) / (m * m)
          + 4.0 * d * (na * m3b - nb * m3a) / m)
    return m, mean, m2, m3, m4


def simulate(model: AllocationModel, replicates: int, seed, *,
             r_values=None, workers: int = 1, check_conservation: bool = False,
             _pool: ProcessPoolExecutor | None = None) -> SimulationSummary:
    """Monte Carlo estimate of occupancy moments.

    Sample means are unbiased; variances and covariances carry the
    1/(m-1) correction; std_errors is the standard error of each mean.
    Deterministic for fixed (seed, replicates, model) regardless of
    ``workers``. ``_pool`` lets callers reuse one executor across runs.
    """
    if replicates < 2:
        raise RangeError(f"need at least 2 replicates, got {replicates}")
    seed = _as_seed(seed)
    n = model.ball_count
    if r_values is None:
        r_values = list(range(n + 1))
    else:
        r_values = [int(r) for r in r_values]
        if any(r < 0 or r > n for r in r_values):
            raise RangeError(f"r_values must lie in [0, {n}]")
    chunks = [(start, min(CHUNK_SIZE, replicates - start))
              for start in range(0, replicates, CHUNK_SIZE)]
    tasks = [(model, seed, start, length, tuple(r_values), check_conservation)
             for start, length in chunks]
    if _pool is not None and len(tasks) > 1:
        results = list(_pool.map(_chunk_worker, tasks))
    elif workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_worker, tasks))
    else:
        results = [_chunk_worker(task) for task in tasks]
    acc = results[0]
    for nxt in results[1:]:
        acc = _merge(acc, nxt)
    m, mean, m2, m3, m4 = acc

    variances = np.diagonal(m2) / (m - 1)
    means = {}
    var_map = {}
    se_mean = {}
    se_var = {}
    for i, r in enumerate(r_values):
        means[r] = float(mean[i])
        var_map[r] = float(variances[i])
        se_mean[r] = math.sqrt(max(variances[i], 0.0) / m)
        # Var(s^2) = (mu4 - sigma^4 (m-3)/(m-1)) / m, with plug-in estimates
        mu4 = m4[i] / m
        v = (mu4 - variances[i] ** 2 * (m - 3) / (m - 1)) / m
        se_var[r] = math.sqrt(max(v, 0.0))
    covariances = {}
    for i, r in enumerate(r_values):
        for j in range(i + 1, len(r_values)):
            covariances[(r, r_values[j])] = float(m2[i, j] / (m - 1))
    return SimulationSummary(
        model=model,
        replicates=replicates,
        seed=seed,
        means=means,
        variances=var_map,
        covariances=covariances,
        std_errors=se_mean,
        var_std_errors=se_var,
    )


def default_grid() -> list[int]:
    """The reference ball-count grid 10, 15, ..., 100."""
    return list(range(10, 101, 5))


def figure1_data(box_count: int = 100, n_values=None, replicates: int = 50_000,
                 seed=42, workers: int = 1) -> list[dict]:
    """Simulated-vs-approximate empty-box statistics across a grid of n.

    For each n: the simulated mean and variance of the empty-box
    proportion, the order-n^{-1} equiprobable approximations, the exact
    values, the differences, and the two-sided n^{-2} band for the
    difference. Each grid point gets its own derived seed
    (SeedSequence((seed, index))) so points are independent while the
    whole table stays a pure function of the seed.
    """
    seed = _as_seed(seed)
    if n_values is None:
        n_values = default_grid()
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        rows = _figure1_rows(box_count, n_values, replicates, seed, workers, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _figure1_rows(box_count, n_values, replicates, seed, workers, pool):
    profile = equiprobable_profile(box_count)
    rows = []
    for idx, n in enumerate(n_values):
        model = AllocationModel(int(n), profile)
        sub = int(np.random.SeedSequence(entropy=(seed, idx)).generate_state(1, np.uint64)[0])
        summary = simulate(model, replicates, sub, r_values=[0],
                           workers=workers, _pool=pool)
        approx_mean, mlo, mhi = equiprobable_envelope(int(n), box_count, "mean")
        approx_var, vlo, vhi = equiprobable_envelope(int(n), box_count, "variance")
        rows.append({
            "n": int(n),
            "N": box_count,
            "replicates": replicates,
            "seed": seed,
            "r": 0,
            "sim_mean": summary.means[0],
            "sim_var": summary.variances[0],
            "se_mean": summary.std_errors[0],
            "se_var": summary.var_std_errors[0],
            "exact_mean": exact.exact_mean(model, 0),
            "approx_mean": approx_mean,
            "diff_mean": summary.means[0] - approx_mean,
            "bound_lo_mean": mlo,
            "bound_hi_mean": mhi,
            "exact_var": exact.exact_variance(model, 0),
            "approx_var": approx_var,
            "diff_var": summary.variances[0] - approx_var,
            "bound_lo_var": vlo,
            "bound_hi_var": vhi,
        })
    return rows
