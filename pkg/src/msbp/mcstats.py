"""Reproducible randomness and Monte-Carlo statistics.

Random streams are counter-based (Philox) and addressed by a master seed plus
an integer path, so any replicate chunk can be simulated in isolation and the
same (seed, path) always reproduces the same draws.  Reductions over chunks
go through a fixed pairwise tree keyed by chunk index, which makes every
reported mean/stderr bitwise independent of worker count and completion
order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPointsError

# Replicates are partitioned into fixed-size chunks regardless of thread
# count; chunk index doubles as the RNG stream id.
DEFAULT_CHUNK = 4096


@dataclass(frozen=True)
class RandomStream:
    """A splittable counter-based random stream.

    ``child(i, j, ...)`` derives an independent stream; distinct paths give
    statistically independent Philox streams by construction.
    """

    seed: int
    path: tuple = ()

    def child(self, *ids: int) -> "RandomStream":
        return RandomStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int

    def to_dict(self) -> dict:
        return {"estimate": self.mean, "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True)
class MomentPartial:
    """(count, mean, sum of squared deviations) for one chunk of values."""

    n: int
    mean: float
    m2: float

    @staticmethod
    def of(values) -> "MomentPartial":
        a = np.asarray(values, dtype=float)
        n = a.size
        if n == 0:
            return MomentPartial(0, 0.0, 0.0)
        mean = float(a.mean())
        m2 = float(np.sum((a - mean) ** 2))
        return MomentPartial(n, mean, m2)

    def merge(self, other: "MomentPartial") -> "MomentPartial":
        # Chan et al. parallel update; deterministic for a fixed merge order.
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return MomentPartial(n, mean, m2)


def _tree_merge(parts):
    if len(parts) == 1:
        return parts[0]
    mid = len(parts) // 2
    return _tree_merge(parts[:mid]).merge(_tree_merge(parts[mid:]))


def reduce_partials(parts) -> MCEstimate:
    """Combine per-chunk moment partials (in chunk order) into an estimate.

    The pairwise merge tree depends only on the number of chunks, never on
    scheduling, so the result is bitwise reproducible at any worker count.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("no partials to reduce")
    total = _tree_merge(parts)
    if total.n == 0:
        raise ValueError("no samples")
    if total.n == 1:
        return MCEstimate(total.mean, float("nan"), 1)
    var = total.m2 / (total.n - 1)
    return MCEstimate(total.mean, math.sqrt(max(var, 0.0) / total.n), total.n)


def reduce_values(values) -> MCEstimate:
    return reduce_partials([MomentPartial.of(values)])


def chunk_bounds(n_total: int, chunk_size: int = DEFAULT_CHUNK):
    """Yield (chunk_id, start, size) covering range(n_total)."""
    out = []
    start = 0
    cid = 0
    while start < n_total:
        size = min(chunk_size, n_total - start)
        out.append((cid, start, size))
        start += size
        cid += 1
    return out


def map_chunks(fn, n_total: int, *, threads: int = 1, chunk_size: int = DEFAULT_CHUNK):
    """Run ``fn(chunk_id, start, size)`` over all chunks.

    Results come back ordered by chunk id whatever the completion order, so
    downstream reductions see a fixed sequence.
    """
    bounds = chunk_bounds(n_total, chunk_size)
    if threads <= 1 or len(bounds) == 1:
        return [fn(*b) for b in bounds]
    out = {}
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = {ex.submit(fn, *b): b[0] for b in bounds}
        for fut in futures:
            out[futures[fut]] = fut.result()
    return [out[cid] for cid, _, _ in bounds]


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (phat + z2 / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def bootstrap_stderr(values, gen: np.random.Generator, n_boot: int = 200) -> float:
    """Bootstrap standard error of the sample mean."""
    a = np.asarray(values, dtype=float)
    n = a.size
    if n < 2:
        return float("nan")
    idx = gen.integers(0, n, size=(n_boot, n))
    means = a[idx].mean(axis=1)
    return float(means.std(ddof=1))


def fit_decay(t_grid, values, stderrs=None) -> dict:
    """Weighted least-squares exponential decay fit.

    Fits log(values) = log(intercept) - lambda_fit * t.  Points with value
    <= 0 are dropped (reported in ``n_dropped``); fewer than three usable
    points raises :class:`InsufficientPointsError`.  The confidence interval
    on the rate is the delta-method normal interval at 95%.
    """
    t = np.asarray(t_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    n_dropped = int(np.sum(~keep))
    t, v = t[keep], v[keep]
    if stderrs is not None:
        se = np.asarray(stderrs, dtype=float)[keep]
    else:
        se = None
    if t.size < 3:
        raise InsufficientPointsError(
            f"need at least 3 positive points, got {t.size}")
    logv = np.log(v)
    if se is not None and np.all(se > 0):
        w = (v / se) ** 2  # var(log v) ~ (se/v)^2
        known_var = True
    else:
        w = np.ones_like(logv)
        known_var = False
    # design: logv = a - lam * t
    sw = w.sum()
    tbar = (w * t).sum() / sw
    ybar = (w * logv).sum() / sw
    stt = (w * (t - tbar) ** 2).sum()
    if stt <= 0:
        raise InsufficientPointsError("degenerate time grid")
    slope = (w * (t - tbar) * (logv - ybar)).sum() / stt
    lam = -slope
    intercept = math.exp(ybar - slope * tbar)
    if known_var:
        var_slope = 1.0 / stt
    else:
        resid = logv - (ybar + slope * (t - tbar))
        dof = max(t.size - 2, 1)
        var_slope = float((w * resid**2).sum() / dof) / stt
    half = 1.959963984540054 * math.sqrt(var_slope)
    return {
        "lambda_fit": float(lam),
        "intercept": float(intercept),
        "ci": (float(lam - half), float(lam + half)),
        "n_used": int(t.size),
        "n_dropped": n_dropped,
    }
