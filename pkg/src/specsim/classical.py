"""Classical sorted-distribution baselines: empirical estimator, collision
statistics, and the two-bucket local-moment-matching learner.

Samples take values in {1, ..., d}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from specsim.lmm import Infeasible, MomentConstraints, round_measure, solve_moment_lp

__all__ = [
    "EmptySample",
    "Histogram",
    "classical_two_bucket_lmm",
    "collision_stat",
    "collision_stat_restricted",
    "collision_variance",
    "empirical_sorted",
    "sample_from",
]


class EmptySample(ValueError):
    """An operation received zero samples."""


@dataclass(frozen=True)
class Histogram:
    """Occurrence counts h_1..h_d of a sample of size n."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=int)
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_samples(cls, samples, d: int) -> "Histogram":
        s = np.asarray(samples, dtype=int)
        if s.size == 0:
            raise EmptySample("no samples")
        if s.min() < 1 or s.max() > d:
            raise ValueError(f"sample values must lie in 1..{d}")
        return cls(np.bincount(s, minlength=d + 1)[1:])


def sample_from(p, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from the distribution p over {1, ..., d}."""
    p = np.asarray(p, dtype=float)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(n), side="right") + 1


def empirical_sorted(samples, d: int) -> np.ndarray:
    """Sorted empirical distribution sort(h/n), padded with zeros to length d."""
    hist = Histogram.from_samples(samples, d)
    return np.sort(hist.counts)[::-1] / hist.n


def _collision_sum(counts: np.ndarray, k: int) -> int:
    return sum(math.comb(int(h), k) for h in counts if h >= k)


def collision_stat(samples, k: int, d: int | None = None) -> float:
    """Normalized k-wise collision count sum_i C(h_i, k) / C(n, k).

    Unbiased for the k-th power sum of the sampled distribution.
    """
    s = np.asarray(samples, dtype=int)
    dim = int(s.max()) if d is None else d
    hist = Histogram.from_samples(s, dim)
    if k > hist.n:
        raise ValueError(f"k={k} exceeds sample size {hist.n}")
    return _collision_sum(hist.counts, k) / math.comb(hist.n, k)


def collision_stat_restricted(samples, k: int, subset, d: int) -> float:
    """k-wise collision statistic counting only values in ``subset``."""
    hist = Histogram.from_samples(samples, d)
    if k > hist.n:
        raise ValueError(f"k={k} exceeds sample size {hist.n}")
    idx = np.asarray(sorted(subset), dtype=int)
    if idx.size == 0:
        return 0.0
    if idx.min() < 1 or idx.max() > d:
        raise ValueError("subset values must lie in 1..d")
    return _collision_sum(hist.counts[idx - 1], k) / math.comb(hist.n, k)


def collision_variance(p2: float, p3: float, n: int) -> float:
    """Exact variance of the pairwise collision statistic for given moments."""
    pairs = math.comb(n, 2)
    return (p2 - p2**2) / pairs + 2 * (n - 2) / pairs * (p3 - p2**2)


def _plugin_moment_bands(
    samples: np.ndarray, k_max: int, subset, d: int, n: int
) -> np.ndarray:
    """Plug-in standard-deviation bands for the restricted collision moments.

    Var[c_k] <= (1/C(n,k)) sum_i C(k,i) C(n-k,i) p_{k+i}, with the unknown
    moments replaced by their own collision estimates.
    """
    bands = np.empty(k_max)
    plugin = {}
    for k in range(1, k_max + 1):
        var = 0.0
        for i in range(1, k + 1):
            order = k + i
            if order not in plugin:
                plugin[order] = (
                    collision_stat_restricted(samples, order, subset, d)
                    if order <= n
                    else 0.0
                )
            var += math.comb(k, i) * math.comb(n - k, i) * plugin[order]
        bands[k - 1] = math.sqrt(max(var, 0.0) / math.comb(n, k))
    return bands


def classical_two_bucket_lmm(
    samples,
    d: int,
    eps: float,
    k_max: int,
    threshold_l: float,
    band_mult: float = 4.0,
    grid_size: int | None = None,
) -> np.ndarray:
    """Two-bucket sorted-distribution learner from 2n samples.

    The first n samples pick the Large bucket (empirical frequency >= L); the
    second n estimate it empirically and feed restricted collision moments of
    the Small bucket into moment matching on [0, 2L].  Returns the sorted
    concatenation of both estimates, with the small bucket rescaled so the
    output is a distribution.
    """
    if not 0.0 < threshold_l <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if k_max < 1:
        raise ValueError("need at least one moment")
    s = np.asarray(samples, dtype=int)
    if s.size < 2 or s.size % 2:
        raise ValueError("need an even number 2n of samples")
    n = s.size // 2
    x, y = s[:n], s[n:]
    freq_x = Histogram.from_samples(x, d).counts / n
    large = np.nonzero(freq_x >= threshold_l)[0] + 1
    small = np.setdiff1d(np.arange(1, d + 1), large)
    freq_y = Histogram.from_samples(y, d).counts / n
    large_est = freq_y[large - 1]

    n_small = small.size
    if n_small == 0:
        out = np.sort(large_est)[::-1]
        total = out.sum()
        return out / total if total > 0 else out

    k_eff = min(k_max, n)
    p_hat = np.array(
        [collision_stat_restricted(y, k, small, d) for k in range(1, k_eff + 1)]
    )
    # misclassified entries can sit slightly above L, so match on [0, 2L]
    b_up = min(1.0, 2.0 * threshold_l)
    bands = band_mult * math.sqrt(k_eff) * _plugin_moment_bands(y, k_eff, small, d, n)
    p_hat[0] = min(max(p_hat[0], 0.0), 1.0)
    constraints = MomentConstraints(
        k_max=k_eff, p_hat=p_hat, v=bands, upper_b=b_up, mass=float(n_small)
    )
    try:
        measure = solve_moment_lp(constraints, grid_size)
    except Infeasible:
        constraints = MomentConstraints(
            k_max=k_eff, p_hat=p_hat, v=2.0 * bands, upper_b=b_up, mass=float(n_small)
        )
        measure = solve_moment_lp(constraints, grid_size)
    small_est = round_measure(measure, n_small)

    large_mass = float(large_est.sum())
    small_mass = float(small_est.sum())
    if small_mass > 0:
        small_est = small_est * max(0.0, 1.0 - large_mass) / small_mass
    return np.sort(np.concatenate([large_est, small_est]))[::-1]
