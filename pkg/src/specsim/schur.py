"""Spectrum distinguishing game: moment-matched spectra families, weak Schur
sampling via RSK, Schur-polynomial likelihood comparison, minimal-copy scans,
and power-law fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from specsim import _schur_kernels as _k
from specsim.linalg import Spectrum
from specsim.streams import child_stream

__all__ = [
    "SpectrumPair",
    "YoungDiagram",
    "fixed_exponent_fit",
    "game_success",
    "min_copies",
    "power_law_fit",
    "sample_sw",
    "schur_log",
    "schur_oracle",
    "shrsk_shape",
    "spectra_family",
]

TIE_TOL = 1e-12
SCAN_CAP = 10_000


@dataclass(frozen=True)
class YoungDiagram:
    """Integer partition: non-increasing positive parts."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("diagram needs at least one part")
        if any(p <= 0 for p in self.parts):
            raise ValueError("parts must be positive")
        if any(self.parts[i] < self.parts[i + 1] for i in range(len(self.parts) - 1)):
            raise ValueError("parts must be non-increasing")
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def n_rows(self) -> int:
        return len(self.parts)


@dataclass(frozen=True)
class SpectrumPair:
    """Spectra matching on the first k-1 power sums but not the k-th."""

    k_family: int
    d: int
    alpha: Spectrum
    beta: Spectrum


def spectra_family(k: int, d: int) -> SpectrumPair:
    """The hard-to-distinguish pair with matching moments below order k.

    k = 2: uniform vs uniform-on-half (TV 1/2); k = 3 and k = 4 are the
    three- and four-level pairs with TV 1/3 and 1/4.
    """
    if k not in (2, 3, 4):
        raise ValueError("family k must be 2, 3, or 4")
    if d % k:
        raise ValueError(f"family k={k} needs d divisible by {k}")
    if k == 2:
        alpha = np.full(d, 1.0 / d)
        beta = np.concatenate([np.full(d // 2, 2.0 / d), np.zeros(d // 2)])
    elif k == 3:
        alpha = np.concatenate([np.full(2 * d // 3, 1.5 / d), np.zeros(d // 3)])
        beta = np.concatenate([np.full(d // 3, 2.0 / d), np.full(2 * d // 3, 0.5 / d)])
    else:
        hi = (1.0 + 1.0 / math.sqrt(2.0)) / d
        lo = (1.0 - 1.0 / math.sqrt(2.0)) / d
        alpha = np.concatenate([np.full(d // 2, hi), np.full(d // 2, lo)])
        beta = np.concatenate(
            [np.full(d // 4, 2.0 / d), np.full(d // 2, 1.0 / d), np.zeros(d // 4)]
        )
    return SpectrumPair(k_family=k, d=d, alpha=Spectrum(alpha), beta=Spectrum(beta))


def shrsk_shape(word) -> YoungDiagram:
    """Young-diagram shape of RSK row insertion of a word over {1, .., d}.

    The first row length equals the longest weakly increasing subsequence.
    """
    w = np.asarray(word, dtype=np.int64)
    if w.size == 0:
        raise ValueError("word must be non-empty")
    if w.min() < 1:
        raise ValueError("letters must be >= 1")
    max_rows = int(min(w.size, len(np.unique(w)) if w.size else 1))
    rows = np.empty((max_rows, w.size), dtype=np.int64)
    lens = np.zeros(max_rows, dtype=np.int64)
    nrows = _k.rsk_shape(w, rows, lens)
    return YoungDiagram(parts=tuple(int(x) for x in lens[:nrows]))


def _gamma_vector(gamma) -> np.ndarray:
    if isinstance(gamma, Spectrum):
        return gamma.entries
    return np.asarray(gamma, dtype=float).reshape(-1)


def sample_sw(gamma, n: int, rng: np.random.Generator) -> YoungDiagram:
    """Draw one diagram from weak Schur sampling: a gamma-random n-letter
    word pushed through RSK."""
    g = _gamma_vector(gamma)
    if abs(g.sum() - 1.0) > 1e-9:
        raise ValueError("spectrum must be normalized")
    cdf = np.cumsum(g)
    cdf /= cdf[-1]
    word = np.searchsorted(cdf, rng.random(n), side="right") + 1
    return shrsk_shape(word)


_H_CACHE: dict[bytes, tuple[int, np.ndarray, np.ndarray]] = {}


def _h_tables(positive: np.ndarray, m_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached scaled h-tables for the positive part of a spectrum."""
    key = positive.tobytes()
    hit = _H_CACHE.get(key)
    if hit is not None and hit[0] >= m_max:
        return hit[1], hit[2]
    cap = max(m_max, 2 * hit[0] if hit else 64)
    values, counts = np.unique(positive / positive.max(), return_counts=True)
    h_hi, h_lo = _k.h_scaled_dd(values, counts.astype(np.int64), cap)
    if len(_H_CACHE) > 64:
        _H_CACHE.clear()
    _H_CACHE[key] = (cap, h_hi, h_lo)
    return h_hi, h_lo


def schur_log(diagram: YoungDiagram, gamma) -> float:
    """ln s_lambda(gamma) for nonnegative gamma; -inf when the diagram has
    more rows than gamma has positive entries.

    Evaluated through the Jacobi-Trudi determinant with scaled variables, a
    subtraction-free h recurrence, and double-double row-scaled LU.
    """
    g = _gamma_vector(gamma)
    if np.any(g < 0):
        raise ValueError("spectrum entries must be nonnegative")
    positive = np.sort(g[g > 0])[::-1]
    ell = diagram.n_rows
    if ell > positive.size:
        return -math.inf
    m_max = diagram.parts[0] + ell
    h_hi, h_lo = _h_tables(positive, m_max)
    parts = np.asarray(diagram.parts, dtype=np.int64)
    logdet, sign = _k.jt_logdet(parts, ell, h_hi, h_lo)
    if sign <= 0:
        raise ArithmeticError(
            f"LU breakdown for shape {diagram.parts} on {positive.size} variables "
            f"(sign {sign}, logdet {logdet})"
        )
    return diagram.n * math.log(positive[0]) + logdet


def schur_oracle(diagram: YoungDiagram, gamma) -> float:
    """Brute-force s_lambda(gamma) by enumerating semistandard tableaux.

    Test oracle only: requires |lambda| <= 8 and at most 5 variables.
    """
    g = _gamma_vector(gamma)
    d = g.size
    if diagram.n > 8 or d > 5:
        raise ValueError("oracle caps: |lambda| <= 8, d <= 5")
    if diagram.n_rows > d:
        return 0.0
    parts = diagram.parts
    total = 0.0

    def fill(row: int, above: tuple[int, ...], weight: float) -> None:
        nonlocal total
        width = parts[row]

        def cells(col: int, prev: int, w: float) -> None:
            nonlocal total
            if col == width:
                if row + 1 == len(parts):
                    total += w
                else:
                    fill(row + 1, tuple(current), w)
                return
            lo = max(prev, above[col] + 1 if col < len(above) else 1)
            for v in range(lo, d + 1):
                current[col] = v
                cells(col + 1, v, w * g[v - 1])

        current = [0] * width
        cells(0, 1, weight)

    fill(0, tuple(), 1.0)
    return total


def _word_batch(gamma: np.ndarray, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(gamma)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random((m, n)), side="right").astype(np.int64)


def _batch_ratios(
    words: np.ndarray, alpha: np.ndarray, beta: np.ndarray, n: int
) -> np.ndarray:
    pos_a = np.sort(alpha[alpha > 0])[::-1]
    pos_b = np.sort(beta[beta > 0])[::-1]
    max_rows = int(min(n, max(pos_a.size, pos_b.size)))
    m_max = n + max_rows + 1
    ha_hi, ha_lo = _h_tables(pos_a, m_max)
    hb_hi, hb_lo = _h_tables(pos_b, m_max)
    diffs = _k.batch_log_ratio(
        words, max_rows, ha_hi, ha_lo, pos_a.size, hb_hi, hb_lo, pos_b.size
    )
    if np.any(np.isnan(diffs)):
        raise ArithmeticError("likelihood ratio undefined for a sampled diagram")
    shift = n * (math.log(pos_a.max()) - math.log(pos_b.max()))
    finite = np.isfinite(diffs)
    diffs[finite] += shift
    return diffs


def game_success(pair: SpectrumPair, n: int, m: int, rng: np.random.Generator) -> float:
    """Estimated success probability of the optimal distinguisher.

    Draws m diagrams from each spectrum's weak Schur sampling law and applies
    the maximum-likelihood test; ties (logs equal to 1e-12) count for beta,
    so identical spectra give exactly 1/2.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    alpha, beta = pair.alpha.entries, pair.beta.entries
    words_a = _word_batch(alpha, n, m, rng)
    words_b = _word_batch(beta, n, m, rng)
    succ_a = int(np.count_nonzero(_batch_ratios(words_a, alpha, beta, n) > TIE_TOL))
    succ_b = int(np.count_nonzero(_batch_ratios(words_b, alpha, beta, n) <= TIE_TOL))
    return (succ_a + succ_b) / (2.0 * m)


def min_copies(
    pair: SpectrumPair, threshold: float, m: int, rng: np.random.Generator
) -> int:
    """Smallest n whose estimated success probability reaches the threshold.

    Doubles n from 1 until the threshold is met, then scans linearly backward
    from that point; each n is evaluated on a fresh child stream.
    """
    if not 0.5 < threshold < 1.0:
        raise ValueError("threshold must lie in (0.5, 1)")

    def success_at(n: int) -> float:
        return game_success(pair, n, m, child_stream(rng, n))

    n = 1
    while success_at(n) < threshold:
        n *= 2
        if n > SCAN_CAP:
            raise RuntimeError(f"no n <= {SCAN_CAP} reaches success {threshold}")
    if n == 1:
        return 1
    probe = n - 1
    while probe >= 1 and success_at(probe) >= threshold:
        probe -= 1
    return probe + 1


def power_law_fit(points) -> tuple[float, float, float]:
    """Least-squares fit of n = a d^c + b over a grid of exponents.

    The exponent c ranges over [0.25, 3.0] in steps of 1e-3 with a closed-form
    solve for (a, b) at each c; returns the global minimizer (a, c, b).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (d, n) points")
    ds, ns = pts[:, 0], pts[:, 1]
    if np.ptp(ds) == 0:
        raise ValueError("all d values are equal")
    best = (math.inf, 0.0, 0.0, 0.0)
    for c in np.arange(0.25, 3.0 + 1e-9, 1e-3):
        a, b, rss = _linear_fit(ds, ns, c)
        if rss < best[0]:
            best = (rss, a, c, b)
    _, a, c, b = best
    return a, c, b


def fixed_exponent_fit(points, c: float) -> tuple[float, float, float]:
    """(a, b, rss) for the best n = a d^c + b at a forced exponent."""
    pts = np.asarray(points, dtype=float)
    a, b, rss = _linear_fit(pts[:, 0], pts[:, 1], c)
    return a, b, rss


def _linear_fit(ds: np.ndarray, ns: np.ndarray, c: float) -> tuple[float, float, float]:
    x = ds**c
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, ns, rcond=None)
    resid = ns - design @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)
