"""Moment U-statistics over POVM records.

The k-th moment statistic is the average of tr(A_{i1} ... A_{ik}) over all
ordered distinct index tuples, where A_i = (d+1)|u_i><u_i| - I for a
non-BOTTOM record and the zero matrix on BOTTOM.  It is computed exactly
without forming any d x d products:

* expanding each trace over kept-position subsets S of [k] turns it into
  (-1)^(k-|S|) (d+1)^|S| times a cyclic product of Gram entries (the empty
  subset contributes (-1)^k d), so the tuple sum reduces to cyclic-product
  sums W_m over ordered distinct m-tuples;
* the distinctness constraint is removed by Moebius inversion over the set
  partitions of [m], with mu = prod_blocks (-1)^(size-1) (size-1)!;
* each coarsened (unrestricted) term is a cycle contraction of Gram entries,
  evaluated through the d x d operator C = sum_i |u_i><u_i|: runs of
  once-occurring blocks collapse into powers of C, and only the indices of
  repeated blocks are summed explicitly.

Repeated-block sums cost n'^r for r repeated blocks; the engine refuses
above n'^r = 1e8 (and k > 8), and callers fall back to the incomplete
estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from specsim.povm import PovmRecord

__all__ = [
    "EngineCapExceeded",
    "GramMatrix",
    "MomentEstimates",
    "NonPositiveMomentEstimate",
    "distinct_tuple_trace_sum",
    "moment_estimate",
    "moment_estimate_incomplete",
    "moment_estimates",
    "renyi_estimate",
    "tuple_trace_kernels",
    "variance_bound",
]

ENGINE_MAX_K = 8
ENGINE_MAX_ASSIGNMENTS = 10**8
_CHUNK_ELEMENTS = 2**22


class EngineCapExceeded(ValueError):
    """Exact engine refused: k > 8 or a partition term needs > 1e8 assignments."""


class NonPositiveMomentEstimate(ValueError):
    """A moment estimate was <= 0 where a logarithm is required."""


class GramMatrix(object):
    """Inner products of the non-BOTTOM outcome vectors of a record list.

    Stores the stacked vectors and the rank-d factorization
    G^(t+1)[x, y] = <u_x| C^t |u_y> with C = sum_i |u_i><u_i|, so cyclic
    contractions never require the dense n' x n' matrix.  ``matrix``
    materializes G on demand for small collections.
    """

    def __init__(self, vectors: np.ndarray, kept: np.ndarray, n_total: int, dim: int):
        self.vectors = np.asarray(vectors, dtype=complex)
        self.kept = np.asarray(kept, dtype=int)
        self.n_total = int(n_total)
        self.dim = int(dim)
        self._c_powers: dict[int, np.ndarray] = {}
        self._quad: dict[int, np.ndarray] = {}

    @classmethod
    def from_records(cls, records: list[PovmRecord]) -> "GramMatrix":
        if not records:
            raise ValueError("need at least one record")
        d = records[0].dim
        kept = [i for i, r in enumerate(records) if not r.is_bottom]
        if kept:
            vectors = np.stack([records[i].vector for i in kept])
        else:
            vectors = np.zeros((0, d), dtype=complex)
        return cls(vectors, np.asarray(kept), len(records), d)

    @property
    def n_kept(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Dense Gram matrix G[i, j] = <u_i|u_j> (n' x n')."""
        return self.vectors.conj() @ self.vectors.T

    def c_power(self, t: int) -> np.ndarray:
        """C^t for C = sum_i |u_i><u_i| (d x d)."""
        if t not in self._c_powers:
            if t == 0:
                self._c_powers[t] = np.eye(self.dim, dtype=complex)
            elif t == 1:
                self._c_powers[t] = self.vectors.T @ self.vectors.conj()
            else:
                self._c_powers[t] = self.c_power(t - 1) @ self.c_power(1)
        return self._c_powers[t]

    def quad_diag(self, t: int) -> np.ndarray:
        """Vector q_t[v] = <u_v| C^t |u_v> = G^(t+1)[v, v] (real)."""
        if t not in self._quad:
            if t == 0:
                self._quad[0] = np.ones(self.n_kept)
            else:
                self._quad[t] = np.einsum(
                    "vc,ce,ve->v", self.vectors.conj(), self.c_power(t), self.vectors
                ).real
        return self._quad[t]

    def cross_block(self, t: int, rows: slice) -> np.ndarray:
        """Rows of G^(t+1) = <u_x| C^t |u_y> for x in ``rows`` (chunked)."""
        left = self.vectors[rows].conj()
        if t > 0:
            left = left @ self.c_power(t)
        return left @ self.vectors.T


def _set_partitions(m: int) -> list[list[list[int]]]:
    """All set partitions of {0, ..., m-1} as lists of blocks."""
    parts: list[list[list[int]]] = []

    def extend(pos: int, blocks: list[list[int]]) -> None:
        if pos == m:
            parts.append([list(b) for b in blocks])
            return
        for b in blocks:
            b.append(pos)
            extend(pos + 1, blocks)
            b.pop()
        blocks.append([pos])
        extend(pos + 1, blocks)
        blocks.pop()

    extend(0, [])
    return parts


@lru_cache(maxsize=16)
def _partition_table(m: int) -> tuple[tuple[tuple[tuple[int, ...], ...], float], ...]:
    """Set partitions of [m] with their Moebius coefficient mu(0, tau)."""
    table = []
    for blocks in _set_partitions(m):
        mu = 1.0
        for b in blocks:
            s = len(b)
            mu *= (-1.0) ** (s - 1) * math.factorial(s - 1)
        table.append((tuple(tuple(b) for b in blocks), mu))
    return tuple(table)


def _segments(blocks: tuple[tuple[int, ...], ...], m: int):
    """Cyclic arcs between repeated-block positions.

    Returns (repeated block ids in a stable order, list of segments
    (from_block_axis, to_block_axis, gap)), or None when every block is a
    singleton.
    """
    block_of = {}
    for bi, b in enumerate(blocks):
        for p in b:
            block_of[p] = bi
    repeated = [bi for bi, b in enumerate(blocks) if len(b) >= 2]
    if not repeated:
        return None
    axis = {bi: ax for ax, bi in enumerate(repeated)}
    rp = sorted(p for p in range(m) if len(blocks[block_of[p]]) >= 2)
    segs = []
    for i, p in enumerate(rp):
        p_next = rp[(i + 1) % len(rp)]
        gap = (p_next - p - 1) % m
        segs.append((axis[block_of[p]], axis[block_of[p_next]], gap))
    return repeated, segs


def _contract(gram: GramMatrix, blocks: tuple[tuple[int, ...], ...], m: int) -> complex:
    """Unrestricted cycle contraction N(tau) for one set partition."""
    n = gram.n_kept
    seg_info = _segments(blocks, m)
    if seg_info is None:
        return complex(np.trace(gram.c_power(m)))
    repeated, segs = seg_info
    r = len(repeated)
    if n**r > ENGINE_MAX_ASSIGNMENTS:
        raise EngineCapExceeded(
            f"partition needs {n}^{r} assignments (cap {ENGINE_MAX_ASSIGNMENTS:g})"
        )
    if r == 1:
        prod = np.ones(n)
        for _, _, gap in segs:
            prod = prod * gram.quad_diag(gap)
        return complex(prod.sum())
    # r >= 2: broadcast over the repeated-block axes, chunked on axis 0
    total = 0.0 + 0.0j
    chunk = max(1, _CHUNK_ELEMENTS // max(n ** (r - 1), 1))
    for start in range(0, n, chunk):
        rows = slice(start, min(start + chunk, n))
        rlen = rows.stop - rows.start
        acc = np.ones((rlen,) + (n,) * (r - 1), dtype=complex)
        for ax_a, ax_b, gap in segs:
            if ax_a == ax_b:
                q = gram.quad_diag(gap)
                f = q[rows] if ax_a == 0 else q
                shape = [1] * r
                shape[ax_a] = rlen if ax_a == 0 else n
                acc = acc * f.reshape(shape)
            else:
                if ax_a == 0:
                    f = gram.cross_block(gap, rows)
                    ax_other = ax_b
                elif ax_b == 0:
                    f = gram.cross_block(gap, rows).conj()  # G^t Hermitian
                    ax_other = ax_a
                else:
                    f = gram.cross_block(gap, slice(0, n))
                    if ax_a > ax_b:
                        f = f.T  # reshape assigns the earlier axis first
                    shape = [1] * r
                    shape[ax_a] = n
                    shape[ax_b] = n
                    acc = acc * f.reshape(shape)
                    continue
                shape = [1] * r
                shape[0] = rlen
                shape[ax_other] = n
                acc = acc * f.reshape(shape)
        total += acc.sum()
    return complex(total)


def _cycle_sum_distinct(gram: GramMatrix, m: int) -> complex:
    """W_m: sum over ordered distinct m-tuples of the cyclic Gram product."""
    if m > gram.n_kept:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for blocks, mu in _partition_table(m):
        total += mu * _contract(gram, blocks, m)
    return total


def _distinct_trace_sum_complex(gram: GramMatrix, k: int) -> complex:
    d = gram.dim
    n_kept = gram.n_kept
    total = complex((-1.0) ** k * d * math.perm(n_kept, k))
    for m in range(1, k + 1):
        if m > n_kept:
            continue
        fill = math.perm(n_kept - m, k - m)
        if fill == 0:
            continue
        coeff = math.comb(k, m) * (-1.0) ** (k - m) * (d + 1.0) ** m * fill
        total += coeff * _cycle_sum_distinct(gram, m)
    return total


def _to_real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-9 * abs(value.real) + 1e-12:
        raise ArithmeticError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= ENGINE_MAX_K:
        raise EngineCapExceeded(f"k={k} outside the exact engine range [1, {ENGINE_MAX_K}]")
    if k > n:
        raise ValueError(f"need at least k={k} records, have {n}")


def distinct_tuple_trace_sum(records: list[PovmRecord], k: int) -> float:
    """Exact sum of tr(A_{i1} ... A_{ik}) over ordered distinct tuples."""
    _check_k(k, len(records))
    gram = GramMatrix.from_records(records)
    return _to_real(_distinct_trace_sum_complex(gram, k), "tuple trace sum")


def moment_estimate(records: list[PovmRecord], k: int) -> float:
    """Unbiased k-th moment estimate; BOTTOM records count toward n."""
    n = len(records)
    _check_k(k, n)
    gram = GramMatrix.from_records(records)
    return _to_real(_distinct_trace_sum_complex(gram, k), "moment estimate") / math.perm(n, k)


@dataclass(frozen=True)
class MomentEstimates:
    """Moment estimates for orders 1..k_max from one record batch."""

    k_max: int
    values: np.ndarray
    n: int
    dim: int

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.size != self.k_max:
            raise ValueError("values must have length k_max")
        if not np.all(np.isfinite(vals)):
            raise ValueError("moment estimates must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def value(self, k: int) -> float:
        return float(self.values[k - 1])


def moment_estimates(records: list[PovmRecord], k_max: int) -> MomentEstimates:
    """Exact moment estimates for all orders 1..k_max, sharing one Gram."""
    n = len(records)
    _check_k(k_max, n)
    gram = GramMatrix.from_records(records)
    vals = [
        _to_real(_distinct_trace_sum_complex(gram, k), f"moment k={k}") / math.perm(n, k)
        for k in range(1, k_max + 1)
    ]
    return MomentEstimates(k_max=k_max, values=np.asarray(vals), n=n, dim=gram.dim)


def tuple_trace_kernels(records: list[PovmRecord], tuples: np.ndarray) -> np.ndarray:
    """tr(A_{i1} ... A_{ik}) for each index tuple (rows of ``tuples``).

    Evaluated per tuple from pairwise Gram entries; any tuple touching a
    BOTTOM record contributes 0.
    """
    tuples = np.asarray(tuples, dtype=int)
    n_tup, k = tuples.shape
    d = records[0].dim
    vecs = np.zeros((len(records), d), dtype=complex)
    alive = np.zeros(len(records), dtype=bool)
    for i, rec in enumerate(records):
        if not rec.is_bottom:
            vecs[i] = rec.vector
            alive[i] = True
    out = np.zeros(n_tup, dtype=complex)
    ok = alive[tuples].all(axis=1)
    if not np.any(ok):
        return out
    vt = vecs[tuples[ok]]  # (R, k, d)
    gram = np.einsum("rid,rjd->rij", vt.conj(), vt)
    vals = np.full(gram.shape[0], (-1.0) ** k * d, dtype=complex)
    for mask in range(1, 1 << k):
        pos = [j for j in range(k) if mask >> j & 1]
        m = len(pos)
        cyc = np.ones(gram.shape[0], dtype=complex)
        for t in range(m):
            cyc = cyc * gram[:, pos[t], pos[(t + 1) % m]]
        vals += (-1.0) ** (k - m) * (d + 1.0) ** m * cyc
    out[ok] = vals
    return out


def moment_estimate_incomplete(
    records: list[PovmRecord], k: int, n_tuples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Incomplete U-statistic: average over random ordered distinct tuples.

    Returns (estimate, standard error).  Unbiased for the same target as
    ``moment_estimate``; the fallback when the exact engine refuses.
    """
    n = len(records)
    if k > n:
        raise ValueError(f"need at least k={k} records, have {n}")
    if n_tuples < 1:
        raise ValueError("need at least one sampled tuple")
    tuples = rng.integers(0, n, size=(n_tuples, k))
    if k > 1:
        srt = np.sort(tuples, axis=1)
        bad = np.nonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))[0]
        while bad.size:
            tuples[bad] = rng.integers(0, n, size=(bad.size, k))
            srt = np.sort(tuples[bad], axis=1)
            bad = bad[(srt[:, 1:] == srt[:, :-1]).any(axis=1)]
    kernels = np.empty(n_tuples)
    chunk = max(1, _CHUNK_ELEMENTS // max(k * k, 1))
    for start in range(0, n_tuples, chunk):
        sl = slice(start, min(start + chunk, n_tuples))
        kernels[sl] = tuple_trace_kernels(records, tuples[sl]).real
    value = float(kernels.mean())
    stderr = float(kernels.std(ddof=1) / math.sqrt(n_tuples)) if n_tuples > 1 else math.inf
    return value, stderr


def renyi_estimate(zk: float, k: int) -> float:
    """Order-k Renyi entropy from a k-th moment estimate: ln(zk)/(1-k)."""
    if not (isinstance(k, (int, np.integer)) and k >= 2):
        raise ValueError("Renyi order k must be an integer >= 2")
    if zk <= 0:
        raise NonPositiveMomentEstimate(
            f"moment estimate {zk} is not positive; retry with more copies"
        )
    return math.log(zk) / (1 - k)


def variance_bound(k: int, n: int, d: int, even_moments=()) -> float:
    """Theoretical variance bound for the k-th moment statistic.

    ``even_moments[j-1]`` holds tr(sigma^(2j)) for j = 1..k-1; the j = 0
    term always uses tr(sigma^0) = d.  Requires k <= n/2.
    """
    if not 1 <= k <= n / 2:
        raise ValueError(f"bound requires 1 <= k <= n/2, got k={k}, n={n}")
    moments = [float(d)] + [float(x) for x in even_moments]
    if len(moments) < k:
        raise ValueError(f"need tr(sigma^(2j)) for j < k: {k - 1} values")
    total = 0.0
    for j in range(k):
        total += (k * d / n) ** (k - j) * moments[j]
    return 24.0**k / d * total
