"""Uniform POVM and conditioned uniform POVM simulation.

The uniform POVM is realized by its equivalent randomized procedure: draw a
Haar-random orthonormal basis, measure in it, output the observed basis
vector.  The conditioned variant first applies a projective measurement
{Pi, I - Pi} and reports BOTTOM on the Pi outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from specsim.linalg import check_density, check_hermitian, haar_unitaries

__all__ = [
    "PovmRecord",
    "conditioned_estimator",
    "measure_conditioned",
    "measure_conditioned_batch",
    "measure_uniform_povm",
    "measure_uniform_povm_batch",
    "single_copy_estimator",
]

PROJECTOR_ATOL = 1e-10


@dataclass(frozen=True)
class PovmRecord:
    """One measurement outcome: a unit vector, or BOTTOM (vector=None).

    BOTTOM is only produced by the conditioned measurement.
    """

    vector: np.ndarray | None
    dim: int

    def __post_init__(self) -> None:
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=complex).reshape(-1)
            if v.size != self.dim:
                raise ValueError("outcome vector has wrong dimension")
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("outcome vector is not normalized")
            v.flags.writeable = False
            object.__setattr__(self, "vector", v)

    @property
    def is_bottom(self) -> bool:
        return self.vector is None


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each row's global phase so its largest entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=1)
    lead = vectors[np.arange(vectors.shape[0]), idx]
    return vectors * (np.abs(lead) / lead)[:, None]


def measure_uniform_povm_batch(
    rho: np.ndarray, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Outcome vectors of `count` uniform-POVM measurements, shape (count, d).

    One Haar basis and one uniform draw are consumed per copy; the outcome is
    the basis column selected by inverse-CDF over the d basis probabilities.
    """
    rho = check_density(rho)
    d = rho.shape[0]
    if count == 0:
        return np.zeros((0, d), dtype=complex)
    out = np.empty((count, d), dtype=complex)
    # chunked so that n copies never materialize an (n, d, d) stack too large
    chunk = max(1, int(2**22 // max(d * d, 1)))
    done = 0
    while done < count:
        m = min(chunk, count - done)
        basis = haar_unitaries(d, m, rng)
        probs = np.einsum("nji,jk,nki->ni", basis.conj(), rho, basis).real
        totals = probs.sum(axis=1)
        if np.any(np.abs(totals - 1.0) > 1e-9):
            raise ValueError("measurement probabilities do not sum to 1")
        np.clip(probs, 0.0, None, out=probs)
        cdf = np.cumsum(probs, axis=1)
        cdf /= cdf[:, -1:]
        u = rng.random(m)
        picks = (cdf < u[:, None]).sum(axis=1)
        np.clip(picks, 0, d - 1, out=picks)
        out[done : done + m] = basis[np.arange(m), :, picks]
        done += m
    return _canonical_phase(out)


def measure_uniform_povm(rho: np.ndarray, rng: np.random.Generator) -> PovmRecord:
    """Measure one copy of rho with the uniform POVM."""
    vec = measure_uniform_povm_batch(rho, 1, rng)[0]
    return PovmRecord(vector=vec, dim=vec.size)


def single_copy_estimator(rec: PovmRecord) -> np.ndarray:
    """(d+1) |u><u| - I from one outcome; unbiased for the measured state."""
    if rec.is_bottom:
        raise ValueError("single_copy_estimator requires a non-BOTTOM record")
    u = rec.vector
    return (rec.dim + 1) * np.outer(u, u.conj()) - np.eye(rec.dim)


def check_projector(pi: np.ndarray) -> np.ndarray:
    pi = check_hermitian(pi, atol=PROJECTOR_ATOL, name="projector")
    if np.max(np.abs(pi @ pi - pi)) > PROJECTOR_ATOL:
        raise ValueError("projector is not idempotent")
    return pi


def measure_conditioned_batch(
    rho: np.ndarray, pi: np.ndarray, count: int, rng: np.random.Generator
) -> list[PovmRecord]:
    """`count` conditioned-POVM records: BOTTOM w.p. tr(Pi rho), else the
    uniform POVM applied to the collapsed small-bucket state on all of C^d.
    """
    rho = check_density(rho)
    pi = check_projector(pi)
    d = rho.shape[0]
    pibar = np.eye(d) - pi
    sigma = pibar @ rho @ pibar
    p_bottom = min(1.0, max(0.0, float(np.trace(pi @ rho).real)))
    bottom = rng.random(count) < p_bottom
    n_keep = int(count - bottom.sum())
    records: list[PovmRecord] = [PovmRecord(vector=None, dim=d)] * count
    if n_keep > 0:
        mass = float(np.trace(sigma).real)
        if mass <= 1e-15:
            # collapse target is empty: the Pi-bar outcome has probability 0,
            # so any survivors are an artifact of rounding; report BOTTOM
            return records
        collapsed = (sigma + sigma.conj().T) / (2 * mass)
        vecs = measure_uniform_povm_batch(collapsed, n_keep, rng)
        keep_pos = np.nonzero(~bottom)[0]
        for j, pos in enumerate(keep_pos):
            records[pos] = PovmRecord(vector=vecs[j], dim=d)
    return records


def measure_conditioned(
    rho: np.ndarray, pi: np.ndarray, rng: np.random.Generator
) -> PovmRecord:
    """Measure one copy of rho with the conditioned uniform POVM."""
    return measure_conditioned_batch(rho, pi, 1, rng)[0]


def conditioned_estimator(rec: PovmRecord) -> np.ndarray:
    """Unbiased estimator of the compressed state: 0 on BOTTOM, else the
    single-copy estimator."""
    if rec.is_bottom:
        return np.zeros((rec.dim, rec.dim), dtype=complex)
    return single_copy_estimator(rec)
