"""Threshold bucketing from uniform-POVM tomography, plus the spectral
disturbance and PCA diagnostics used to audit it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from specsim.linalg import (
    check_hermitian,
    eigh_hermitian,
    fidelity,
    hermitize,
    sorted_eigenvalues,
    trace_distance,
    tv_distance,
)
from specsim.povm import PovmRecord, check_projector

__all__ = [
    "BucketingOutcome",
    "alignment_error",
    "bucket",
    "fidelity_pca_error",
    "large_bucket_spectrum_error",
    "misclassification",
    "simple_bucketing_audit",
    "tomography_estimate",
    "trace_pca_error",
]


@dataclass(frozen=True)
class BucketingOutcome:
    """Tomography estimate plus the projector onto its large eigenvalues."""

    rho_hat: np.ndarray
    pi: np.ndarray
    rank_r: int
    threshold_b: float

    def __post_init__(self) -> None:
        check_projector(self.pi)
        if abs(np.trace(self.rho_hat).real - 1.0) > 1e-10:
            raise ValueError("rho_hat must have unit trace")
        if not 0.0 < self.threshold_b <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")

    @property
    def pi_bar(self) -> np.ndarray:
        return np.eye(self.pi.shape[0]) - self.pi


def tomography_estimate(records: list[PovmRecord]) -> np.ndarray:
    """Average of the single-copy estimators: (d+1)/n sum |u_i><u_i| - I.

    Hermitian with trace exactly 1; generally not PSD.
    """
    if not records:
        raise ValueError("need at least one record")
    if any(r.is_bottom for r in records):
        raise ValueError("tomography uses unconditioned records only")
    d = records[0].dim
    vecs = np.stack([r.vector for r in records])
    mean_proj = vecs.T @ vecs.conj() / len(records)
    return hermitize((d + 1) * mean_proj - np.eye(d))


def bucket(rho_hat: np.ndarray, threshold_b: float) -> BucketingOutcome:
    """Projector onto the eigenvectors of rho_hat with eigenvalue >= B.

    The threshold is closed: an eigenvalue exactly at B joins the large
    bucket.  r = 0 and r = d are both legal outcomes.
    """
    if not 0.0 < threshold_b <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    rho_hat = check_hermitian(rho_hat, atol=1e-10, name="rho_hat")
    vals, vecs = eigh_hermitian(rho_hat)
    sel = vals >= threshold_b
    r = int(sel.sum())
    top = vecs[:, sel]
    pi = hermitize(top @ top.conj().T)
    return BucketingOutcome(rho_hat=rho_hat, pi=pi, rank_r=r, threshold_b=threshold_b)


def _pinch(rho: np.ndarray, pi: np.ndarray) -> np.ndarray:
    pibar = np.eye(pi.shape[0]) - pi
    return pi @ rho @ pi + pibar @ rho @ pibar


def alignment_error(rho: np.ndarray, pi: np.ndarray) -> float:
    """TV distance between the spectrum of the pinched state and of rho."""
    pi = check_projector(pi)
    pinched = hermitize(_pinch(rho, pi))
    return tv_distance(sorted_eigenvalues(pinched), sorted_eigenvalues(rho))


def misclassification(rho: np.ndarray, pi: np.ndarray) -> float:
    """Operator norm of the small-bucket compression, ||Pi_bar rho Pi_bar||."""
    pi = check_projector(pi)
    pibar = np.eye(pi.shape[0]) - pi
    vals = sorted_eigenvalues(hermitize(pibar @ rho @ pibar))
    return float(np.max(np.abs(vals)))


def large_bucket_spectrum_error(rho: np.ndarray, outcome: BucketingOutcome) -> float:
    """TV distance between the top-r eigenvalues of rho_hat and of rho."""
    r = outcome.rank_r
    if r == 0:
        return 0.0
    top_hat = sorted_eigenvalues(outcome.rho_hat)[:r]
    top_true = sorted_eigenvalues(rho)[:r]
    return tv_distance(top_hat, top_true)


def _rank_of(a: np.ndarray, vals: np.ndarray) -> int:
    tol = 1e-9 * max(1.0, float(np.abs(vals).max(initial=0.0)))
    return int((vals > tol).sum())


def fidelity_pca_error(rho: np.ndarray, rho_hat_leq_r: np.ndarray, rank: int | None = None) -> float:
    """sum_{i<=r} alpha_i + tr(rho_hat_leq_r) - 2 F(rho, rho_hat_leq_r).

    Zero exactly when the argument is the true top-r eigenprojection of rho;
    nonnegative always.  The argument must be PSD.
    """
    vals = sorted_eigenvalues(rho_hat_leq_r)
    if vals[-1] < -1e-8:
        raise ValueError("rho_hat_leq_r must be PSD")
    r = _rank_of(rho_hat_leq_r, vals) if rank is None else rank
    alpha = sorted_eigenvalues(rho)
    return float(alpha[:r].sum() + vals.sum() - 2.0 * fidelity(rho, rho_hat_leq_r))


def trace_pca_error(rho: np.ndarray, rho_hat_leq_r: np.ndarray, rank: int | None = None) -> float:
    """2 D_tr(rho, rho_hat_leq_r) - sum_{i>r} alpha_i."""
    vals = sorted_eigenvalues(rho_hat_leq_r)
    if vals[-1] < -1e-8:
        raise ValueError("rho_hat_leq_r must be PSD")
    r = _rank_of(rho_hat_leq_r, vals) if rank is None else rank
    alpha = sorted_eigenvalues(rho)
    return float(2.0 * trace_distance(rho, rho_hat_leq_r) - alpha[r:].sum())


def simple_bucketing_audit(rho: np.ndarray, pi: np.ndarray) -> tuple[bool, float]:
    """Audit {Pi, Pi_bar} as a simple bucketing of a subspace-uniform state.

    Requires rho = P/r for a rank-r projector P.  Checks the eigenvalue
    conditions Pi rho Pi >= Pi/(2r) and Pi_bar rho Pi_bar <= Pi_bar/(2r) and
    returns (is_simple, alignment error).  When the bucketing is simple, the
    infidelity of Pi/tr(Pi) is verified to be at most the alignment error.
    """
    pi = check_projector(pi)
    alpha = sorted_eigenvalues(rho)
    top = alpha[0]
    if top <= 0:
        raise ValueError("state must be maximally mixed on a subspace")
    r = int(round(1.0 / top))
    target = np.zeros_like(alpha)
    target[:r] = 1.0 / r
    if np.max(np.abs(alpha - target)) > 1e-9:
        raise ValueError("state must be maximally mixed on a rank-r subspace")
    d = rho.shape[0]
    pibar = np.eye(d) - pi
    eps = alignment_error(rho, pi)
    lower = sorted_eigenvalues(hermitize(pi @ rho @ pi - pi / (2.0 * r)))
    upper = sorted_eigenvalues(hermitize(pibar @ rho @ pibar - pibar / (2.0 * r)))
    is_simple = bool(lower[-1] >= -1e-10 and upper[0] <= 1e-10)
    if is_simple:
        infidelity = 1.0 - fidelity(rho, pi / np.trace(pi).real)
        if infidelity > eps + 1e-9:
            raise AssertionError(
                f"simple bucketing with infidelity {infidelity} > alignment {eps}"
            )
    return is_simple, eps
