"""Complex Hermitian linear algebra, distances, and Haar sampling.

All operators are plain complex ``numpy`` arrays.  Eigenproblems are solved
through the real-symmetric embedding of a Hermitian matrix (see
:func:`eigh_hermitian`), which keeps the whole package on a single real
symmetric eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Spectrum",
    "eigh_hermitian",
    "fidelity",
    "haar_unitaries",
    "haar_unitary",
    "hermitize",
    "is_hermitian",
    "random_density_from_spectrum",
    "sorted_eigenvalues",
    "swap_matrix",
    "trace_distance",
    "tv_distance",
]

HERMITIAN_ATOL = 1e-12
DENSITY_TRACE_ATOL = 1e-10
DENSITY_EIG_ATOL = 1e-10
PSD_INPUT_ATOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Sorted non-increasing vector of eigenvalue mass.

    Entries lie in [0, 1] and sum to at most 1 (+1e-12); sub-normalized
    spectra are first-class because compressed operators carry mass < 1.
    """

    entries: np.ndarray
    total_tol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=float).reshape(-1).copy()
        if arr.size == 0:
            raise ValueError("spectrum must have at least one entry")
        if np.any(np.diff(arr) > 1e-12):
            raise ValueError("spectrum entries must be non-increasing")
        if arr[-1] < -1e-12 or arr[0] > 1 + 1e-12:
            raise ValueError("spectrum entries must lie in [0, 1]")
        total = float(arr.sum())
        if total > 1 + self.total_tol:
            raise ValueError(f"spectrum mass {total} exceeds 1")
        np.clip(arr, 0.0, 1.0, out=arr)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.size

    @property
    def total(self) -> float:
        return float(self.entries.sum())

    @classmethod
    def uniform(cls, d: int) -> "Spectrum":
        return cls(np.full(d, 1.0 / d))

    @classmethod
    def pure(cls, d: int) -> "Spectrum":
        v = np.zeros(d)
        v[0] = 1.0
        return cls(v)

    def require_normalized(self, atol: float = 1e-9) -> None:
        if abs(self.total - 1.0) > atol:
            raise ValueError(f"spectrum mass {self.total} is not 1")


def as_vector(x) -> np.ndarray:
    """Entries of a Spectrum, or a 1-d float view of any vector-like."""
    if isinstance(x, Spectrum):
        return x.entries
    return np.asarray(x, dtype=float).reshape(-1)


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A^dagger)/2."""
    return (a + a.conj().T) / 2


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= atol)


def check_hermitian(a: np.ndarray, atol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not is_hermitian(a, atol):
        raise ValueError(f"{name} is not Hermitian to {atol:g}")
    return a


def check_density(rho: np.ndarray) -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD, unit trace."""
    rho = check_hermitian(rho, atol=1e-10, name="density matrix")
    tr = complex(np.trace(rho)).real
    if abs(tr - 1.0) > DENSITY_TRACE_ATOL:
        raise ValueError(f"density matrix trace {tr} is not 1")
    if sorted_eigenvalues(rho)[-1] < -DENSITY_EIG_ATOL:
        raise ValueError("density matrix is not PSD")
    return rho


def _real_embedding(a: np.ndarray) -> np.ndarray:
    x, y = a.real, a.imag
    return np.block([[x, -y], [y, x]])


def eigh_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix via its real embedding.

    The 2d x 2d block matrix [[Re A, -Im A], [Im A, Re A]] is real symmetric
    and carries each eigenvalue of A with doubled multiplicity; a real
    eigenvector (x, y) maps to the complex eigenvector x + iy.  Returns
    eigenvalues in ascending order and a matrix of orthonormal column
    eigenvectors.  Eigensolver failures propagate as LinAlgError.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    if d == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    w2, v2 = np.linalg.eigh(_real_embedding(a))
    # doubled eigenvalues are adjacent after sorting; average each pair
    vals = 0.5 * (w2[0::2] + w2[1::2])
    scale = max(1.0, float(np.abs(w2).max()))
    gap_tol = 1e-12 * scale
    vecs = np.empty((d, d), dtype=complex)
    # cluster the 2d real eigenvectors by eigenvalue, then pick d complex
    # orthonormal vectors (pairs never split: they are exactly degenerate)
    start = 0
    out = 0
    while start < 2 * d:
        stop = start + 1
        while stop < 2 * d and w2[stop] - w2[stop - 1] <= gap_tol:
            stop += 1
        block = v2[:, start:stop]
        cplx = block[:d, :] + 1j * block[d:, :]
        q, r = np.linalg.qr(cplx)
        keep = np.abs(np.diag(r)) > 1e-8
        m = (stop - start) // 2
        cols = q[:, keep][:, :m]
        if cols.shape[1] != m:
            # rare ill-conditioned cluster: re-orthonormalize against noise
            q, _ = np.linalg.qr(cplx + 1e-300)
            cols = q[:, :m]
        vecs[:, out : out + m] = cols
        out += m
        start = stop
    return vals, vecs


def sorted_eigenvalues(a: np.ndarray) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, sorted non-increasing.

    Returned as a plain vector: inputs need not be PSD, so entries may be
    negative.
    """
    a = check_hermitian(a, atol=1e-10)
    w2 = np.linalg.eigvalsh(_real_embedding(a))
    return (0.5 * (w2[0::2] + w2[1::2]))[::-1].copy()


def tv_distance(x, y) -> float:
    """Total variation distance (1/2) sum_i |x_i - y_i|."""
    xv, yv = as_vector(x), as_vector(y)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    return 0.5 * float(np.abs(xv - yv).sum())


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(1/2) ||rho - sigma||_1 for Hermitian operators (PSD not required)."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    diff = check_hermitian(rho - sigma, atol=2e-10, name="difference")
    return 0.5 * float(np.abs(sorted_eigenvalues(diff)).sum())


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    vals, vecs = eigh_hermitian(a)
    if vals[0] < -PSD_INPUT_ATOL:
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)) of two PSD matrices.

    Accepts sub-normalized operators; raises on inputs with an eigenvalue
    below -1e-8.
    """
    rho = check_hermitian(rho, atol=1e-8, name="rho")
    sigma = check_hermitian(sigma, atol=1e-8, name="sigma")
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    root = _psd_sqrt(rho)
    svals, _ = eigh_hermitian(hermitize(root @ sigma @ root))
    if svals[0] < -PSD_INPUT_ATOL:
        raise ValueError(f"matrix is not PSD (min eigenvalue {svals[0]:.3e})")
    return float(np.sqrt(np.clip(svals, 0.0, None)).sum())


def haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of `count` independent Haar unitaries, shape (count, d, d).

    QR of complex Ginibre matrices, with each Q column rescaled by the phase
    R_jj/|R_jj| so the R factor of the corrected decomposition has a positive
    diagonal; that unique decomposition makes the distribution exactly Haar.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    z = rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(z)
    diag = np.einsum("nii->ni", r)
    mag = np.abs(diag)
    while np.any(mag == 0.0):  # measure-zero degenerate draw: resample
        bad = np.unique(np.nonzero(mag == 0.0)[0])
        z[bad] = rng.standard_normal((bad.size, d, d)) + 1j * rng.standard_normal(
            (bad.size, d, d)
        )
        q[bad], r[bad] = np.linalg.qr(z[bad])
        diag = np.einsum("nii->ni", r)
        mag = np.abs(diag)
    return q * (diag / mag)[:, None, :]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-random d x d unitary."""
    return haar_unitaries(d, 1, rng)[0]


def random_density_from_spectrum(alpha, rng: np.random.Generator) -> np.ndarray:
    """U diag(alpha) U^dagger for a Haar-random U."""
    vec = as_vector(alpha)
    if abs(vec.sum() - 1.0) > 1e-9:
        raise ValueError(f"spectrum mass {vec.sum()} is not 1")
    u = haar_unitary(vec.size, rng)
    return hermitize((u * vec) @ u.conj().T)


def swap_matrix(d: int) -> np.ndarray:
    """The SWAP operator on C^d (x) C^d."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s
