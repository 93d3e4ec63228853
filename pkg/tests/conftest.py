import numpy as np
import pytest

from specsim.linalg import random_density_from_spectrum
from specsim.streams import derive_stream


def mc_mean_se(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise Monte Carlo mean and standard error along axis 0."""
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    return mean, se


def assert_within_se(mean, target, se, factor: float = 4.0, floor: float = 1e-12):
    """Entrywise |mean - target| <= factor * se (+ tiny floor).

    Complex arrays are checked on real and imaginary parts separately.
    """
    mean = np.asarray(mean)
    target = np.asarray(target)
    se = np.asarray(se)
    if np.iscomplexobj(mean) or np.iscomplexobj(target):
        assert_within_se(mean.real, np.asarray(target).real, se, factor, floor)
        assert_within_se(mean.imag, np.asarray(target).imag, se, factor, floor)
        return
    gap = np.abs(mean - target)
    limit = factor * se + floor
    worst = np.max(gap - limit)
    assert worst <= 0, f"deviation exceeds {factor} s.e. by {worst:.3e}"


def random_state(d: int, seed: int, *labels) -> tuple[np.ndarray, np.ndarray]:
    """Random sorted Dirichlet spectrum and a Haar-conjugated state."""
    rng = derive_stream(seed, "random-state", d, *labels)
    alpha = np.sort(rng.dirichlet(np.ones(d)))[::-1]
    return alpha, random_density_from_spectrum(alpha, rng)


@pytest.fixture
def rng():
    return derive_stream(20260809, "fixture")
