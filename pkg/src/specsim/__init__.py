"""Spectrum estimation simulations: uniform-POVM measurements, moment
U-statistics, bucketing, local moment matching, and the entangled
distinguishing game driven by weak Schur sampling.
"""

from specsim.linalg import (
    Spectrum,
    fidelity,
    haar_unitary,
    random_density_from_spectrum,
    sorted_eigenvalues,
    trace_distance,
    tv_distance,
)
from specsim.streams import derive_stream

__all__ = [
    "Spectrum",
    "derive_stream",
    "fidelity",
    "haar_unitary",
    "random_density_from_spectrum",
    "sorted_eigenvalues",
    "trace_distance",
    "tv_distance",
]

__version__ = "0.1.0"
