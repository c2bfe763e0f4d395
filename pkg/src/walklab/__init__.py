"""Random-walk local times, DGFF sampling and exceptional-point measures on planar lattice domains."""

__version__ = "0.1.0"

G_CONST = 1.0 / (2.0 * 3.141592653589793)  # variance growth rate of the field, 1/(2*pi)

from .domain import DomainSpec, LatticeDomain, build_lattice, square_grid, validate_admissible
from .green import GreenOperator, PotentialKernelEvaluator, compute_green, kac_moments
from .fields import FieldSample, sample_dgff, zero_average_decompose, local_covariance
from .walk import WalkConfig, LocalTimeField, run_walk, fluctuations, cover_time
from .levelsets import ScaleSequences, PointMeasure, scale_sequences, extract_level_measure, q_sequence
from .continuum import ContinuumGrid, sigma_D2, d_function_green, d_function_poisson, continuum_green_estimate

__all__ = [
    "G_CONST",
    "DomainSpec", "LatticeDomain", "build_lattice", "square_grid", "validate_admissible",
    "GreenOperator", "PotentialKernelEvaluator", "compute_green", "kac_moments",
    "FieldSample", "sample_dgff", "zero_average_decompose", "local_covariance",
    "WalkConfig", "LocalTimeField", "run_walk", "fluctuations", "cover_time",
    "ScaleSequences", "PointMeasure", "scale_sequences", "extract_level_measure", "q_sequence",
    "ContinuumGrid", "sigma_D2", "d_function_green", "d_function_poisson", "continuum_green_estimate",
]
