"""Correlator statistics for certifying many-particle interference in random networks."""

__version__ = "0.1.0"

from .correlators import CDataset, Species, c_dataset, c_datasets, correlator, parse_species
from .errors import (
    BenchError,
    ConfigError,
    DimensionError,
    DomainError,
    InsufficientSamplesError,
    NumericalError,
    SelectionError,
    SizeError,
    UndefinedStatisticError,
)
from .oracle import (
    OutputDistribution,
    boson_distribution,
    distinguishable_distribution,
    exact_distribution,
    fermion_distribution,
    mc_haar_moments,
    oracle_correlator,
    permanent,
    sampled_counts,
    simulated_distribution,
)
from .rmt import BenchmarkStatistics, MomentTriple, rmt_moments, rmt_statistics
from .stats import (
    CertificationVerdict,
    CloudSummary,
    certify,
    cloud_summary,
    dataset_moments,
    dataset_statistics,
)
from .unitary import RngSeed, extract_submatrix, haar_unitary, unitarity_residual

