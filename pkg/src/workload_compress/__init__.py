"""Compress SQL query workloads into small summaries that keep token coverage
and the token distribution of the original log."""

from .baselines import DistanceConfig, hierarchical, kmedoids, query_distance, random_sample
from .errors import ConfigError, DataError, WorkloadError
from .featurizer import default_spec, featurize, featurize_batch
from .metrics import (
    beta_score,
    compression_ratio,
    coverage,
    induced_distribution,
    representativity,
    target_distribution,
)
from .model import (
    CompressionConfig,
    CompressionResult,
    FeatureDecl,
    FeatureSpec,
    FeatureVector,
    MetricsReport,
    QueryRecord,
    TokenDistribution,
    Workload,
)
from .summarizer import (
    greedy_compress,
    kl_diagnostic,
    marginal_gain,
    merge_summaries,
    objective,
    parallel_compress,
)

__version__ = "0.1.0"

__all__ = [
    "CompressionConfig",
    "CompressionResult",
    "ConfigError",
    "DataError",
    "DistanceConfig",
    "FeatureDecl",
    "FeatureSpec",
    "FeatureVector",
    "MetricsReport",
    "QueryRecord",
    "TokenDistribution",
    "Workload",
    "WorkloadError",
    "beta_score",
    "compression_ratio",
    "coverage",
    "default_spec",
    "featurize",
    "featurize_batch",
    "greedy_compress",
    "hierarchical",
    "induced_distribution",
    "kl_diagnostic",
    "kmedoids",
    "marginal_gain",
    "merge_summaries",
    "objective",
    "parallel_compress",
    "query_distance",
    "random_sample",
    "representativity",
    "target_distribution",
]
