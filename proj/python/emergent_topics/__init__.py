"""Emerging-topic detection by tracking outliers across cumulative time windows."""

from ._core import (
    ConfigError,
    IntegrityError,
    PartialRunError,
    band,
    entropy_bits,
    fit_layout,
    flesch_kincaid,
    hdbscan,
    kruskal_wallis,
    rescale,
    run,
    silhouette,
    spearman,
    synthesize,
    tokenize,
    trustworthiness,
    yules_k,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "IntegrityError",
    "PartialRunError",
    "band",
    "entropy_bits",
    "fit_layout",
    "flesch_kincaid",
    "hdbscan",
    "kruskal_wallis",
    "rescale",
    "run",
    "silhouette",
    "spearman",
    "synthesize",
    "tokenize",
    "trustworthiness",
    "yules_k",
]
