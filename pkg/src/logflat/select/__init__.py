"""Feature selection: single-value pruning, namespace merges, Pearson
pruning, chi-square selection, category partitioning, and tree importance."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from .chi2 import (
    ChiSquareResult,
    FeatureChi,
    benjamini_hochberg,
    chi2_sf,
    chi_square_select,
    chi_square_stat,
    gammq,
)
from .merges import (
    MergeCandidate,
    apply_merges,
    expanded_name,
    load_abbreviations,
    propose_namespace_merges,
    tokenize,
)
from .prune import (
    CorrelationMatrix,
    drop_single_valued,
    partition_by_category,
    pearson_matrix,
    prune_by_correlation,
)
from .report import (
    REASON_ALL_NULL,
    REASON_CORRELATED,
    REASON_NOT_SELECTED_CHI,
    REASON_SINGLE_VALUED,
    SelectionReport,
)
from .trees import ForestModel, fit_forest, pseudo_label_importances, tree_importance

CHI_MODES = ("numTopFeatures", "percentile", "fpr", "fdr")


@dataclass
class SelectConfig:
    max_categories: int = 4
    pearson_threshold: float = 0.9
    chi_mode: str = "numTopFeatures"
    chi_param: float = 10
    n_trees: int = 10
    tree_max_depth: int = 5
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.max_categories < 1:
            raise ConfigError("max_categories must be >= 1")
        if not (0.0 < self.pearson_threshold <= 1.0):
            raise ConfigError("pearson_threshold must be in (0, 1]")
        if self.chi_mode not in CHI_MODES:
            raise ConfigError(f"chi_mode must be one of {CHI_MODES}")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.tree_max_depth < 1:
            raise ConfigError("tree max_depth must be >= 1")


__all__ = [
    "SelectConfig", "CHI_MODES",
    "drop_single_valued", "pearson_matrix", "prune_by_correlation",
    "partition_by_category", "CorrelationMatrix",
    "chi_square_select", "chi_square_stat", "chi2_sf", "gammq",
    "benjamini_hochberg", "ChiSquareResult", "FeatureChi",
    "propose_namespace_merges", "apply_merges", "MergeCandidate",
    "load_abbreviations", "tokenize", "expanded_name",
    "tree_importance", "fit_forest", "pseudo_label_importances", "ForestModel",
    "SelectionReport", "REASON_SINGLE_VALUED", "REASON_ALL_NULL",
    "REASON_CORRELATED", "REASON_NOT_SELECTED_CHI",
]
