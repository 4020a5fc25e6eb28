"""Robust stable PID design for second-order-plus-time-delay plants.

Dominant pole placement by coefficient matching, Monte Carlo stability-region
exploration, k-means robust gain selection, closed-loop performance metrics,
perturbation robustness studies, regression tuning rules and rank-based
distribution tests — with a CLI that reproduces every study as delimited
output plus rendered figures.
"""

from .placement import (
    DesignSpec,
    KpSource,
    NonDominantPoleType,
    PidGains,
    closedloop_poles,
    desired_charpoly,
    is_stable,
    solve_gains,
)
from .plant import BENCHMARKS, SoptdModel, benchmark, perturb
from .explorer import DesignRanges, RegionDataset, best_expression, sample_region
from .cluster import kmeans, median_distance, robust_gains
from .metrics import (
    PerformanceReport,
    SimulationConfig,
    default_config,
    margins,
    performance_report,
    sensitivity_set,
)
from .robustness import (
    iso_performance_grid,
    max_allowable_perturbation,
    perturbation_sweep,
)
from .rules import RuleSample, TuningRuleFit, fit_tuning_rule, predict_gains
from .stats import KruskalResult, kruskal_wallis

__version__ = "1.0.0"

__all__ = [
    "BENCHMARKS",
    "DesignRanges",
    "DesignSpec",
    "KpSource",
    "KruskalResult",
    "NonDominantPoleType",
    "PerformanceReport",
    "PidGains",
    "RegionDataset",
    "RuleSample",
    "SimulationConfig",
    "SoptdModel",
    "TuningRuleFit",
    "benchmark",
    "best_expression",
    "closedloop_poles",
    "default_config",
    "desired_charpoly",
    "fit_tuning_rule",
    "is_stable",
    "iso_performance_grid",
    "kmeans",
    "kruskal_wallis",
    "margins",
    "max_allowable_perturbation",
    "median_distance",
    "performance_report",
    "perturb",
    "perturbation_sweep",
    "predict_gains",
    "robust_gains",
    "sample_region",
    "sensitivity_set",
    "solve_gains",
]
