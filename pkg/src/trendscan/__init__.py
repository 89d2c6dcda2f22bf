"""trendscan: multiscale comparison of nonparametric time trends across panels.

The package tests, for every pair of series in a panel, whether their time
trends differ anywhere, with family-wise error control over all pairs and all
location-scale points, then clusters the series into groups sharing a trend.
"""

from .exceptions import (
    ConfigError,
    CsvFormatError,
    DegenerateSupportError,
    DegenerateVarianceError,
    DomainError,
    GridError,
    MissingDataError,
    NonstationaryFitError,
    PanelValidationError,
    SingularDesignError,
    TrendscanError,
)
from .panel import LocationScaleGrid, LocationScalePoint, PanelDataset, Series, validate_panel
from .kernels import (
    KernelAggregateTable,
    WeightVector,
    aggregate_series,
    epanechnikov,
    lambda_correction,
    local_linear_weights,
)
from .estimate import (
    AugmentedPanel,
    LrvConfig,
    augment_panel,
    default_block_length,
    estimate_alpha,
    estimate_beta,
    local_linear_fit,
    lrv_ar_plugin,
    lrv_subseries,
)
from .multiscale import (
    GRID_PRESETS,
    CriticalValue,
    PairStatistics,
    TestReport,
    build_grid,
    critical_value,
    gaussian_draw_values,
    gaussian_statistic_draw,
    grid_fingerprint,
    minimal_intervals,
    pair_index_array,
    pair_statistics,
    run_test,
    seed_draw_cache,
)
from .cluster import (
    ClusterTree,
    GroupStructure,
    Merge,
    build_group_structure,
    classification_errors,
    dissimilarity,
    estimate_num_groups,
    group_difference_intervals,
    hac_tree,
    partition_at,
)
from .simulate import (
    DgpConfig,
    ExperimentResult,
    generate_panel,
    replicate_rng,
    run_clustering_experiment,
    run_power_experiment,
    run_size_experiment,
    simulate_ar1,
)
from .panel_io import (
    apply_draws_cache,
    draws_cache_key,
    experiment_from_dict,
    experiment_to_dict,
    group_structure_to_dict,
    load_draws_cache,
    load_panel_csv,
    read_report,
    report_from_dict,
    report_to_dict,
    save_panel_csv,
    store_draws,
    write_report,
)
from .plots import render_dendrogram, render_interval_plot
from ._backend import active_backend, available_backends, set_backend
from ._version import __version__

__all__ = [
    "__version__",
    # errors
    "TrendscanError",
    "PanelValidationError",
    "GridError",
    "DomainError",
    "DegenerateSupportError",
    "SingularDesignError",
    "DegenerateVarianceError",
    "NonstationaryFitError",
    "ConfigError",
    "CsvFormatError",
    "MissingDataError",
    # panel
    "Series",
    "PanelDataset",
    "validate_panel",
    "LocationScalePoint",
    "LocationScaleGrid",
    # kernels
    "epanechnikov",
    "lambda_correction",
    "WeightVector",
    "KernelAggregateTable",
    "local_linear_weights",
    "aggregate_series",
    # estimation
    "LrvConfig",
    "AugmentedPanel",
    "estimate_beta",
    "estimate_alpha",
    "lrv_subseries",
    "lrv_ar_plugin",
    "local_linear_fit",
    "augment_panel",
    "default_block_length",
    # multiscale test
    "GRID_PRESETS",
    "build_grid",
    "grid_fingerprint",
    "pair_index_array",
    "CriticalValue",
    "PairStatistics",
    "TestReport",
    "critical_value",
    "gaussian_draw_values",
    "gaussian_statistic_draw",
    "seed_draw_cache",
    "minimal_intervals",
    "pair_statistics",
    "run_test",
    # clustering
    "Merge",
    "ClusterTree",
    "GroupStructure",
    "dissimilarity",
    "hac_tree",
    "partition_at",
    "estimate_num_groups",
    "group_difference_intervals",
    "classification_errors",
    "build_group_structure",
    # simulation
    "DgpConfig",
    "ExperimentResult",
    "simulate_ar1",
    "generate_panel",
    "replicate_rng",
    "run_size_experiment",
    "run_power_experiment",
    "run_clustering_experiment",
    # io and reports
    "load_panel_csv",
    "save_panel_csv",
    "report_to_dict",
    "report_from_dict",
    "experiment_to_dict",
    "experiment_from_dict",
    "group_structure_to_dict",
    "write_report",
    "read_report",
    "draws_cache_key",
    "load_draws_cache",
    "apply_draws_cache",
    "store_draws",
    # plots
    "render_interval_plot",
    "render_dendrogram",
    # backends
    "active_backend",
    "available_backends",
    "set_backend",
]
