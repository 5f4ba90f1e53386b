"""Change-point detection in high-dimensional time series.

The pipeline projects p-dimensional observations onto k sparse random
directions, applies a univariate CUSUM test to each projected series, and
combines the per-projection p-values (Bonferroni, Benjamini-Hochberg,
harmonic mean, Cauchy) into a global decision and a location estimate. A
Monte Carlo harness reproduces size, power and RMSE studies, and a CLI
drives detection, simulation and the yearly-series application pipeline.
"""

from ._version import __version__
from .combine import (
    CombinedResult,
    benjamini_hochberg,
    bonferroni,
    calibrated_hmp_pvalue,
    cauchy_combination,
    combine,
    harmonic_mean_p,
)
from .cusum import (
    CusumProfile,
    NullDistribution,
    TrimSpec,
    cusum_profile,
    get_or_simulate_null,
    hac_variance,
    load_null_distribution,
    save_null_distribution,
    simulate_null,
    split_variance,
    standard_pvalue,
    weighted_pvalue,
)
from .detector import (
    DetectionReport,
    DetectorConfig,
    RepetitionSummary,
    detect,
    detect_multi,
    detect_repeated,
)
from .harness import (
    ExperimentSpec,
    ResultTable,
    run_experiment,
    run_repetition_study,
    run_rmse,
    run_size_adjusted_power,
    run_size_power,
)
from .landau import landau_sf, standard_landau_sf
from .projection import (
    DataMatrix,
    ProjectedSeries,
    ProjectionMatrix,
    generate_directions,
    project,
)
from .simgen import (
    BreakSpec,
    GeneratorConfig,
    fourier_basis,
    generate,
    save_dataset,
    sigma_schedule,
)
from .yearly import YearlyMatrix, load_yearly, reshape_yearly, save_yearly

__all__ = [
    "__version__",
    "BreakSpec",
    "CombinedResult",
    "CusumProfile",
    "DataMatrix",
    "DetectionReport",
    "DetectorConfig",
    "ExperimentSpec",
    "GeneratorConfig",
    "NullDistribution",
    "ProjectedSeries",
    "ProjectionMatrix",
    "RepetitionSummary",
    "ResultTable",
    "TrimSpec",
    "YearlyMatrix",
    "benjamini_hochberg",
    "bonferroni",
    "calibrated_hmp_pvalue",
    "cauchy_combination",
    "combine",
    "cusum_profile",
    "detect",
    "detect_multi",
    "detect_repeated",
    "fourier_basis",
    "generate",
    "generate_directions",
    "get_or_simulate_null",
    "hac_variance",
    "landau_sf",
    "load_null_distribution",
    "load_yearly",
    "project",
    "reshape_yearly",
    "run_experiment",
    "run_repetition_study",
    "run_rmse",
    "run_size_adjusted_power",
    "run_size_power",
    "save_dataset",
    "save_null_distribution",
    "save_yearly",
    "sigma_schedule",
    "simulate_null",
    "split_variance",
    "standard_landau_sf",
    "standard_pvalue",
    "weighted_pvalue",
]
