"""Robust CUSUM change detection for Gaussian observations with uncertain
pre- and post-change parameters."""

from ._core import (
    AffineDetector,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DomainError,
    Error,
    ExperimentConfig,
    LfpSolution,
    MatrixSet,
    QuadraticDetector,
    SaddleSolution,
    VectorSet,
    affine_detector,
    cusum_path,
    estimate_arl,
    estimate_delay,
    load_config,
    parse_config,
    quadratic_detector,
    run_experiment,
    solve_lfp,
    threshold_from_gamma,
)

__version__ = "0.1.0"
