"""Dimension-corrected one-sample location test for p growing with n.

The classical scaled statistic keeps a spread that the chi-square reference
ignores once p/n is no longer small.  This package centers and scales the
statistic with quantities from the limiting spectral law of the sample
covariance, provides the analytic machinery behind those quantities, and
ships a seeded Monte Carlo harness that checks the distributional claims.
"""
from .errors import (
    ConvergenceError,
    CsvFormatError,
    DegenerateDataError,
    DomainError,
    EvaluationError,
    ExperimentError,
    HidimT2Error,
    RankDeficiencyError,
    SingularBranchError,
    SingularKernelError,
    SingularMatrixError,
)
from .mp_law import (
    DEFAULT_QUADRATURE,
    MpModel,
    QuadratureSpec,
    cdf,
    companion_inverse,
    companion_m,
    density,
    fixed_point_residual,
    integral_f,
    inverse_map_residual,
    inverse_moments,
    stieltjes_m,
    support_edges,
)
from .spectral import (
    DataMatrix,
    SpectralDecomp,
    WeightedEsd,
    bilinear_form,
    centered_cov,
    gram_cov,
    hotelling_t2,
    matrix_function,
    resolvent_bilinear,
    resolvent_identity_check,
    sample_mean,
    spectral_decomp,
    weighted_esd,
)
from .inference import (
    ALTERNATIVES,
    CovarianceGrid,
    TestReport,
    bilinear_variance,
    companion_link_residual,
    companion_slope_residual,
    covariance_grid,
    covariance_identity_residual,
    mean_norm_variance,
    p_value,
    process_covariance,
    process_covariance_compact,
    standardize_t2,
)
from .montecarlo import (
    CovarianceEstimate,
    EntryDistribution,
    SimConfig,
    SimReport,
    estimate_process_covariance,
    generate_data,
    ks_statistic,
    run_bilinear_experiment,
    run_mean_norm_experiment,
    run_t2_experiment,
    truncate_centralize,
)
from .csvio import CsvLayout, read_data_matrix, write_data_matrix
from .reporting import SCHEMA_VERSION, ReportEnvelope, canonicalize, digest, make_envelope

__version__ = "0.1.0"

__all__ = [
    "ALTERNATIVES",
    "DEFAULT_QUADRATURE",
    "SCHEMA_VERSION",
    "ConvergenceError",
    "CovarianceEstimate",
    "CovarianceGrid",
    "CsvFormatError",
    "CsvLayout",
    "DataMatrix",
    "DegenerateDataError",
    "DomainError",
    "EntryDistribution",
    "EvaluationError",
    "ExperimentError",
    "HidimT2Error",
    "MpModel",
    "QuadratureSpec",
    "RankDeficiencyError",
    "ReportEnvelope",
    "SimConfig",
    "SimReport",
    "SingularBranchError",
    "SingularKernelError",
    "SingularMatrixError",
    "SpectralDecomp",
    "TestReport",
    "WeightedEsd",
    "bilinear_form",
    "bilinear_variance",
    "canonicalize",
    "cdf",
    "centered_cov",
    "companion_inverse",
    "companion_link_residual",
    "companion_m",
    "companion_slope_residual",
    "covariance_grid",
    "covariance_identity_residual",
    "density",
    "digest",
    "estimate_process_covariance",
    "fixed_point_residual",
    "generate_data",
    "gram_cov",
    "hotelling_t2",
    "integral_f",
    "inverse_map_residual",
    "inverse_moments",
    "ks_statistic",
    "make_envelope",
    "matrix_function",
    "mean_norm_variance",
    "p_value",
    "process_covariance",
    "process_covariance_compact",
    "read_data_matrix",
    "resolvent_bilinear",
    "resolvent_identity_check",
    "run_bilinear_experiment",
    "run_mean_norm_experiment",
    "run_t2_experiment",
    "sample_mean",
    "spectral_decomp",
    "standardize_t2",
    "stieltjes_m",
    "support_edges",
    "truncate_centralize",
    "weighted_esd",
    "write_data_matrix",
]
