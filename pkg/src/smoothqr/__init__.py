"""Penalized quantile regression with convolution-smoothed check losses."""

from .admm import AdmmConfig, InvalidKernelError, r_update_root, solve_admm
from .cd import CdConfig, NonUniformKernelError, soft_threshold, solve_cd
from .irw import (
    EmptySupportError,
    ImprovementSequence,
    IRWResult,
    fit_irw,
    fit_oracle,
    relative_improvement,
)
from .kernels import (
    KERNELS,
    SmoothSpec,
    check_loss,
    kernel_cdf,
    kernel_density,
    smoothed_loss,
    smoothed_loss_derivative,
)
from .model_selection import (
    AllUnpenalizedError,
    CVResult,
    cross_validate,
    default_bandwidth,
    lambda_grid,
)
from .objective import Dataset, FitResult, gradient, hessian, kkt_residual, smoothed_objective
from .penalties import FAMILIES, PenaltySpec, penalty_derivative, reweight
from .simulation import (
    NOISE_FAMILIES,
    BenchmarkResult,
    MetricsReport,
    Scenario,
    generate,
    metrics,
    noise_quantile,
    prediction_error,
    run_benchmark,
    sample_noise,
    solve_ls_lasso,
)

__version__ = "0.1.0"
