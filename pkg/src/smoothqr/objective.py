"""Smoothed empirical quantile objective, its derivatives, and the KKT audit.

Everything works in the residual convention ``r_i = y_i - x_i' beta``.  The
penalized problem all solvers target is

    (1/n) sum_i loss_h(y_i - x_i' beta) + sum_j w_j |beta_j|,

and ``kkt_residual`` measures first-order stationarity of a candidate beta for
that problem, independent of which solver produced it.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    check_loss,
    kernel_cdf,
    kernel_density,
    smoothed_loss,
)

__all__ = [
    "Dataset",
    "FitResult",
    "check_loss",
    "smoothed_objective",
    "gradient",
    "hessian",
    "kkt_residual",
]


@dataclass
class Dataset:
    """Design matrix (column 0 constant one when ``intercept``) and response."""

    x: np.ndarray
    y: np.ndarray
    intercept: bool = True

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float).ravel()
        if self.x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        n, p = self.x.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got shape {(n, p)}")
        if self.y.shape != (n,):
            raise ValueError(f"y has length {self.y.size}, expected {n}")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValueError("data contain non-finite entries")
        if self.intercept and not np.all(self.x[:, 0] == 1.0):
            raise ValueError("intercept flag set but column 0 is not all ones")

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]


@dataclass
class FitResult:
    """Solver output: coefficients plus convergence diagnostics."""

    beta: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    kkt_inf: float
    diagnostics: dict = field(default_factory=dict)


def _check_beta(data, beta):
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != data.p:
        raise ValueError(f"beta has length {beta.size}, expected {data.p}")
    return beta


def smoothed_objective(data, spec, beta):
    """Mean smoothed check loss of the residuals at beta."""
    beta = _check_beta(data, beta)
    r = data.y - data.x @ beta
    return float(np.mean(smoothed_loss(spec, r)))


def gradient(data, spec, beta):
    """(1/n) sum_i {Kbar(-r_i/h) - tau} x_i."""
    beta = _check_beta(data, beta)
    r = data.y - data.x @ beta
    score = kernel_cdf(spec.kernel, -r / spec.h) - spec.tau
    return data.x.T @ score / data.n


def hessian(data, spec, beta):
    """(1/n) sum_i K_h(-r_i) x_i x_i'; symmetric positive semidefinite.

    Exposed for diagnostics; solvers never form it (p can be large).
    """
    beta = _check_beta(data, beta)
    r = data.y - data.x @ beta
    d = kernel_density(spec.kernel, -r / spec.h) / spec.h
    return (data.x * d[:, None]).T @ data.x / data.n


def penalized_objective(data, spec, weights, beta):
    """smoothed_objective plus the weighted-l1 penalty."""
    beta = _check_beta(data, beta)
    return smoothed_objective(data, spec, beta) + float(
        np.abs(beta) @ np.asarray(weights, dtype=float)
    )


def _golden_section(f, lo, hi, tol=1e-10):
    # golden-section search for the minimum of a unimodal f on [lo, hi]
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def intercept_only_location(y, spec):
    """Minimizer of the mean smoothed loss over a constant fit."""
    y = np.asarray(y, dtype=float)
    lo = float(np.min(y)) - spec.h - 1.0
    hi = float(np.max(y)) + spec.h + 1.0
    return _golden_section(lambda b: float(np.mean(smoothed_loss(spec, y - b))), lo, hi)


def kkt_residual(data, spec, weights, beta):
    """Infinity-norm violation of stationarity for the weighted-l1 problem.

    At beta_j != 0 the subgradient is pinned to sign(beta_j); at beta_j = 0 a
    violation occurs only when |grad_j| exceeds the weight.
    """
    beta = _check_beta(data, beta)
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != data.p:
        raise ValueError(f"weights have length {weights.size}, expected {data.p}")
    g = gradient(data, spec, beta)
    active = beta != 0.0
    viol = np.where(
        active,
        np.abs(g + weights * np.sign(beta)),
        np.maximum(np.abs(g) - weights, 0.0),
    )
    return float(np.max(viol))
