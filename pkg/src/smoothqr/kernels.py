"""Kernel densities, integrated kernels, and convolution-smoothed check losses.

The raw check loss ``rho_tau(u) = u * (tau - 1{u < 0})`` is convolved with a
rescaled kernel ``K_h(u) = K(u/h) / h`` to produce a convex, twice
differentiable surrogate.  For the five kernels supported here the convolution
has a closed form, written below with the decomposition
``rho_tau(u) = |u|/2 + (tau - 1/2) u``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

KERNELS = ("uniform", "gaussian", "laplacian", "logistic", "epanechnikov")


@dataclass(frozen=True)
class SmoothSpec:
    """Quantile level, bandwidth, and kernel of a smoothed quantile loss."""

    tau: float
    h: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.h > 0.0:
            raise ValueError(f"bandwidth h must be positive, got {self.h}")
        if self.kernel not in KERNELS:
            raise ValueError(
                f"unknown kernel {self.kernel!r}; choose from {KERNELS}"
            )


def kernel_density(kernel, u):
    """Kernel density K(u); symmetric, nonnegative, integrates to one."""
    u = np.asarray(u, dtype=float)
    if kernel == "uniform":
        return np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    if kernel == "gaussian":
        return np.exp(-0.5 * u**2) / np.sqrt(2.0 * np.pi)
    if kernel == "laplacian":
        return 0.5 * np.exp(-np.abs(u))
    if kernel == "logistic":
        # e^{-u} / (1 + e^{-u})^2 written via the sigmoid for stability
        s = expit(u)
        return s * (1.0 - s)
    if kernel == "epanechnikov":
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u**2), 0.0)
    raise ValueError(f"unknown kernel {kernel!r}")


def kernel_cdf(kernel, u):
    """Integrated kernel: antiderivative of the density, in [0, 1]."""
    u = np.asarray(u, dtype=float)
    if kernel == "uniform":
        return np.clip(0.5 * (u + 1.0), 0.0, 1.0)
    if kernel == "gaussian":
        return ndtr(u)
    if kernel == "laplacian":
        return np.where(u <= 0.0, 0.5 * np.exp(u), 1.0 - 0.5 * np.exp(-np.abs(u)))
    if kernel == "logistic":
        return expit(u)
    if kernel == "epanechnikov":
        inner = 0.5 + 0.75 * u - 0.25 * u**3
        return np.where(u < -1.0, 0.0, np.where(u > 1.0, 1.0, inner))
    raise ValueError(f"unknown kernel {kernel!r}")


def check_loss(tau, u):
    """Piecewise-linear quantile loss u * (tau - 1{u < 0})."""
    u = np.asarray(u, dtype=float)
    return u * (tau - (u < 0.0))


def smoothed_loss(spec, u):
    """Smoothed check loss: the convolution of the check loss with K_h."""
    tau, h = spec.tau, spec.h
    u = np.asarray(u, dtype=float)
    v = u / h
    if spec.kernel == "uniform":
        core = np.where(np.abs(v) <= 1.0, 0.5 * v**2 + 0.5, np.abs(v))
        return 0.5 * h * core + (tau - 0.5) * u
    if spec.kernel == "gaussian":
        core = np.sqrt(2.0 / np.pi) * np.exp(-0.5 * v**2) + v * (1.0 - 2.0 * ndtr(-v))
        return 0.5 * h * core + (tau - 0.5) * u
    if spec.kernel == "laplacian":
        return check_loss(tau, u) + 0.5 * h * np.exp(-np.abs(v))
    if spec.kernel == "logistic":
        return tau * u + h * np.logaddexp(0.0, -v)
    if spec.kernel == "epanechnikov":
        core = np.where(
            np.abs(v) <= 1.0, 0.75 * v**2 - 0.125 * v**4 + 0.375, np.abs(v)
        )
        return 0.5 * h * core + (tau - 0.5) * u
    raise ValueError(f"unknown kernel {spec.kernel!r}")


def smoothed_loss_derivative(spec, u):
    """Derivative of the smoothed loss: tau - Kbar(-u/h)."""
    u = np.asarray(u, dtype=float)
    return spec.tau - kernel_cdf(spec.kernel, -u / spec.h)
