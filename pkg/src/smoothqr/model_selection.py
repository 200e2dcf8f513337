"""Bandwidth default, lambda grid construction, and k-fold cross-validation.

Validation error is always the raw check loss on held-out data; the smoothing
bandwidth plays no role in scoring.  Lambda paths are fitted from the largest
value downward with warm starts, and cross-validation ties break toward the
larger (sparser) lambda.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .irw import fit_irw
from .kernels import check_loss
from .objective import Dataset, gradient, intercept_only_location
from .penalties import PenaltySpec


class AllUnpenalizedError(ValueError):
    """A lambda grid needs at least one penalized coordinate."""


@dataclass
class CVResult:
    grid: np.ndarray
    fold_errors: np.ndarray
    mean_error: np.ndarray
    selected_lambda: float
    selected_fit: object


def default_bandwidth(n, p, tau):
    """max(0.05, sqrt(tau (1 - tau)) (log(p) / n)^{1/4})."""
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return max(0.05, math.sqrt(tau * (1.0 - tau)) * (math.log(p) / n) ** 0.25)


def lambda_grid(data, spec, size=50, min_ratio=0.01, unpenalized=frozenset({0})):
    """Descending log-spaced grid from the null-model bound lambda_max."""
    if size < 2:
        raise ValueError(f"grid size must be >= 2, got {size}")
    if not 0.0 < min_ratio < 1.0:
        raise ValueError(f"min_ratio must lie in (0, 1), got {min_ratio}")
    penalized = np.setdiff1d(np.arange(data.p), np.asarray(list(unpenalized), int))
    if penalized.size == 0:
        raise AllUnpenalizedError("no penalized coordinates; lambda_max undefined")
    beta0 = np.zeros(data.p)
    if data.intercept:
        beta0[0] = intercept_only_location(data.y, spec)
    g = gradient(data, spec, beta0)
    lam_max = float(np.max(np.abs(g[penalized])))
    if lam_max <= 0.0:
        raise ValueError("gradient vanishes at the null model; lambda_max is zero")
    return np.geomspace(lam_max, min_ratio * lam_max, size)


def fold_assignments(n, folds, seed):
    """Deterministic fold index sets from a shuffled permutation."""
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def _path_errors(data, spec, family, a, n_stages, grid, unpenalized,
                 solver, solver_cfg, test_x, test_y):
    errs = np.full(len(grid), np.nan)
    init = None
    for k, lam in enumerate(grid):
        pen = PenaltySpec(family, float(lam), a, unpenalized)
        try:
            res = fit_irw(data, spec, pen, n_stages, solver, solver_cfg, init=init)
        except Exception:
            continue  # cell failure: this lambda is marked invalid
        init = res.stages[0].beta
        errs[k] = float(np.mean(check_loss(spec.tau, test_y - test_x @ res.beta)))
    return errs


def cross_validate(data, spec, family="l1", a=None, n_stages=3, folds=5,
                   grid=None, grid_size=50, min_ratio=0.01, seed=0,
                   solver="cd", solver_cfg=None,
                   unpenalized=frozenset({0}), threads=1):
    """k-fold CV over a lambda path; returns the refit at the best lambda."""
    if not 2 <= folds <= data.n:
        raise ValueError(f"folds must lie in [2, n], got {folds}")
    if grid is None:
        grid = lambda_grid(data, spec, size=grid_size, min_ratio=min_ratio,
                           unpenalized=unpenalized)
    grid = np.asarray(grid, dtype=float)
    assignments = fold_assignments(data.n, folds, seed)

    def one_fold(test_idx):
        mask = np.ones(data.n, dtype=bool)
        mask[test_idx] = False
        train = Dataset(data.x[mask], data.y[mask], intercept=data.intercept)
        return _path_errors(train, spec, family, a, n_stages, grid, unpenalized,
                            solver, solver_cfg, data.x[test_idx], data.y[test_idx])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_errors = np.vstack(list(pool.map(one_fold, assignments)))
    else:
        fold_errors = np.vstack([one_fold(idx) for idx in assignments])

    mean_error = np.where(
        np.any(np.isnan(fold_errors), axis=0), np.inf, np.mean(fold_errors, axis=0)
    )
    if not np.any(np.isfinite(mean_error)):
        raise RuntimeError("every lambda failed in cross-validation")
    best = int(np.argmin(mean_error))  # first occurrence = larger lambda on ties
    selected_lambda = float(grid[best])
    pen = PenaltySpec(family, selected_lambda, a, unpenalized)
    refit = fit_irw(data, spec, pen, n_stages, solver, solver_cfg)
    return CVResult(
        grid=grid,
        fold_errors=fold_errors,
        mean_error=mean_error,
        selected_lambda=selected_lambda,
        selected_fit=refit.stages[-1],
    )
