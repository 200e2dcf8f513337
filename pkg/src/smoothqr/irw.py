"""Multi-stage reweighted-l1 fitting, the oracle fit, and improvement curves.

Stage 1 solves the plain l1 problem (weights from the zero vector); each later
stage recomputes weights from the previous solution and re-solves, warm-started
there.  When the weight vector stops changing the remaining stages would repeat
exactly, so the loop exits early and records the stage index.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .admm import AdmmConfig, solve_admm
from .cd import CdConfig, solve_cd
from .objective import Dataset, intercept_only_location, penalized_objective
from .penalties import reweight

SOLVERS = ("cd", "admm")


class EmptySupportError(ValueError):
    """The oracle fit needs a nonempty support set."""


@dataclass
class IRWResult:
    stages: list
    weights_per_stage: list
    active_sets: list
    converged_at: int = None

    @property
    def beta(self):
        return self.stages[-1].beta


@dataclass
class ImprovementSequence:
    """Relative error improvements per stage; empty when stage 1 is exact."""

    values: np.ndarray
    zero_denominator: bool = False


def _default_cfg(solver):
    return CdConfig() if solver == "cd" else AdmmConfig()


def _solve_stage(data, spec, weights, cfg, solver, stage):
    solve = solve_cd if solver == "cd" else solve_admm
    try:
        return solve(data, spec, weights, cfg)
    except Exception as exc:
        raise type(exc)(f"stage {stage}: {exc}") from exc


def fit_irw(data, spec, penalty, n_stages=3, solver="cd", solver_cfg=None, init=None):
    """Run the reweighted-l1 procedure for up to ``n_stages`` stages.

    ``init`` seeds the stage-1 solver numerically (useful along a lambda path);
    the stage-1 weights always come from the zero vector.  Without an explicit
    ``init`` the solver starts at the intercept-only fit, which keeps the band
    populated on heavy-tailed data; the minimizer is unaffected.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    if n_stages < 1:
        raise ValueError(f"n_stages must be >= 1, got {n_stages}")
    cfg = solver_cfg or _default_cfg(solver)
    stages = []
    weights_per_stage = []
    active_sets = []
    converged_at = None
    beta_ref = np.zeros(data.p)
    if init is None:
        start = np.zeros(data.p)
        if data.intercept:
            start[0] = intercept_only_location(data.y, spec)
    else:
        start = np.asarray(init, dtype=float)
    for stage in range(1, n_stages + 1):
        weights = reweight(penalty, beta_ref)
        if stage >= 2 and np.array_equal(weights, weights_per_stage[-1]):
            weights_per_stage.append(weights)
            converged_at = stage
            break
        weights_per_stage.append(weights)
        fit = _solve_stage(
            data, spec, weights, dataclasses.replace(cfg, init=start), solver, stage
        )
        stages.append(fit)
        active_sets.append(np.flatnonzero(fit.beta))
        beta_ref = fit.beta
        start = fit.beta
    return IRWResult(stages, weights_per_stage, active_sets, converged_at)


def fit_oracle(data, spec, support, solver="cd", solver_cfg=None):
    """Unpenalized smoothed QR fit restricted to ``support`` coordinates.

    Solves the reduced problem over the support columns only, then scatters the
    coefficients back into a length-p vector with exact zeros elsewhere.
    """
    support = np.unique(np.asarray(list(support), dtype=int))
    if support.size == 0:
        raise EmptySupportError("oracle support is empty")
    if support.min() < 0 or support.max() >= data.p:
        raise ValueError("support indices out of range")
    if data.intercept and 0 not in support:
        raise ValueError("support must include the intercept column 0")
    reduced = Dataset(
        x=data.x[:, support],
        y=data.y,
        intercept=data.intercept and support[0] == 0,
    )
    cfg = solver_cfg or _default_cfg(solver)
    if cfg.init is None and reduced.intercept:
        start = np.zeros(reduced.p)
        start[0] = intercept_only_location(reduced.y, spec)
        cfg = dataclasses.replace(cfg, init=start)
    weights = np.zeros(support.size)
    fit = _solve_stage(reduced, spec, weights, cfg, solver, stage=1)
    beta = np.zeros(data.p)
    beta[support] = fit.beta
    return dataclasses.replace(
        fit,
        beta=beta,
        objective=penalized_objective(data, spec, np.zeros(data.p), beta),
        diagnostics={**fit.diagnostics, "support": support},
    )


def relative_improvement(result, beta_star):
    """Squared-error improvement of each stage, relative to the stage-1 error."""
    if len(result.stages) < 2:
        raise ValueError("need at least two stages to measure improvement")
    beta_star = np.asarray(beta_star, dtype=float)
    errors = [np.sum((fit.beta - beta_star) ** 2) for fit in result.stages]
    if errors[0] == 0.0:
        return ImprovementSequence(np.empty(0), zero_denominator=True)
    values = np.array(
        [(errors[k - 1] - errors[k]) / errors[0] for k in range(1, len(errors))]
    )
    return ImprovementSequence(values)
