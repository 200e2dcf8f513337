"""Synthetic scenarios, evaluation metrics, and the replication harness.

Rows of the design are drawn from N(0, Sigma) with Sigma_{jk} = 0.7^{|j-k|}
through the stationary AR(1) recursion, which realizes that covariance
exactly.  The slope vector is the fixed 19-entry alternating pattern with ten
nonzeros; support metrics count slopes only, while squared error includes the
intercept.  Replications derive child seeds from the master seed so results
are independent of execution order.
"""

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri
from scipy.stats import t as student_t

from ._lasso import wlasso_cd
from .irw import fit_irw, fit_oracle, relative_improvement
from .kernels import SmoothSpec, check_loss
from .model_selection import cross_validate, default_bandwidth, fold_assignments
from .objective import Dataset, FitResult
from .penalties import FAMILIES, PenaltySpec

NOISE_FAMILIES = ("gaussian", "t", "cauchy", "mixture")

_BETA_HEAD = (1.8, 0.0, 1.6, 0.0, 1.4, 0.0, 1.2, 0.0, 1.0, 0.0,
              -1.0, 0.0, -1.2, 0.0, -1.4, 0.0, -1.6, 0.0, -1.8)

AR_COEF = 0.7
T_DOF = 1.5
MIXTURE_WEIGHT = 0.3
MIXTURE_SD = 5.0

METRIC_NAMES = ("tpr", "fpr", "sse", "model_size", "pred_error")


@dataclass(frozen=True)
class Scenario:
    n: int
    p: int
    noise: str = "gaussian"
    tau: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(
                f"unknown noise family {self.noise!r}; choose from {NOISE_FAMILIES}"
            )
        if self.p < len(_BETA_HEAD):
            raise ValueError(f"p must be >= {len(_BETA_HEAD)}, got {self.p}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")

    @property
    def beta_star(self):
        out = np.zeros(self.p)
        out[: len(_BETA_HEAD)] = _BETA_HEAD
        return out


@dataclass
class MetricsReport:
    tpr: float
    fpr: float
    sse: float
    model_size: int
    pred_error: float = np.nan


def _draw_noise(rng, family, n):
    if family == "gaussian":
        return rng.standard_normal(n)
    if family == "t":
        z = rng.standard_normal(n)
        v = rng.gamma(shape=T_DOF / 2.0, scale=2.0 / T_DOF, size=n)
        return z / np.sqrt(v)
    if family == "cauchy":
        return rng.standard_cauchy(n)
    if family == "mixture":
        wide = rng.random(n) < MIXTURE_WEIGHT
        return np.where(wide, MIXTURE_SD, 1.0) * rng.standard_normal(n)
    raise ValueError(f"unknown noise family {family!r}")


def sample_noise(family, n, seed):
    """n i.i.d. draws from one of the four error laws."""
    return _draw_noise(np.random.default_rng(seed), family, n)


def noise_quantile(family, tau):
    """Analytic tau-quantile of the error law (intercept of the true model)."""
    if family == "gaussian":
        return float(ndtri(tau))
    if family == "t":
        return float(student_t.ppf(tau, T_DOF))
    if family == "cauchy":
        return math.tan(math.pi * (tau - 0.5))
    if family == "mixture":
        if tau == 0.5:
            return 0.0
        cdf = lambda q: (1 - MIXTURE_WEIGHT) * ndtr(q) + MIXTURE_WEIGHT * ndtr(
            q / MIXTURE_SD
        )
        return float(brentq(lambda q: cdf(q) - tau, -60.0, 60.0, xtol=1e-12))
    raise ValueError(f"unknown noise family {family!r}")


def generate(scenario):
    """Draw one dataset; returns (Dataset, true coefficients incl. intercept).

    The true intercept is the analytic tau-quantile of the noise, so the fitted
    vector is comparable to the truth at any quantile level.
    """
    rng = np.random.default_rng(scenario.seed)
    n, p = scenario.n, scenario.p
    g = rng.standard_normal((n, p))
    z = np.empty((n, p))
    z[:, 0] = g[:, 0]
    innov = math.sqrt(1.0 - AR_COEF**2)
    for j in range(1, p):
        z[:, j] = AR_COEF * z[:, j - 1] + innov * g[:, j]
    beta_star = scenario.beta_star
    y = z @ beta_star + _draw_noise(rng, scenario.noise, n)
    x = np.column_stack([np.ones(n), z])
    beta_full = np.concatenate(
        [[noise_quantile(scenario.noise, scenario.tau)], beta_star]
    )
    return Dataset(x, y), beta_full


def metrics(beta_hat, beta_star):
    """Support recovery rates and squared error; slopes define the supports."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if beta_hat.shape != beta_star.shape:
        raise ValueError("coefficient vectors have different lengths")
    hat_s = beta_hat[1:] != 0.0
    true_s = beta_star[1:] != 0.0
    n_true = int(np.sum(true_s))
    n_null = true_s.size - n_true
    return MetricsReport(
        tpr=float(np.sum(hat_s & true_s)) / n_true if n_true else 0.0,
        fpr=float(np.sum(hat_s & ~true_s)) / n_null if n_null else 0.0,
        sse=float(np.sum((beta_hat - beta_star) ** 2)),
        model_size=int(np.sum(hat_s)),
    )


def prediction_error(beta_hat, test, tau):
    """Mean check loss of the residuals on a held-out dataset."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.size != test.p:
        raise ValueError(f"beta has length {beta_hat.size}, expected {test.p}")
    return float(np.mean(check_loss(tau, test.y - test.x @ beta_hat)))


def solve_ls_lasso(data, lam, epsilon=1e-10, max_iter=10000, init=None):
    """Least-squares lasso baseline: (1/2n)||y - X beta||^2 + lam ||slopes||_1."""
    n = data.n
    thresholds = np.full(data.p, float(lam))
    if data.intercept:
        thresholds[0] = 0.0
    beta = np.zeros(data.p) if init is None else np.array(init, dtype=float)
    xf = np.asfortranarray(data.x)
    converged = False
    total_sweeps = 0
    kkt = np.inf
    for _ in range(8):
        sweeps, _ok = wlasso_cd(xf, data.y, 1.0 / n, thresholds, beta,
                                epsilon, max_iter)
        total_sweeps += sweeps
        g = -data.x.T @ (data.y - data.x @ beta) / n
        viol = np.where(
            beta != 0.0,
            np.abs(g + thresholds * np.sign(beta)),
            np.maximum(np.abs(g) - thresholds, 0.0),
        )
        kkt = float(np.max(viol))
        if kkt <= 1e-6:
            converged = True
            break
        epsilon /= 10.0
    obj = 0.5 * float(np.sum((data.y - data.x @ beta) ** 2)) / n
    obj += lam * float(np.sum(np.abs(beta[1:] if data.intercept else beta)))
    return FitResult(beta=beta, objective=obj, n_iter=total_sweeps,
                     converged=converged, kkt_inf=kkt)


def _ls_lasso_cv(data, folds, grid, seed):
    # squared-error validation, mirroring the glmnet-style protocol
    assignments = fold_assignments(data.n, folds, seed)
    errors = np.empty((folds, grid.size))
    for f, test_idx in enumerate(assignments):
        mask = np.ones(data.n, dtype=bool)
        mask[test_idx] = False
        train = Dataset(data.x[mask], data.y[mask], intercept=data.intercept)
        init = None
        for k, lam in enumerate(grid):
            fit = solve_ls_lasso(train, float(lam), init=init)
            init = fit.beta
            resid = data.y[test_idx] - data.x[test_idx] @ fit.beta
            errors[f, k] = float(np.mean(resid**2))
    mean_error = errors.mean(axis=0)
    best = int(np.argmin(mean_error))
    return solve_ls_lasso(data, float(grid[best]))


def _ls_lambda_grid(data, size, min_ratio):
    centered = data.y - np.mean(data.y)
    lam_max = float(np.max(np.abs(data.x[:, 1:].T @ centered))) / data.n
    return np.geomspace(lam_max, min_ratio * lam_max, size)


def parse_method(token):
    """Split a method token into (kind, family, kernel)."""
    if token == "ls-lasso":
        return ("ls-lasso", None, None)
    if token == "oracle":
        return ("oracle", None, "uniform")
    if token.startswith("oracle-"):
        kernel = token[len("oracle-"):]
        return ("oracle", None, kernel)
    if token.startswith("sqr-"):
        body = token[len("sqr-"):]
        family, _, kernel = body.rpartition("-")
        if family == "lasso":
            family = "l1"
        if family not in FAMILIES:
            raise ValueError(f"unknown penalty family in method {token!r}")
        return ("sqr", family, kernel)
    raise ValueError(f"unknown method {token!r}")


@dataclass
class BenchmarkResult:
    scenario: Scenario
    methods: list
    reps: int
    reps_failed: int
    table: dict
    raw: dict
    improvement: np.ndarray = None
    improvement_raw: np.ndarray = None
    failures: list = field(default_factory=list)


def _run_method(token, data, beta_full, test, spec, cv_folds, cv_seed,
                cv_grid_size, cv_min_ratio, n_stages):
    kind, family, kernel = parse_method(token)
    if kind == "ls-lasso":
        grid = _ls_lambda_grid(data, cv_grid_size, cv_min_ratio)
        fit = _ls_lasso_cv(data, cv_folds, grid, cv_seed)
    elif kind == "oracle":
        support = np.concatenate([[0], 1 + np.flatnonzero(beta_full[1:])])
        ospec = dataclasses.replace(spec, kernel=kernel)
        solver = "cd" if kernel == "uniform" else "admm"
        fit = fit_oracle(data, ospec, support, solver=solver)
    else:
        mspec = dataclasses.replace(spec, kernel=kernel)
        solver = "cd" if kernel == "uniform" else "admm"
        cv = cross_validate(data, mspec, family=family, n_stages=n_stages,
                            folds=cv_folds, seed=cv_seed, solver=solver,
                            grid_size=cv_grid_size, min_ratio=cv_min_ratio)
        fit = cv.selected_fit
    report = metrics(fit.beta, beta_full)
    report.pred_error = prediction_error(fit.beta, test, spec.tau)
    return report


def run_benchmark(scenario, methods, reps, master_seed, cv_folds=5,
                  cv_grid_size=30, cv_min_ratio=0.02, n_stages=3,
                  improvement_stages=None, improvement_lambda=None,
                  threads=1, n_test=None):
    """Replicated method comparison; mean and standard error per metric.

    Each replication draws data, test data, and CV folds from child seeds of
    ``master_seed``, tunes every method by cross-validation, and scores it.
    When ``improvement_stages`` is set, a fixed-lambda reweighting run with the
    uniform kernel is added and its per-stage relative improvements averaged.
    """
    if reps < 2:
        raise ValueError(f"need reps >= 2, got {reps}")
    methods = list(methods)
    for token in methods:
        parse_method(token)  # validate early
    n_test = n_test or scenario.n
    h = default_bandwidth(scenario.n, scenario.p, scenario.tau)
    base_spec = SmoothSpec(scenario.tau, h, "uniform")
    if improvement_stages is not None and improvement_lambda is None:
        improvement_lambda = 0.5 * math.sqrt(math.log(scenario.p) / scenario.n)

    def one_rep(r):
        data_seed, test_seed, cv_seed = (
            int(s) for s in np.random.SeedSequence(
                master_seed, spawn_key=(r,)).generate_state(3)
        )
        data, beta_full = generate(dataclasses.replace(scenario, seed=data_seed))
        test, _ = generate(
            dataclasses.replace(scenario, seed=test_seed, n=n_test)
        )
        reports = {}
        for token in methods:
            reports[token] = _run_method(
                token, data, beta_full, test, base_spec, cv_folds, cv_seed,
                cv_grid_size, cv_min_ratio, n_stages,
            )
        curve = None
        if improvement_stages is not None:
            pen = PenaltySpec("scad", improvement_lambda)
            res = fit_irw(data, base_spec, pen, n_stages=improvement_stages)
            curve = np.zeros(improvement_stages - 1)
            if len(res.stages) >= 2:
                seq = relative_improvement(res, beta_full)
                if not seq.zero_denominator:
                    curve[: seq.values.size] = seq.values
        return reports, curve

    results = {}
    failures = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {r: pool.submit(one_rep, r) for r in range(reps)}
            for r, fut in futures.items():
                try:
                    results[r] = fut.result()
                except Exception as exc:
                    failures.append((r, repr(exc)))
    else:
        for r in range(reps):
            try:
                results[r] = one_rep(r)
            except Exception as exc:
                failures.append((r, repr(exc)))

    if len(failures) > 0.1 * reps:
        raise RuntimeError(
            f"{len(failures)} of {reps} replications failed: {failures[:3]}"
        )

    ok_reps = sorted(results)
    raw = {
        token: np.array(
            [
                [getattr(results[r][0][token], name) for name in METRIC_NAMES]
                for r in ok_reps
            ]
        )
        for token in methods
    }
    table = {}
    for token in methods:
        vals = raw[token]
        m = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(len(ok_reps))
        table[token] = {
            name: (float(m[k]), float(se[k])) for k, name in enumerate(METRIC_NAMES)
        }
    improvement = improvement_raw = None
    if improvement_stages is not None:
        improvement_raw = np.vstack([results[r][1] for r in ok_reps])
        improvement = improvement_raw.mean(axis=0)
    return BenchmarkResult(
        scenario=scenario,
        methods=methods,
        reps=reps,
        reps_failed=len(failures),
        table=table,
        raw=raw,
        improvement=improvement,
        improvement_raw=improvement_raw,
        failures=failures,
    )
