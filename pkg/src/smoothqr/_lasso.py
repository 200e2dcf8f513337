"""Shared numba kernel for weighted-l1 quadratic (lasso) coordinate descent.

Solves min_beta (c/2) ||v - X beta||_2^2 + sum_j t_j |beta_j| with
per-coordinate thresholds t_j >= 0.  Used as the ADMM beta-subproblem and as
the least-squares lasso baseline.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def soft_threshold_scalar(a, b):
    if a > b:
        return a - b
    if a < -b:
        return a + b
    return 0.0


@njit(cache=True, nogil=True)
def wlasso_cd(x, v, c, t, beta, eps, max_iter):
    """In-place CD on the weighted lasso; returns (n_sweeps, converged).

    x must be Fortran-ordered so column slices are contiguous.
    """
    n, p = x.shape
    r = v - x @ beta
    col_sq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += x[i, j] * x[i, j]
        col_sq[j] = s
    for sweep in range(1, max_iter + 1):
        max_step = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            bj = beta[j]
            rho_j = 0.0
            for i in range(n):
                rho_j += x[i, j] * r[i]
            a = bj + rho_j / col_sq[j]
            new = soft_threshold_scalar(a, t[j] / (c * col_sq[j]))
            d = new - bj
            if d != 0.0:
                beta[j] = new
                for i in range(n):
                    r[i] -= x[i, j] * d
                step = abs(d)
                if step > max_step:
                    max_step = step
        if max_step <= eps:
            return sweep, True
    return max_iter, False
