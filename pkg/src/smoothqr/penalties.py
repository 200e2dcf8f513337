"""Concave penalty derivatives and the per-coordinate weights they induce.

Each family is specified through the derivative of its penalty, scaled so that
the weight starts at ``lam`` for small coefficients and never exceeds it.  The
folded-concave families (scad, mcp, capped-l1) redescend to zero, which is what
removes the shrinkage bias on strong signals during reweighting.
"""

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("l1", "scad", "mcp", "capped-l1")

# comparable effective redescent ranges across families
DEFAULT_A = {"scad": 3.7, "mcp": 3.0, "capped-l1": 3.0}


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family with level ``lam``, concavity ``a``, and exempt coords.

    Coordinate 0 (the intercept) is unpenalized by default.
    """

    family: str
    lam: float
    a: float = None
    unpenalized: frozenset = field(default_factory=lambda: frozenset({0}))

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown penalty family {self.family!r}; choose from {FAMILIES}"
            )
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.a is None:
            object.__setattr__(self, "a", DEFAULT_A.get(self.family, 1.0))
        if self.family == "scad" and not self.a > 2.0:
            raise ValueError(f"scad requires a > 2, got {self.a}")
        if self.family in ("mcp", "capped-l1") and not self.a >= 1.0:
            raise ValueError(f"{self.family} requires a >= 1, got {self.a}")
        object.__setattr__(self, "unpenalized", frozenset(self.unpenalized))


def penalty_derivative(spec, t):
    """Weight q'_lam(t) at coefficient magnitude t >= 0.

    Nonincreasing in t, bounded by [0, lam]; the l1 family is the constant lam.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("penalty derivative is defined for t >= 0 only")
    lam, a = spec.lam, spec.a
    if spec.family == "l1":
        return np.full_like(t, lam)
    if spec.family == "scad":
        tail = np.maximum(a * lam - t, 0.0) / (a - 1.0)
        return np.where(t <= lam, lam, tail)
    if spec.family == "mcp":
        return np.maximum(lam - t / a, 0.0)
    if spec.family == "capped-l1":
        # closed at the breakpoint: weight lam for t <= a*lam/2
        return lam * (t <= 0.5 * a * lam)
    raise ValueError(f"unknown penalty family {spec.family!r}")


def reweight(spec, beta):
    """Per-coordinate weights q'_lam(|beta_j|), zeroed on the exempt set."""
    beta = np.asarray(beta, dtype=float)
    weights = penalty_derivative(spec, np.abs(beta))
    for j in spec.unpenalized:
        if j < weights.size:
            weights[j] = 0.0
    return weights
