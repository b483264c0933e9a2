"""Limiting-error (tempering) curves of MDL_lambda.

For lambda <= 1 the variational objective lambda*KL(p||q) + H(p) is minimised at
p = 0, so Q(q) = -lambda*log2(1 - q).  For lambda > 1 the minimiser is the
closed-form p_star and Q coincides with U.  The limiting error is the inverse of
Q evaluated at H(L*).
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit

from .numkit import LN2, check_prob, entropy, entropy_inverse, kl


def _check_lambda(lam, strictly_above_one=False):
    lam = float(lam)
    if math.isnan(lam) or lam < 0.0 or math.isinf(lam):
        raise ValueError(f"lambda must be a finite nonnegative real, got {lam!r}")
    if strictly_above_one and lam <= 1.0:
        raise ValueError(f"this operation needs lambda > 1, got {lam}")
    return lam


def _check_half(q, name="q"):
    q = check_prob(q, name)
    if q > 0.5:
        raise ValueError(f"{name} must lie in [0, 1/2], got {q}")
    return q


def p_star(lam, q):
    """Minimiser of p -> lam*KL(p||q) + H(p) over [0, 1/2], for lam > 1."""
    lam = _check_lambda(lam, strictly_above_one=True)
    q = _check_half(q)
    if q == 0.0:
        return 0.0
    if q == 0.5:
        return 0.5
    # logit(p*) = lam/(lam-1) * logit(q); evaluated in log space to avoid overflow
    s = lam / (lam - 1.0) * (math.log1p(-q) - math.log(q))
    return float(expit(-s))


def big_U(lam, q):
    lam = _check_lambda(lam, strictly_above_one=True)
    q = _check_half(q)
    p = p_star(lam, q)
    return lam * kl(p, q) + entropy(p)


def big_U_prime(lam, q):
    """dU/dq via the envelope theorem."""
    lam = _check_lambda(lam, strictly_above_one=True)
    q = check_prob(q)
    if not 0.0 < q < 0.5:
        raise ValueError(f"q must lie in (0, 1/2), got {q}")
    p = p_star(lam, q)
    return lam / LN2 * ((1.0 - p) / (1.0 - q) - p / q)


def big_U_inverse(lam, t, xtol=1e-14):
    """The q in [0, 1/2] with U(q) = t."""
    lam = _check_lambda(lam, strictly_above_one=True)
    t = float(t)
    if math.isnan(t) or not 0.0 <= t <= 1.0:
        raise ValueError(f"level must lie in [0, 1], got {t!r}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 0.5
    return bisect(lambda q: big_U(lam, q) - t, 0.0, 0.5, xtol=xtol, maxiter=200)


def big_Q(lam, q):
    """min over p in [0, 1/2] of lam*KL(p||q) + H(p)."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        raise ValueError("lambda = 0 is not admitted here")
    q = _check_half(q)
    if lam <= 1.0:
        return -lam * math.log1p(-q) / LN2
    return big_U(lam, q)


def ell(lam, L_star):
    """Worst-case limiting error of MDL_lam against a reference with error L_star."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        raise ValueError("lambda = 0 is the catastrophic regime; the curve is defined for lambda > 0")
    L_star = _check_half(L_star, "L_star")
    h = entropy(L_star)
    if lam <= 1.0:
        return -math.expm1(-h / lam * LN2)
    return big_U_inverse(lam, h)


def critical_noise(lam):
    """Noise level H^-1(lam) at which ell hits 1/2 (only exists for lam < 1)."""
    lam = _check_lambda(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"critical noise exists only for 0 < lambda < 1, got {lam}")
    return entropy_inverse(lam)


def reference_curves(L_star):
    """(H/2 lower bound of GL, H upper bound for the Bayes predictor, 2L(1-L) well-specified)."""
    L_star = _check_half(L_star, "L_star")
    h = entropy(L_star)
    return h / 2.0, h, 2.0 * L_star * (1.0 - L_star)


@dataclass
class TemperingCurve:
    lam: float
    L_star: np.ndarray
    ell: np.ndarray
    gl_lower: np.ndarray = field(default_factory=lambda: np.empty(0))
    gl_bayes_upper: np.ndarray = field(default_factory=lambda: np.empty(0))
    well_specified: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self):
        return len(self.L_star)

    def rows(self):
        return zip(self.L_star, self.ell, self.gl_lower, self.gl_bayes_upper, self.well_specified)


def sweep_curve(lam, grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] < 0.0 or grid[-1] > 0.5):
        raise ValueError("grid must be strictly increasing inside [0, 1/2]")
    ells = np.array([ell(lam, x) for x in grid])
    refs = np.array([reference_curves(x) for x in grid]).reshape(-1, 3)
    return TemperingCurve(float(lam), grid, ells, refs[:, 0], refs[:, 1], refs[:, 2])


def sweep_lambda(L_star, lambdas):
    """ell as a function of lambda at fixed noise level."""
    return np.array([ell(lam, L_star) for lam in lambdas])
