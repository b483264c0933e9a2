"""Scalar information-theoretic primitives, all in bits (base-2 logs).

Probabilities are plain floats validated on entry; log-probabilities are base-2
floats in [-inf, 0].  The 0*log(0) = 0 convention is applied by explicit branches.
"""
import math

import numpy as np
from scipy.optimize import bisect
from scipy.special import betaln

LN2 = math.log(2.0)


def check_prob(x, name="p"):
    x = float(x)
    if math.isnan(x) or not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {x!r}")
    return x


def check_count(k, name="k", minimum=0):
    if isinstance(k, (bool, np.bool_)) or int(k) != k:
        raise ValueError(f"{name} must be an integer, got {k!r}")
    k = int(k)
    if k < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {k}")
    return k


def entropy(p):
    """Binary entropy H(p) in bits."""
    p = check_prob(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log1p(-p) / LN2)


def entropy_vec(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    q = p[inner]
    out[inner] = -(q * np.log2(q) + (1.0 - q) * np.log1p(-q) / LN2)
    return out


def entropy_inverse(t, xtol=1e-14):
    """The unique p in [0, 1/2] with H(p) = t (bisection; H is increasing there)."""
    t = float(t)
    if math.isnan(t) or not 0.0 <= t <= 1.0:
        raise ValueError(f"entropy level must lie in [0, 1], got {t!r}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 0.5
    return bisect(lambda p: entropy(p) - t, 0.0, 0.5, xtol=xtol, maxiter=200)


def kl(p, q):
    """Bernoulli KL divergence KL(p || q) in bits; +inf when q is 0 or 1 and p differs."""
    p = check_prob(p)
    q = check_prob(q, "q")
    total = 0.0
    if p > 0.0:
        if q == 0.0:
            return math.inf
        total += p * math.log2(p / q)
    if p < 1.0:
        if q == 1.0:
            return math.inf
        total += (1.0 - p) * (math.log1p(-p) - math.log1p(-q)) / LN2
    # rounding can leave a tiny negative residue near p == q
    return max(total, 0.0)


def kl_vec(p, q):
    """Elementwise KL(p || q) for arrays with 0 < q < 1."""
    p = np.asarray(p, dtype=float)
    q = np.broadcast_to(np.asarray(q, dtype=float), p.shape)
    out = np.zeros_like(p)
    a = p > 0.0
    out[a] += p[a] * np.log2(p[a] / q[a])
    b = p < 1.0
    out[b] += (1.0 - p[b]) * (np.log1p(-p[b]) - np.log1p(-q[b])) / LN2
    return np.maximum(out, 0.0)


def log_binomial(m, k):
    """log2 C(m, k)."""
    m = check_count(m, "m")
    k = check_count(k, "k")
    if k > m:
        raise ValueError(f"k={k} exceeds m={m}")
    if k == 0 or k == m:
        return 0.0
    return float(-(math.log(m + 1) + betaln(k + 1, m - k + 1)) / LN2)


def log_binomial_all(m):
    """Array of log2 C(m, k) for k = 0..m."""
    k = np.arange(m + 1, dtype=float)
    out = -(np.log(m + 1.0) + betaln(k + 1.0, m - k + 1.0)) / LN2
    out[0] = out[-1] = 0.0
    return out


def _log2_pmf_all(m, p):
    k = np.arange(m + 1, dtype=float)
    out = log_binomial_all(m)
    if p == 0.0:
        out[:] = -np.inf
        out[0] = 0.0
    elif p == 1.0:
        out[:] = -np.inf
        out[m] = 0.0
    else:
        out = out + k * math.log2(p) + (m - k) * math.log1p(-p) / LN2
    return out


def binomial_log_pmf_all(m, p):
    """log2 P(Bin(m, p) = k) for every k = 0..m."""
    m = check_count(m, "m")
    return _log2_pmf_all(m, check_prob(p))


def binomial_log_cdf_all(m, p):
    """log2 P(Bin(m, p) <= k) for every k; nondecreasing, last entry exactly 0."""
    out = np.logaddexp2.accumulate(binomial_log_pmf_all(m, p))
    np.minimum(out, 0.0, out=out)
    out[-1] = 0.0
    return out


def _check_k(m, k):
    m = check_count(m, "m")
    k = check_count(k, "k")
    if k > m:
        raise ValueError(f"k={k} exceeds m={m}")
    return m, k


def binomial_log_pmf(m, p, k):
    m, k = _check_k(m, k)
    p = check_prob(p)
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == m else -math.inf
    return log_binomial(m, k) + k * math.log2(p) + (m - k) * math.log1p(-p) / LN2


def binomial_log_cdf(m, p, k):
    m, k = _check_k(m, k)
    p = check_prob(p)
    if k == m:
        return 0.0
    return float(binomial_log_cdf_all(m, p)[k])

