"""Hot loops of the lower-bound simulator.

Two exact samplers of the first-occurrence process of an i.i.d. categorical
stream live here:

* ``scan_first_occurrences`` walks the process sequentially (geometric gap to
  the next unseen category, then the category in proportion to its mass) over a
  log-domain sum tree, and can stop early once the description-length cost of
  the current index alone beats the best objective seen.  Compiled with numba.
* ``race_first_occurrences`` uses a different exact description: the discovery
  order of weighted sampling without replacement is the order of independent
  exponential keys E_e / p_e, and given the order the gaps are independent
  geometrics, so the whole process vectorises.  ``race_optimize_pruned`` is its
  compiled, early-stopping twin and backs ``optimize`` when JIT is on.

Indices are carried exactly as integer-valued floats below 2**53 and as log2
afterwards.  Category masses are natural logs.
"""
import math

import numpy as np

from ._jit import JIT_ENABLED, njit

LN2 = math.log(2.0)
EXACT_LIMIT = 2.0 ** 53
LOG_EXACT_GAP = 52.0 * LN2
SMALL_MASS = -40.0 * LN2
LOG_HALF = -LN2


@njit
def desc_len_from_log2(t):
    """log2(i * log2(i)**2 + 10) from t = log2(i); t = -inf encodes i = 0."""
    if t == -np.inf or t == 0.0:
        return math.log2(10.0)
    if t <= 40.0:
        return math.log2(2.0 ** t * t * t + 10.0)
    return t + 2.0 * math.log2(t) + math.log1p(10.0 * 2.0 ** (-t) / (t * t)) / LN2


@njit
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit
def _log2addexp2(a, b):
    return _logaddexp(a * LN2, b * LN2) / LN2


@njit
def _log_neg_log1m(ln_unseen, ln_seen):
    """log(-log(1 - p_U)) given log p_U and log(1 - p_U) computed independently."""
    if ln_unseen > LOG_HALF:
        return math.log(-ln_seen)
    if ln_unseen > SMALL_MASS:
        return math.log(-math.log1p(-math.exp(ln_unseen)))
    # -log(1-x) = x + x^2/2 + ...
    return ln_unseen + 0.5 * math.exp(ln_unseen)


@njit
def sample_binomial_from_logcdf(log_cdf, rng):
    """Inversion: smallest k with log P(X <= k) >= log u."""
    return np.searchsorted(log_cdf, math.log(rng.random()))


@njit
def _tree_build(logp):
    n = logp.shape[0]
    size = 1
    while size < n:
        size *= 2
    tree = np.full(2 * size, -np.inf)
    tree[size:size + n] = logp
    for k in range(size - 1, 0, -1):
        tree[k] = _logaddexp(tree[2 * k], tree[2 * k + 1])
    return tree, size


@njit
def _tree_remove(tree, size, leaf):
    k = leaf + size
    tree[k] = -np.inf
    k //= 2
    while k >= 1:
        tree[k] = _logaddexp(tree[2 * k], tree[2 * k + 1])
        k //= 2


@njit
def _tree_sample(tree, size, log_u):
    t = log_u + tree[1]
    k = 1
    while k < size:
        a = tree[2 * k]
        b = tree[2 * k + 1]
        if b == -np.inf:
            k = 2 * k
        elif a == -np.inf:
            k = 2 * k + 1
        elif t < a:
            k = 2 * k
        else:
            d = a - t
            t = t + math.log1p(-math.exp(d)) if d < 0.0 else -np.inf
            k = 2 * k + 1
    return k - size


@njit
def scan_first_occurrences(logp, lam, offset, feasible_max, budget_log2, rng, out_e, out_log2):
    """Sequential first-occurrence scan with pruning.

    Objective of category e first seen at index i: lam * desc(i) + offset[e],
    for e <= feasible_max.  Stops when the next index exceeds ``budget_log2``,
    when lam * desc(next index) >= best (lam > 0), or when every category with
    positive mass has been seen.  Returns (count, best_obj, best_e, best_log2).
    """
    tree, size = _tree_build(logp)
    ln_seen = -np.inf
    idx = 0.0
    exact = True
    l2 = -np.inf
    best = np.inf
    best_e = -1
    best_l2 = np.inf
    count = 0
    while tree[1] != -np.inf:
        log_u = math.log(rng.random())
        if ln_seen == -np.inf:
            log2_gap = 0.0
            gap = 1.0
        else:
            log_r = math.log(-log_u) - _log_neg_log1m(tree[1], ln_seen)
            if log_r < LOG_EXACT_GAP:
                gap = math.floor(math.exp(log_r)) + 1.0
                log2_gap = math.log2(gap)
            else:
                gap = np.inf
                log2_gap = log_r / LN2
        if exact and gap < EXACT_LIMIT and idx + gap < EXACT_LIMIT:
            idx += gap
            l2 = math.log2(idx)
        else:
            exact = False
            l2 = _log2addexp2(l2, log2_gap)
        if l2 > budget_log2:
            break
        d = desc_len_from_log2(l2)
        if lam > 0.0 and lam * d >= best:
            break
        e = _tree_sample(tree, size, math.log(rng.random()))
        ln_seen = _logaddexp(ln_seen, logp[e])
        _tree_remove(tree, size, e)
        if count < out_e.shape[0]:
            out_e[count] = e
            out_log2[count] = l2
        count += 1
        if e <= feasible_max:
            obj = lam * d + offset[e]
            if obj < best:
                best = obj
                best_e = e
                best_l2 = l2
    return count, best, best_e, best_l2


def desc_len_vec(t):
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, math.log2(10.0))
    small = (t > 0.0) & (t <= 40.0)
    ts = t[small]
    out[small] = np.log2(np.exp2(ts) * ts * ts + 10.0)
    big = t > 40.0
    tb = t[big]
    out[big] = tb + 2.0 * np.log2(tb) + np.log1p(10.0 * np.exp2(-tb) / (tb * tb)) / LN2
    return out


def race_first_occurrences(logp, rng):
    """Vectorised exact sampler; returns (categories, log2 first indices) in index order."""
    logp = np.asarray(logp, dtype=float)
    support = np.flatnonzero(logp > -np.inf)
    keys = np.log(rng.standard_exponential(support.size)) - logp[support]
    order = support[np.argsort(keys, kind="stable")]
    lp = logp[order]
    n = lp.size
    # mass still unseen before each discovery, and mass already seen
    ln_unseen = np.logaddexp.accumulate(lp[::-1])[::-1]
    ln_seen = np.concatenate(([-np.inf], np.logaddexp.accumulate(lp)[:-1]))
    log_u = np.log(rng.random(n))

    lq = np.empty(n)
    hi = ln_unseen > LOG_HALF
    mid = ~hi & (ln_unseen > SMALL_MASS)
    lo = ~hi & ~mid
    with np.errstate(divide="ignore"):
        lq[hi] = np.log(-ln_seen[hi])
    lq[mid] = np.log(-np.log1p(-np.exp(ln_unseen[mid])))
    lq[lo] = ln_unseen[lo] + 0.5 * np.exp(ln_unseen[lo])
    log_r = np.log(-log_u) - lq
    first = ln_seen == -np.inf
    small = log_r < LOG_EXACT_GAP
    gap = np.where(small, np.floor(np.exp(np.minimum(log_r, LOG_EXACT_GAP))) + 1.0, np.inf)
    gap[first] = 1.0
    with np.errstate(divide="ignore"):
        log2_gap = np.where(np.isfinite(gap), np.log2(gap), log_r / LN2)

    cum = np.cumsum(gap)
    inexact = ~np.isfinite(gap) | (cum >= EXACT_LIMIT)
    l2 = np.empty(n)
    j = int(np.argmax(inexact)) if inexact.any() else n
    with np.errstate(divide="ignore"):
        l2[:j] = np.log2(cum[:j])
    if j < n:
        start = l2[j - 1] if j > 0 else -np.inf
        l2[j:] = np.logaddexp2.accumulate(np.concatenate(([start], log2_gap[j:])))[1:]
    return order, l2


def race_optimize(logp, lam, offset, feasible_max, rng):
    """Same contract as the scan's optimisation result, computed without pruning."""
    order, l2 = race_first_occurrences(logp, rng)
    d = desc_len_vec(l2)
    obj = np.where(order <= feasible_max, lam * d + offset[order], np.inf)
    if obj.size == 0 or not np.isfinite(obj).any():
        return order.size, np.inf, -1, np.inf
    k = int(np.argmin(obj))
    return order.size, float(obj[k]), int(order[k]), float(l2[k])


def first_occurrences(logp, budget_log2, rng):
    """(categories, log2 indices) of every first occurrence at index <= 2**budget_log2."""
    logp = np.ascontiguousarray(logp, dtype=float)
    if JIT_ENABLED:
        n = logp.size
        out_e = np.empty(n, dtype=np.int64)
        out_l2 = np.empty(n)
        count, _, _, _ = scan_first_occurrences(logp, 0.0, np.zeros(n), -1, float(budget_log2),
                                                rng, out_e, out_l2)
        return out_e[:count], out_l2[:count]
    order, l2 = race_first_occurrences(logp, rng)
    keep = l2 <= budget_log2
    return order[keep], l2[keep]


@njit
def race_optimize_pruned(logp, lam, offset, feasible_max, rng):
    """Exponential race walked in discovery order, stopping once the index cost alone loses.

    Consumes the generator exactly like ``race_first_occurrences``, so for a
    given seed it reproduces ``race_optimize`` up to rounding.
    """
    n = logp.shape[0]
    ns = 0
    for e in range(n):
        if logp[e] > -np.inf:
            ns += 1
    support = np.empty(ns, dtype=np.int64)
    j = 0
    for e in range(n):
        if logp[e] > -np.inf:
            support[j] = e
            j += 1
    expo = rng.standard_exponential(ns)
    log_u = np.log(rng.random(ns))
    keys = np.log(expo) - logp[support]
    order = support[np.argsort(keys, kind="mergesort")]
    ln_unseen = np.empty(ns)
    acc = -np.inf
    for k in range(ns - 1, -1, -1):
        acc = _logaddexp(acc, logp[order[k]])
        ln_unseen[k] = acc
    ln_seen = -np.inf
    idx = 0.0
    exact = True
    l2 = -np.inf
    best = np.inf
    best_e = -1
    best_l2 = np.inf
    for k in range(ns):
        if ln_seen == -np.inf:
            log2_gap = 0.0
            gap = 1.0
        else:
            log_r = math.log(-log_u[k]) - _log_neg_log1m(ln_unseen[k], ln_seen)
            if log_r < LOG_EXACT_GAP:
                gap = math.floor(math.exp(log_r)) + 1.0
                log2_gap = math.log2(gap)
            else:
                gap = np.inf
                log2_gap = log_r / LN2
        if exact and gap < EXACT_LIMIT and idx + gap < EXACT_LIMIT:
            idx += gap
            l2 = math.log2(idx)
        else:
            exact = False
            l2 = _log2addexp2(l2, log2_gap)
        d = desc_len_from_log2(l2)
        if lam > 0.0 and lam * d >= best:
            break
        e = order[k]
        ln_seen = _logaddexp(ln_seen, logp[e])
        if e <= feasible_max:
            obj = lam * d + offset[e]
            if obj < best:
                best = obj
                best_e = e
                best_l2 = l2
    return best, best_e, best_l2


def optimize(logp, lam, offset, feasible_max, rng):
    """(best objective, best category, log2 index of its first occurrence) over the stream."""
    if JIT_ENABLED:
        best, e, l2 = race_optimize_pruned(logp, float(lam), offset, int(feasible_max), rng)
        return best, int(e), l2
    _, best, e, l2 = race_optimize(logp, float(lam), offset, int(feasible_max), rng)
    return best, e, l2
