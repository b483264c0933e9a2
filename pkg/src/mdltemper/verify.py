"""Invariant suites behind ``mdltemper verify``.

Each suite returns a :class:`SuiteResult`.  Oracles here are written directly
against numpy so that a fault in ``numkit`` shows up as a disagreement rather
than being reproduced on both sides.
"""
import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, numkit, simlab, tempering


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _h2(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        b = np.where(p < 1, -(1 - p) * np.log2(np.where(p < 1, 1 - p, 1.0)), 0.0)
    return a + b


def _kl2(p, q):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0) / q), 0.0)
        b = np.where(p < 1, (1 - p) * np.log2(np.where(p < 1, 1 - p, 1.0) / (1 - q)), 0.0)
    return a + b


def brute_force_q(lam, q, points=20001):
    """min over p in [0, 1/2] of lam*KL(p||q) + H(p): dense grid, then a bounded local polish."""
    from scipy.optimize import minimize_scalar

    grid = np.linspace(0.0, 0.5, points)
    vals = lam * _kl2(grid, q) + _h2(grid)
    k = int(np.argmin(vals))
    best = float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, points - 1)]
    if hi > lo:
        f = lambda p: float(lam * _kl2(p, q) + _h2(p))
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        best = min(best, float(res.fun))
    return best


QORACLE_LAMBDAS = (0.1, 0.3, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0)
QORACLE_QS = tuple(np.round(np.arange(1, 50) / 100.0, 2))


def suite_variational_oracle(fast=False, tol=1e-6):
    qs = QORACLE_QS[::6] if fast else QORACLE_QS
    worst = 0.0
    for lam in QORACLE_LAMBDAS:
        for q in qs:
            worst = max(worst, abs(tempering.big_Q(lam, q) - brute_force_q(lam, q)))
    return worst <= tol, f"max |Q - grid min| = {worst:.3g} over {len(QORACLE_LAMBDAS)}x{len(qs)} points"


LEMMA_LAMBDAS = (1.01, 1.1, 2.0, 5.0, 50.0)


def suite_entropy_gap(fast=False):
    """U(q) <= H(q) < U(q) + lam/(lam-1)^2 on a (lambda, q) grid."""
    qs = np.arange(1, 500) / 1000.0
    if fast:
        qs = qs[::10]
    worst = math.inf
    for lam in LEMMA_LAMBDAS:
        for q in qs:
            u, h = tempering.big_U(lam, q), float(_h2(q))
            if u > h + 1e-12:
                return False, f"U exceeds H at lambda={lam}, q={q}"
            worst = min(worst, u + lam / (lam - 1.0) ** 2 - h)
    return worst > 0.0, f"min margin {worst:.3g} over {len(LEMMA_LAMBDAS)}x{len(qs)} points"


def suite_critical_identity(fast=False, tol=1e-6):
    worst = 0.0
    for lam in (0.1, 0.3, 0.5, 0.8):
        worst = max(worst, abs(tempering.ell(lam, tempering.critical_noise(lam)) - 0.5))
    return worst <= tol, f"max |ell(lam, H^-1(lam)) - 1/2| = {worst:.3g}"


def suite_stirling_gap(fast=False, max_m=200):
    top = 60 if fast else max_m
    bad = 0
    for m in range(1, top + 1):
        cap = math.log2(m + 1)
        for k in range(m + 1):
            gap = m * numkit.entropy(k / m) - math.log2(math.comb(m, k))
            if not -1e-9 <= gap <= cap + 1e-9:
                bad += 1
    return bad == 0, f"{bad} violations for m <= {top}"


def _exact_log2_cdf(n, p, k):
    # independent of numkit: float sum of exact binomial coefficients
    terms = [math.comb(n, j) * p ** j * (1 - p) ** (n - j) for j in range(k + 1)]
    return math.log2(math.fsum(terms))


def suite_tail_bracket(fast=False):
    ns = range(1, 21) if fast else range(1, 61)
    ps = np.round(np.arange(1, 20) * 0.05, 2)
    bad = checked = 0
    for n in ns:
        for p in ps:
            for k in range(int(math.floor(p * n + 1e-9)) + 1):
                a = k / n
                if a > p:
                    continue
                lo_hi = bounds.binomial_tail_bracket(n, float(p), a)
                exact = _exact_log2_cdf(n, float(p), k)
                checked += 1
                if not lo_hi.lower - 1e-9 <= exact <= lo_hi.upper + 1e-9:
                    bad += 1
                # the closed-form center must also agree with an independent KL
                if abs(lo_hi.lower + lo_hi.upper + 2 * n * float(_kl2(a, p))) > 1e-6 * max(1, n):
                    bad += 1
    return bad == 0, f"{bad} violations in {checked} (n, p, a) cases"


def coverage_parameter_sets():
    """20 (m, p, log2 r, delta) settings where the min-of-binomials slack is below log2 r."""
    sets = []
    for m in (8, 16, 32, 64, 128):
        for p in (0.2, 0.5):
            for log2_r in (48.0, 64.0):
                delta = 0.1
                if bounds.min_binomial_slack(delta, p, m) < log2_r:
                    sets.append((m, p, log2_r, delta))
    return sets


def coverage_trial(m, p, log2_r, delta, rng):
    """Did the guaranteed event hold for one draw of the minimum of 2**log2_r binomials?"""
    res = bounds.min_binomial_interval(None, m, p, delta, log2_r=log2_r)
    occ = simlab.sample_first_occurrences(m, p, log2_r, rng)
    z = min(o.error_count for o in occ) / m
    if isinstance(res, bounds.ZeroCertificate):
        return z == 0.0
    if isinstance(res, bounds.KLInterval):
        return z < p and res.contains(numkit.kl(z, p))
    return True


def suite_min_coverage(fast=False, trials=1000, seed=20240601):
    sets = coverage_parameter_sets()
    if fast:
        sets, trials = sets[::5], 100
    worst = math.inf
    for j, (m, p, log2_r, delta) in enumerate(sets):
        ss = np.random.SeedSequence([seed, j])
        hits = sum(coverage_trial(m, p, log2_r, delta, np.random.default_rng(s))
                   for s in ss.spawn(trials))
        worst = min(worst, hits / trials - (1.0 - delta - 0.03))
    return worst >= 0.0, f"{len(sets)} settings, min coverage margin {worst:.3g}"


def tv_distance(counts, probs):
    counts = np.asarray(counts, dtype=float)
    return 0.5 * float(np.abs(counts / counts.sum() - np.asarray(probs)).sum())


def min_of_three_tv(trials, seed=7):
    """TV between the lazy sampler's min of 3 Bin(2, 1/2) and the exact law."""
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    counts = np.zeros(3)
    for _ in range(trials):
        occ = simlab.sample_first_occurrences(2, 0.5, math.log2(3), rng)
        counts[min(o.error_count for o in occ)] += 1
    # P(min >= k) = P(X >= k)^3 with P(X>=0,1,2) = 1, 3/4, 1/4
    exact = np.array([1 - 27 / 64, 27 / 64 - 1 / 64, 1 / 64])
    return tv_distance(counts, exact), counts


def suite_samplers(fast=False):
    n = 10_000 if fast else 100_000
    rng = np.random.default_rng(11)
    draws = np.array([simlab.sample_binomial(2, 0.5, rng) for _ in range(n)])
    tv_bin = tv_distance(np.bincount(draws, minlength=3), [0.25, 0.5, 0.25])
    tv_min, _ = min_of_three_tv(n)
    ok = tv_bin <= 0.01 and tv_min <= 0.01
    return ok, f"TV binomial {tv_bin:.4f}, TV min-of-3 {tv_min:.4f} ({n} draws each)"


def prior_mass(n=10**6):
    """Partial prior sum over i <= n plus an integral bound on the tail."""
    i = np.arange(2, n + 1, dtype=float)
    partial = 0.1 + 0.1 + float(np.sum(1.0 / (i * np.log2(i) ** 2 + 10.0)))  # i = 0, 1 then i >= 2
    tail = math.log(2.0) / math.log2(n)  # integral of dx / (x log2^2 x) from n to infinity
    return partial, tail


def suite_prior(fast=False):
    partial, tail = prior_mass(10**5 if fast else 10**6)
    return partial + tail <= 1.0, f"partial sum {partial:.4f} + tail {tail:.4f} <= 1"


SUITES = (
    ("variational oracle", suite_variational_oracle),
    ("entropy gap of U", suite_entropy_gap),
    ("critical noise identity", suite_critical_identity),
    ("Stirling gap", suite_stirling_gap),
    ("binomial tail bracket", suite_tail_bracket),
    ("min-of-binomials coverage", suite_min_coverage),
    ("sampler TV", suite_samplers),
    ("prior validity", suite_prior),
)


def run_all(fast=False, names=None):
    out = []
    for name, fn in SUITES:
        if names and name not in names:
            continue
        t = time.perf_counter()
        try:
            ok, detail = fn(fast=fast)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(SuiteResult(name, bool(ok), detail, time.perf_counter() - t))
    return out


def format_report(results):
    width = max(len(r.name) for r in results)
    lines = [f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.seconds:6.2f}s  {r.detail}"
             for r in results]
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} suites passed")
    return "\n".join(lines)
