"""Monte-Carlo reproduction of the lower-bound constructions.

The hard instance has one good predictor h_0 with error L* and an infinite
stream h_1, h_2, ... of bad predictors with error L'.  Given the labels, the
per-sample mistakes of distinct predictors are independent, so each bad
predictor's error count is an independent Bin(m, L') draw.  MDL_lambda over the
stream only ever needs, for each error count e, the first index at which it
occurs; the exact minimum over the whole stream is computed from those first
occurrences (see ``_kernels``).

Per-trial generators come from ``SeedSequence([master_seed, m, trial])`` so an
aggregate does not depend on how trials are distributed over workers.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
import multiprocessing as mp

import numpy as np
from scipy.stats import beta

from . import _kernels
from .numkit import (LN2, binomial_log_cdf_all, binomial_log_pmf_all, check_count, check_prob,
                     kl, log_binomial_all)
from .tempering import p_star

GOOD_DESC = math.log2(10.0)
TWO_HYP_DESCS = (math.log2(10.0), math.log2(10.0 / 9.0))


def desc_len_of_index(log2_index):
    """Description length log2(i*log2(i)^2 + 10) of stream index i, given log2(i).

    ``-inf`` encodes index 0, the good predictor, whose prior mass is 0.1.
    """
    t = float(log2_index)
    if math.isnan(t) or t < 0.0 and t != -math.inf:
        raise ValueError(f"log2 index must be >= 0 (or -inf for index 0), got {t!r}")
    return float(_kernels.desc_len_from_log2(t))


@dataclass(frozen=True)
class LambdaSchedule:
    kind: str = "constant"
    value: float = 1.0  # constant lambda, or the coefficient c
    alpha: float = 0.5  # exponent of the power schedule

    KINDS = ("constant", "power", "inverse_log", "linear")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; choose from {self.KINDS}")
        if not self.value >= 0.0 or math.isinf(self.value):
            raise ValueError("schedule coefficient must be finite and >= 0")

    @classmethod
    def constant(cls, lam):
        return cls("constant", float(lam))

    @classmethod
    def power(cls, c=1.0, alpha=0.5):
        return cls("power", float(c), float(alpha))

    @classmethod
    def inverse_log(cls):
        return cls("inverse_log", 1.0)

    @classmethod
    def linear(cls, c=11.0):
        return cls("linear", float(c))

    def __call__(self, m):
        if m < 2:
            raise ValueError("schedules are evaluated for m >= 2")
        if self.kind == "constant":
            return self.value
        if self.kind == "power":
            return self.value * m ** self.alpha
        if self.kind == "inverse_log":
            return 1.0 / math.log2(m)
        return self.value * m


@dataclass(frozen=True)
class HardInstance:
    L_star: float
    L_prime: float
    schedule: LambdaSchedule
    variant: str = "infinite_stream"

    def __post_init__(self):
        check_prob(self.L_star, "L_star")
        check_prob(self.L_prime, "L_prime")
        if self.variant not in ("infinite_stream", "two_hypothesis"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 < self.L_star < 0.5:
            raise ValueError("L_star must lie in (0, 1/2)")
        if self.L_prime < self.L_star:
            raise ValueError("L_prime must be >= L_star")
        limit = 1.0 if self.variant == "infinite_stream" else 0.5
        if self.L_prime >= limit:
            raise ValueError(f"L_prime must be < {limit} for the {self.variant} variant")


@dataclass(frozen=True)
class FirstOccurrence:
    error_count: int
    log2_index: float


@dataclass(frozen=True)
class TrialOutcome:
    m: int
    lambda_m: float
    good_error_count: int
    winning_class: str  # "good", "bad" or "none" (both infeasible)
    winning_objective: float
    good_objective: float
    winning_error_count: int
    population_error: float
    seed: int


@dataclass(frozen=True)
class LimitRow:
    m: int
    lambda_m: float
    trials: int
    frac_bad: float
    ci_low: float
    ci_high: float
    mean_error: float
    infeasible_count: int
    master_seed: int


@lru_cache(maxsize=64)
def _stream_tables(m, p):
    """(natural-log pmf, log2 C(m, e), natural-log cdf) for Bin(m, p)."""
    logp = binomial_log_pmf_all(m, p) * LN2
    log_cdf = binomial_log_cdf_all(m, p) * LN2
    for a in (logp, log_cdf):
        a.setflags(write=False)
    lb = log_binomial_all(m)
    lb.setflags(write=False)
    return logp, lb, log_cdf


def sample_binomial(m, p, rng):
    """Exact Bin(m, p) draw by inversion of the exact CDF."""
    m = check_count(m, "m", minimum=1)
    p = check_prob(p)
    return int(_kernels.sample_binomial_from_logcdf(_stream_tables(m, p)[2], rng))


def first_occurrences_from_masses(probs, budget_log2, rng, log=False):
    """First occurrences of an i.i.d. categorical stream up to index 2**budget_log2."""
    probs = np.asarray(probs, dtype=float)
    with np.errstate(divide="ignore"):
        logp = probs if log else np.log(probs)
    cats, l2 = _kernels.first_occurrences(logp, budget_log2, rng)
    return [FirstOccurrence(int(e), float(t)) for e, t in zip(cats, l2)]


def sample_first_occurrences(m, L_prime, budget, rng):
    """First indices at which each error count appears among Bin(m, L') bad predictors.

    ``budget`` is the largest log2 index worth exploring; output is in index order.
    """
    m = check_count(m, "m", minimum=1)
    L_prime = check_prob(L_prime, "L_prime")
    logp = _stream_tables(m, L_prime)[0]
    cats, l2 = _kernels.first_occurrences(logp, float(budget), rng)
    return [FirstOccurrence(int(e), float(t)) for e, t in zip(cats, l2)]


def _optimize(m, lam, L_prime, rng):
    logp, lb, _ = _stream_tables(m, L_prime)
    return _kernels.optimize(logp, float(lam), lb, m // 2, rng)


def optimize_bad_stream(m, lambda_m, L_prime, rng):
    """Exact min over the whole bad stream of lambda*|h_i| + log2 C(m, e_i), with 2e_i <= m.

    Returns (best objective in bits, its error count).
    """
    m = check_count(m, "m", minimum=1)
    lam = float(lambda_m)
    if math.isnan(lam) or lam < 0.0:
        raise ValueError("lambda_m must be >= 0")
    best, e, _ = _optimize(m, lam, check_prob(L_prime, "L_prime"), rng)
    return best, e


def k_of_m(lam, m, L_prime):
    """log2 of the witness-search horizon k(m) of the lower-bound argument (diagnostic)."""
    m = check_count(m, "m", minimum=1)
    L_prime = check_prob(L_prime, "L_prime")
    if lam <= 1.0:
        # k(m) = 2 sqrt(m) / (1 - L')^m
        return 1.0 + 0.5 * math.log2(m) - m * math.log1p(-L_prime) / LN2
    if not 0.0 < L_prime < 0.5:
        raise ValueError("lambda > 1 branch needs L_prime in (0, 1/2)")
    return m * kl(p_star(lam, L_prime), L_prime)


def _beats(a, b):
    """Lexicographic (objective, desc_len, error_count, id) comparison."""
    return a < b


def run_trial(inst, m, seed):
    m = check_count(m, "m", minimum=2)
    lam = inst.schedule(m)
    rng = np.random.default_rng(seed)
    tables = _stream_tables(m, inst.L_star)
    good_e = int(_kernels.sample_binomial_from_logcdf(tables[2], rng))
    lb = tables[1]
    good_feasible = 2 * good_e <= m
    good_obj = lam * GOOD_DESC + lb[good_e]

    if inst.variant == "two_hypothesis":
        bad_e = int(_kernels.sample_binomial_from_logcdf(_stream_tables(m, inst.L_prime)[2], rng))
        bad_desc = TWO_HYP_DESCS[1]
        bad_obj = lam * bad_desc + lb[bad_e] if 2 * bad_e <= m else math.inf
        bad_id = 1
    else:
        bad_obj, bad_e, bad_l2 = _optimize(m, lam, inst.L_prime, rng)
        bad_desc = desc_len_of_index(bad_l2) if bad_e >= 0 else math.inf
        bad_id = 1 if bad_l2 == 0.0 else 2  # ids only matter in exact ties; any i >= 1 exceeds 0

    good_key = (good_obj if good_feasible else math.inf, GOOD_DESC, good_e, 0)
    bad_key = (bad_obj, bad_desc, bad_e, bad_id)
    if not good_feasible and not math.isfinite(bad_obj):
        cls, obj, err, pop = "none", math.inf, -1, math.nan
    elif _beats(bad_key, good_key):
        cls, obj, err, pop = "bad", bad_obj, bad_e, inst.L_prime
    else:
        cls, obj, err, pop = "good", good_obj, good_e, inst.L_star
    return TrialOutcome(m, lam, good_e, cls, float(obj), float(good_obj), int(err), pop, int(seed))


def trial_seed(master_seed, m, trial):
    ss = np.random.SeedSequence([int(master_seed), int(m), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_chunk(args):
    inst, m, master_seed, start, stop = args
    return [run_trial(inst, m, trial_seed(master_seed, m, t)) for t in range(start, stop)]


def run_trials(inst, m, trials, master_seed, jobs=1):
    """All trials of one sample size, in trial order, regardless of ``jobs``."""
    trials = check_count(trials, "trials", minimum=1)
    jobs = max(1, int(jobs))
    if jobs == 1 or trials < 2:
        return _run_chunk((inst, m, master_seed, 0, trials))
    bounds = np.linspace(0, trials, min(jobs, trials) + 1).astype(int)
    chunks = [(inst, m, master_seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=len(chunks), mp_context=ctx) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [o for part in parts for o in part]


def clopper_pearson(k, n, level=0.95):
    if n == 0:
        return 0.0, 1.0
    a = (1.0 - level) / 2.0
    lo = 0.0 if k == 0 else float(beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1.0 - a, k + 1, n - k))
    return lo, hi


def summarize(inst, m, outcomes, master_seed):
    infeasible = sum(o.winning_class == "none" for o in outcomes)
    n = len(outcomes) - infeasible
    n_bad = sum(o.winning_class == "bad" for o in outcomes)
    frac = n_bad / n if n else math.nan
    lo, hi = clopper_pearson(n_bad, n)
    mean_error = frac * inst.L_prime + (1.0 - frac) * inst.L_star
    return LimitRow(m, inst.schedule(m), len(outcomes), frac, lo, hi, mean_error, infeasible, master_seed)


def estimate_limit(inst, m_grid, trials, master_seed, jobs=1, keep_trials=False):
    """Aggregate rows per m; with ``keep_trials`` also return every TrialOutcome."""
    trials = check_count(trials, "trials", minimum=1)
    rows, detail = [], []
    for m in m_grid:
        outcomes = run_trials(inst, int(m), trials, master_seed, jobs)
        rows.append(summarize(inst, int(m), outcomes, master_seed))
        if keep_trials:
            detail.extend(outcomes)
    return (rows, detail) if keep_trials else rows


def outcome_dict(o):
    return asdict(o)
