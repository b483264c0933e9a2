"""Finite-sample guarantees for MDL_lambda and SRM, and binomial-tail brackets.

The unnamed absolute constants of the asymptotic statements are exposed in
:class:`BoundConfig`; every bound output is therefore "up to constants".  Values
above 1 are clamped and flagged vacuous rather than rejected.
"""
import math
from dataclasses import asdict, dataclass

from .numkit import LN2, check_count, check_prob, entropy, kl
from .tempering import _check_lambda, ell


@dataclass(frozen=True)
class BoundConfig:
    delta: float | None = None  # None -> 1/sqrt(m)
    mcdiarmid_constant: float = 1.0
    lemmaA1_constant: float = 0.09
    srm_constant: float = 1.0
    up_to_constants: bool = True

    def __post_init__(self):
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        for name in ("mcdiarmid_constant", "lemmaA1_constant", "srm_constant"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def delta_for(self, m):
        return self.delta if self.delta is not None else 1.0 / math.sqrt(m)


@dataclass(frozen=True)
class BoundResult:
    value: float
    raw: float
    vacuous: bool
    delta: float
    config: BoundConfig

    def __float__(self):
        return self.value

    def as_dict(self):
        d = {"value": self.value, "raw": self.raw, "vacuous": self.vacuous, "delta": self.delta}
        d["config"] = asdict(self.config)
        return d


@dataclass(frozen=True)
class KLInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("interval lower end exceeds upper end")

    def contains(self, x):
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class ZeroCertificate:
    """The minimum of the binomials is 0 with probability >= 1 - delta."""
    delta: float
    slack: float
    threshold: float  # (log2 r - slack) / m, exceeds KL(0 || p)


@dataclass(frozen=True)
class ConditionUnmet:
    """The slack is not below log2 r, so the min-of-binomials statement is silent."""
    slack: float
    log2_r: float
    status: str = "condition-unmet"


def _clamp(raw, delta, cfg, vacuous=False):
    vacuous = vacuous or raw >= 1.0
    return BoundResult(min(max(raw, 0.0), 1.0), raw, vacuous, delta, cfg)


def _check_m(m):
    return check_count(m, "m", minimum=1)


def _check_desc(desc_len):
    desc_len = float(desc_len)
    if math.isnan(desc_len) or desc_len < 0.0:
        raise ValueError(f"description length must be >= 0 bits, got {desc_len!r}")
    return desc_len


def _check_delta(delta):
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return delta


def kl_concentration_epsilon(desc_len, m, delta):
    """Uniform KL radius (|h| + log2((m+1)/(delta/2))) / m."""
    desc_len = _check_desc(desc_len)
    m = _check_m(m)
    delta = _check_delta(delta)
    return (desc_len + math.log2((m + 1) / (delta / 2.0))) / m


def _mcdiarmid_term(m, delta):
    lm = math.log2(m)
    return math.sqrt(2.0 * lm * lm * math.log2(2.0 / delta) / m)


def mdl_upper_bound(lam, L_star, desc_len, m, cfg=None):
    """Explicit-constant form of the agnostic upper bound on E[L(MDL_lam(S))]."""
    cfg = cfg or BoundConfig()
    lam = _check_lambda(lam)
    if lam == 0.0:
        raise ValueError("lambda must be > 0")
    L_star = check_prob(L_star, "L_star")
    if L_star >= 0.5:
        raise ValueError(f"L_star must be < 1/2, got {L_star}")
    desc_len = _check_desc(desc_len)
    m = _check_m(m)
    delta = cfg.delta_for(m)
    C = cfg.mcdiarmid_constant
    limit = ell(lam, L_star)
    conc = math.log2((m + 1) / (delta / 2.0)) / m
    if lam <= 1.0:
        raw = limit + C / lam * _mcdiarmid_term(m, delta) + conc + desc_len / m + delta
        return _clamp(raw, delta, cfg)
    slack = C * _mcdiarmid_term(m, delta) + lam * conc + lam * desc_len / m
    slope = min(cfg.lemmaA1_constant, 2.0 / LN2 * (L_star - 0.5) ** 2)
    raw = limit + slack / slope + delta
    # outside slack < (1 - H)/2 the inversion step does not apply and the bound is vacuous
    return _clamp(raw, delta, cfg, vacuous=slack >= 0.5 * (1.0 - entropy(L_star)))


def consistency_bound(lam, L_star, desc_len, m, cfg=None):
    """Explicit-constant form of the large-lambda guarantee L* + O(...)."""
    cfg = cfg or BoundConfig()
    lam = _check_lambda(lam, strictly_above_one=True)
    L_star = check_prob(L_star, "L_star")
    if L_star >= 0.5:
        raise ValueError(f"L_star must be < 1/2, got {L_star}")
    desc_len = _check_desc(desc_len)
    m = _check_m(m)
    delta = cfg.delta_for(m)
    h = entropy(L_star)
    slack = (cfg.mcdiarmid_constant * _mcdiarmid_term(m, delta)
             + lam * math.log2((m + 1) / (delta / 2.0)) / m
             + lam * desc_len / m
             + lam / (lam - 1.0) ** 2)
    raw = L_star + (0.5 - L_star) / (1.0 - h) * slack + delta
    return _clamp(raw, delta, cfg, vacuous=h + slack > 1.0)


def srm_bound(desc_len, m, cfg=None):
    """Excess-risk radius of SRM, sqrt((|h| + log2((m+1)/(delta/2))) / m)."""
    cfg = cfg or BoundConfig()
    desc_len = _check_desc(desc_len)
    m = _check_m(m)
    delta = cfg.delta_for(m)
    raw = cfg.srm_constant * math.sqrt(kl_concentration_epsilon(desc_len, m, delta))
    return _clamp(raw, delta, cfg)


def _positive_log_odds(p):
    if p == 0.0:
        return 0.0
    return max(0.0, math.log2(p / (1.0 - p)))


def binomial_tail_bracket(n, p, a):
    """Bracket on log2 P(Bin(n,p)/n <= a): -n KL(a||p) +- (4 log2(n+1) + [log2 p/(1-p)]_+)."""
    n = check_count(n, "n", minimum=1)
    p = check_prob(p)
    a = check_prob(a, "a")
    if p >= 1.0:
        raise ValueError("p must be < 1")
    if a > p:
        raise ValueError(f"a={a} exceeds p={p}")
    center = -n * kl(a, p)
    slack = 4.0 * math.log2(n + 1) + _positive_log_odds(p)
    return KLInterval(center - slack, center + slack)


def min_binomial_slack(delta, p, m):
    """Slack log2(2/delta) + 4 log2(m+1) + [log2 p/(1-p)]_+ of the min-of-binomials interval."""
    return math.log2(2.0 / delta) + 4.0 * math.log2(m + 1) + _positive_log_odds(p)


def min_binomial_interval(r, m, p, delta, log2_r=None):
    """KL interval for the scaled minimum Z of r i.i.d. Bin(m, p)/m.

    Pass ``log2_r`` instead of ``r`` for astronomically large r.  Returns a
    :class:`KLInterval` (Z < p and KL(Z||p) inside, w.p. >= 1 - delta), a
    :class:`ZeroCertificate`, or :class:`ConditionUnmet`.
    """
    m = _check_m(m)
    p = check_prob(p)
    if p in (0.0, 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    delta = _check_delta(delta)
    if log2_r is None:
        r = check_count(r, "r", minimum=1)
        log2_r = math.log2(r)
    log2_r = float(log2_r)
    slack = min_binomial_slack(delta, p, m)
    if slack >= log2_r:
        return ConditionUnmet(slack, log2_r)
    lower = (log2_r - slack) / m
    if kl(0.0, p) < lower:
        return ZeroCertificate(delta, slack, lower)
    return KLInterval(lower, (log2_r + slack) / m)
