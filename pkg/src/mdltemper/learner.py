"""MDL_lambda and SRM selection over explicit hypothesis tables.

Empirical errors are carried as integer counts so the L_S <= 1/2 feasibility
test is exact (2*e <= m).  Ties break on smaller description length, then
smaller error count, then smaller id.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .numkit import check_count, entropy, log_binomial

KRAFT_SLACK = 1e-9


class NoFeasibleHypothesis(ValueError):
    pass


@dataclass(frozen=True)
class Objective:
    exact: float
    approx: float

    @property
    def gap(self):
        return self.approx - self.exact


@dataclass(frozen=True)
class HypothesisTable:
    ids: np.ndarray
    desc_len: np.ndarray
    error_count: np.ndarray
    m: int

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        desc = np.asarray(self.desc_len, dtype=float)
        errs = np.asarray(self.error_count, dtype=np.int64)
        m = check_count(self.m, "m", minimum=1)
        if not (ids.shape == desc.shape == errs.shape) or ids.ndim != 1 or ids.size == 0:
            raise ValueError("ids, desc_len and error_count must be equal-length nonempty 1-D")
        if np.unique(ids).size != ids.size:
            raise ValueError("hypothesis ids must be unique")
        if np.any(~np.isfinite(desc)) or np.any(desc < 0):
            raise ValueError("description lengths must be finite and >= 0")
        if np.any(errs < 0) or np.any(errs > m):
            raise ValueError(f"error counts must lie in [0, {m}]")
        kraft = float(np.sum(np.exp2(-desc)))
        if kraft > 1.0 + KRAFT_SLACK:
            raise ValueError(f"prior violates Kraft's inequality (sum 2^-|h| = {kraft:.6g})")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "desc_len", desc)
        object.__setattr__(self, "error_count", errs)
        object.__setattr__(self, "m", m)

    def __len__(self):
        return self.ids.size

    @classmethod
    def from_rows(cls, rows, m):
        ids, desc, errs = zip(*rows) if rows else ((), (), ())
        return cls(np.array(ids), np.array(desc, dtype=float), np.array(errs), m)

    @classmethod
    def from_csv(cls, path, m):
        """Read columns id, desc_len_bits, error_count."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            rows = [(int(r["id"]), float(r["desc_len_bits"]), int(r["error_count"])) for r in reader]
        return cls.from_rows(rows, m)


def objective(lam, desc_len, error_count, m):
    """Exact two-part code length J and its entropy approximation J~ (bits)."""
    m = check_count(m, "m", minimum=1)
    e = check_count(error_count, "error_count")
    if e > m:
        raise ValueError(f"error_count={e} exceeds m={m}")
    prior = float(lam) * float(desc_len)
    return Objective(prior + log_binomial(m, e), prior + m * entropy(e / m))


def _pick(scores, table, candidates):
    # lexicographic: score, desc_len, error_count, id
    order = np.lexsort((table.ids[candidates], table.error_count[candidates],
                        table.desc_len[candidates], scores[candidates]))
    return int(table.ids[candidates[order[0]]])


def mdl_scores(lam, table, use_exact=True):
    m = table.m
    if use_exact:
        data = np.array([log_binomial(m, int(e)) for e in table.error_count])
    else:
        data = m * np.array([entropy(int(e) / m) for e in table.error_count])
    return float(lam) * table.desc_len + data


def mdl_select(lam, table, use_exact=True):
    lam = float(lam)
    if math.isnan(lam) or lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam!r}")
    feasible = np.flatnonzero(2 * table.error_count <= table.m)
    if feasible.size == 0:
        raise NoFeasibleHypothesis("no hypothesis has empirical error <= 1/2")
    return _pick(mdl_scores(lam, table, use_exact), table, feasible)


def srm_select(table):
    scores = table.error_count / table.m + np.sqrt(table.desc_len / table.m)
    return _pick(scores, table, np.arange(len(table)))
