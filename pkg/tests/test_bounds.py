import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdltemper import bounds as B
from mdltemper.numkit import LN2, entropy, kl
from mdltemper.tempering import ell


def mc_term(m, delta):
    return math.sqrt(2 * math.log2(m) ** 2 * math.log2(2 / delta) / m)


class TestConcentration:
    def test_values(self):
        assert B.kl_concentration_epsilon(10, 100, 0.1) == pytest.approx(0.20980140, abs=1e-8)
        assert B.kl_concentration_epsilon(20, 10 ** 6, 0.01) == pytest.approx(4.7575e-5, abs=1e-8)
        m = 1234
        assert B.kl_concentration_epsilon(0, m, 0.2) == pytest.approx(math.log2((m + 1) / 0.1) / m)

    @pytest.mark.parametrize("args", [(1, 0, 0.1), (1, 10, 0.0), (1, 10, 1.0), (-1, 10, 0.1)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            B.kl_concentration_epsilon(*args)

    @given(st.floats(0, 100), st.floats(0, 100), st.integers(1, 10 ** 9), st.floats(1e-6, 0.99))
    def test_monotone(self, d1, d2, m, delta):
        lo, hi = sorted((d1, d2))
        assert B.kl_concentration_epsilon(lo, m, delta) <= B.kl_concentration_epsilon(hi, m, delta)
        assert B.kl_concentration_epsilon(lo, m, delta) >= B.kl_concentration_epsilon(lo, m, min(0.999, delta * 1.5))


class TestMDLUpper:
    def test_small_lambda_formula(self):
        m, d, L = 10 ** 8, 4.0, 0.1
        delta = 1 / math.sqrt(m)
        want = (ell(0.5, L) + 2 * mc_term(m, delta) + math.log2((m + 1) / (delta / 2)) / m + d / m + delta)
        r = B.mdl_upper_bound(0.5, L, d, m)
        assert r.value == pytest.approx(want, rel=1e-12)
        assert not r.vacuous and r.config.up_to_constants

    def test_small_noise_value(self):
        # all correction terms kept: the McDiarmid term alone is about 0.187 at m = 1e6
        m = 10 ** 6
        delta = 1e-3
        want = 0.0 + 2 * mc_term(m, delta) + math.log2((m + 1) / (delta / 2)) / m + delta
        assert B.mdl_upper_bound(0.5, 0.0, 0, m).value == pytest.approx(want, rel=1e-12)

    def test_large_lambda_formula(self):
        m, d, L, lam = 10 ** 10, 4.0, 0.1, 2.0
        delta = 1 / math.sqrt(m)
        slack = mc_term(m, delta) + lam * math.log2((m + 1) / (delta / 2)) / m + lam * d / m
        want = ell(lam, L) + slack / min(0.09, 2 / LN2 * 0.4 ** 2) + delta
        assert B.mdl_upper_bound(lam, L, d, m).value == pytest.approx(want, rel=1e-12)

    def test_vacuous_small_m(self):
        r = B.mdl_upper_bound(2.0, 0.1, 4, 100)
        assert r.vacuous and r.value == 1.0 and r.raw > 1.0

    def test_limit(self):
        assert B.mdl_upper_bound(1, 0.1, 4, 10 ** 12).value == pytest.approx(0.27752, abs=1e-3)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_excess_halves(self, lam):
        excess = [B.mdl_upper_bound(lam, 0.1, 4, 10 ** k).value - ell(lam, 0.1) for k in (6, 9, 12)]
        assert all(e > 0 for e in excess)
        assert excess[1] <= excess[0] / 2 and excess[2] <= excess[1] / 2

    @pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
    def test_nonincreasing_in_m(self, lam):
        vals = [B.mdl_upper_bound(lam, 0.2, 8, 2 ** k).value for k in range(10, 45)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    @given(st.floats(0.05, 5), st.floats(0.0, 0.45), st.floats(0, 50), st.floats(0, 50), st.integers(10, 10 ** 9))
    def test_nondecreasing_in_desc_len(self, lam, L, d1, d2, m):
        lo, hi = sorted((d1, d2))
        assert B.mdl_upper_bound(lam, L, lo, m).value <= B.mdl_upper_bound(lam, L, hi, m).value

    @pytest.mark.parametrize("args", [(1, 0.5, 1, 100), (0.0, 0.1, 1, 100), (1, 0.1, -1, 100), (1, 0.1, 1, 0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            B.mdl_upper_bound(*args)

    def test_config(self):
        cfg = B.BoundConfig(delta=0.01, mcdiarmid_constant=2.0)
        r = B.mdl_upper_bound(1.0, 0.1, 0, 10 ** 6, cfg)
        assert r.delta == 0.01 and r.as_dict()["config"]["mcdiarmid_constant"] == 2.0
        with pytest.raises(ValueError):
            B.BoundConfig(delta=1.5)
        with pytest.raises(ValueError):
            B.BoundConfig(lemmaA1_constant=0.0)


class TestConsistency:
    def test_formula(self):
        m, d, L, lam = 10 ** 9, 3.0, 0.1, 50.0
        delta = 1 / math.sqrt(m)
        slack = mc_term(m, delta) + lam * math.log2((m + 1) / (delta / 2)) / m + lam * d / m + lam / (lam - 1) ** 2
        want = L + (0.5 - L) / (1 - entropy(L)) * slack + delta
        r = B.consistency_bound(lam, L, d, m)
        assert r.value == pytest.approx(want, rel=1e-12) and not r.vacuous

    def test_vacuous(self):
        assert B.consistency_bound(1.5, 0.3, 3, 10 ** 6).vacuous

    def test_needs_lambda_above_one(self):
        with pytest.raises(ValueError):
            B.consistency_bound(1.0, 0.1, 1, 100)


class TestSRM:
    def test_values(self):
        assert B.srm_bound(0, 10 ** 4, B.BoundConfig(delta=0.1)).value == pytest.approx(0.041964, abs=1e-6)
        assert B.srm_bound(10, 10 ** 6, B.BoundConfig(delta=0.1)).value == pytest.approx(0.0058526, abs=1e-7)

    @given(st.floats(0, 100), st.integers(1, 10 ** 8), st.floats(1e-4, 0.5))
    def test_monotone(self, d, m, delta):
        cfg, looser = B.BoundConfig(delta=delta), B.BoundConfig(delta=delta / 2)
        assert B.srm_bound(d, m, cfg).value <= B.srm_bound(d + 1, m, cfg).value
        assert B.srm_bound(d, m, cfg).value <= B.srm_bound(d, m, looser).value


class TestTailBracket:
    def test_value(self):
        br = B.binomial_tail_bracket(20, 0.3, 0.1)
        center = -20 * kl(0.1, 0.3)
        assert center == pytest.approx(-3.356336, abs=1e-6)
        assert (br.upper - br.lower) / 2 == pytest.approx(17.56927, abs=1e-5)
        assert br.contains(math.log2(sum(math.comb(20, j) * 0.3 ** j * 0.7 ** (20 - j) for j in range(3))))

    def test_log_odds_term(self):
        br = B.binomial_tail_bracket(10, 0.8, 0.5)
        assert (br.upper - br.lower) / 2 == pytest.approx(4 * math.log2(11) + 2.0, abs=1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            B.binomial_tail_bracket(10, 0.3, 0.4)
        with pytest.raises(ValueError):
            B.binomial_tail_bracket(0, 0.3, 0.1)


class TestMinBinomial:
    def test_slack(self):
        assert B.min_binomial_slack(0.1, 0.3, 100) == pytest.approx(30.95477403, abs=1e-8)
        assert B.min_binomial_slack(0.1, 0.3, 10) == pytest.approx(18.15965457, abs=1e-8)

    def test_condition_unmet(self):
        res = B.min_binomial_interval(100, 10, 0.3, 0.1)
        assert isinstance(res, B.ConditionUnmet) and res.status == "condition-unmet"

    def test_zero_certificate(self):
        res = B.min_binomial_interval(None, 10, 0.3, 0.1, log2_r=40)
        assert isinstance(res, B.ZeroCertificate)
        assert kl(0, 0.3) == pytest.approx(0.51457317, abs=1e-8)
        assert res.threshold > kl(0, 0.3)

    def test_interval(self):
        res = B.min_binomial_interval(None, 200, 0.3, 0.1, log2_r=64)
        assert isinstance(res, B.KLInterval)
        slack = B.min_binomial_slack(0.1, 0.3, 200)
        assert res.lower == pytest.approx((64 - slack) / 200) and res.upper == pytest.approx((64 + slack) / 200)

    def test_rejects(self):
        with pytest.raises(ValueError):
            B.min_binomial_interval(10, 10, 0.0, 0.1)
        with pytest.raises(ValueError):
            B.min_binomial_interval(0, 10, 0.3, 0.1)
        with pytest.raises(ValueError):
            B.KLInterval(1.0, 0.0)
