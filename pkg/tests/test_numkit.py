import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdltemper import numkit

mpmath.mp.dps = 40
probs = st.floats(0.0, 1.0, allow_nan=False)


def mp_entropy(p):
    p = mpmath.mpf(p)
    if p in (0, 1):
        return mpmath.mpf(0)
    return -(p * mpmath.log(p, 2) + (1 - p) * mpmath.log1p(-p) / mpmath.log(2))


def mp_kl(p, q):
    p, q = mpmath.mpf(p), mpmath.mpf(q)
    out = mpmath.mpf(0)
    if p > 0:
        out += p * mpmath.log(p / q, 2)
    if p < 1:
        out += (1 - p) * (mpmath.log1p(-p) - mpmath.log1p(-q)) / mpmath.log(2)
    return out


def exact_cdf(m, p, k):
    p = Fraction(p)
    return sum(math.comb(m, j) * p ** j * (1 - p) ** (m - j) for j in range(k + 1))


class TestEntropy:
    def test_values(self):
        assert numkit.entropy(0.5) == 1.0
        assert numkit.entropy(0.0) == 0.0 == numkit.entropy(1.0)
        assert numkit.entropy(0.25) == pytest.approx(0.81127812, abs=1e-8)

    @pytest.mark.parametrize("p", [1e-300, 1e-12, 0.01, 0.1, 0.3, 0.5, 0.77, 1 - 1e-9])
    def test_against_mpmath(self, p):
        assert numkit.entropy(p) == pytest.approx(float(mp_entropy(p)), rel=1e-13, abs=1e-300)

    def test_symmetry_on_grid(self):
        grid = np.arange(1001) / 1000
        assert np.allclose(numkit.entropy_vec(grid), numkit.entropy_vec(1 - grid), atol=1e-12, rtol=0)

    @given(probs, probs, st.floats(0.0, 1.0))
    def test_concave(self, a, b, t):
        mid = numkit.entropy(t * a + (1 - t) * b)
        assert mid >= t * numkit.entropy(a) + (1 - t) * numkit.entropy(b) - 1e-12

    @given(probs)
    def test_vec_matches_scalar(self, p):
        assert numkit.entropy_vec(np.array([p]))[0] == pytest.approx(numkit.entropy(p), abs=1e-15)

    @pytest.mark.parametrize("bad", [-0.1, 1.5, math.nan])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            numkit.entropy(bad)


class TestEntropyInverse:
    def test_value(self):
        assert numkit.entropy_inverse(0.5) == pytest.approx(0.11002786, abs=1e-8)

    def test_endpoints(self):
        assert numkit.entropy_inverse(0.0) == 0.0
        assert numkit.entropy_inverse(1.0) == 0.5

    @given(st.floats(0.0, 0.5))
    def test_round_trip(self, p):
        assert numkit.entropy_inverse(numkit.entropy(p)) == pytest.approx(p, abs=1e-9)

    def test_rejects(self):
        with pytest.raises(ValueError):
            numkit.entropy_inverse(1.2)


class TestKL:
    def test_value(self):
        assert numkit.kl(0.1, 0.25) == pytest.approx(0.10453816, abs=1e-8)

    def test_conventions(self):
        assert numkit.kl(0.0, 0.5) == 1.0
        assert numkit.kl(0.3, 0.0) == math.inf
        assert numkit.kl(0.3, 1.0) == math.inf
        assert numkit.kl(0.0, 0.0) == 0.0

    @pytest.mark.parametrize("p,q", [(0.1, 0.3), (0.0, 0.3), (0.9, 0.2), (1e-8, 0.5), (0.4999, 0.5)])
    def test_against_mpmath(self, p, q):
        assert numkit.kl(p, q) == pytest.approx(float(mp_kl(p, q)), rel=1e-10, abs=1e-15)

    def test_nonnegative_grid(self):
        g = (np.arange(500) + 0.5) / 500
        P, Q = np.meshgrid(g, g, indexing="ij")
        vals = numkit.kl_vec(P, Q)
        assert (vals >= 0).all()
        off = ~np.eye(500, dtype=bool)
        assert (vals[off] > 1e-12).all()
        assert np.abs(np.diag(vals)).max() <= 1e-12


class TestLogBinomial:
    def test_values(self):
        assert numkit.log_binomial(10, 5) == pytest.approx(math.log2(252), abs=1e-9)
        assert numkit.log_binomial(7, 0) == 0.0 == numkit.log_binomial(7, 7)

    def test_exhaustive_small(self):
        for m in range(65):
            for k in range(m + 1):
                assert abs(numkit.log_binomial(m, k) - math.log2(math.comb(m, k))) <= 1e-9

    def test_all_matches_scalar(self):
        arr = numkit.log_binomial_all(300)
        assert np.allclose(arr, [numkit.log_binomial(300, k) for k in range(301)], atol=1e-9)

    def test_rejects(self):
        with pytest.raises(ValueError):
            numkit.log_binomial(3, 4)
        with pytest.raises(ValueError):
            numkit.log_binomial(3.5, 1)


class TestBinomialLog:
    def test_cdf_value(self):
        assert numkit.binomial_log_cdf(20, 0.3, 3) == pytest.approx(-3.22314738, abs=1e-8)
        assert 2 ** numkit.binomial_log_cdf(20, 0.3, 3) == pytest.approx(0.10708680, abs=1e-8)

    def test_cdf_exact_rationals(self):
        for m in range(1, 41):
            for p in np.round(np.arange(1, 10) / 10, 1):
                got = np.exp2(numkit.binomial_log_cdf_all(m, float(p)))
                for k in range(m + 1):
                    want = float(exact_cdf(m, Fraction(str(p)), k))
                    assert got[k] == pytest.approx(want, rel=1e-10)

    def test_pmf_sums_to_one(self):
        assert np.exp2(numkit.binomial_log_pmf_all(500, 0.37)).sum() == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_p(self):
        assert numkit.binomial_log_pmf(5, 0.0, 0) == 0.0
        assert numkit.binomial_log_pmf(5, 0.0, 1) == -math.inf
        assert numkit.binomial_log_pmf(5, 1.0, 5) == 0.0
        assert numkit.binomial_log_cdf(5, 1.0, 4) == -math.inf
        assert numkit.binomial_log_cdf(5, 0.0, 0) == 0.0

    @given(st.integers(1, 200), probs)
    def test_cdf_monotone_and_ends_at_zero(self, m, p):
        cdf = numkit.binomial_log_cdf_all(m, p)
        assert cdf[-1] == 0.0
        assert (cdf[1:] >= cdf[:-1]).all()

    @given(st.integers(1, 60), st.floats(0.01, 0.99), st.data())
    def test_pmf_scalar_matches_vector(self, m, p, data):
        k = data.draw(st.integers(0, m))
        assert numkit.binomial_log_pmf(m, p, k) == pytest.approx(numkit.binomial_log_pmf_all(m, p)[k], abs=1e-9)
