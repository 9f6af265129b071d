import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogradar.detector import (
    CellDecision,
    alpha_hat,
    decide,
    detect_bins,
    marcum_q1,
    residual,
    threshold,
    wald_statistic,
)
from cogradar.disturbance import BandedCovariance
from oracles import quad_marcum_q1

LAM_4 = 18.420680743952367  # -2 ln 1e-4


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestThreshold:
    def test_examples(self):
        assert threshold(1.0) == 0.0
        assert threshold(math.exp(-1)) == pytest.approx(2.0, abs=1e-12)
        assert threshold(1e-4) == pytest.approx(LAM_4, abs=1e-6)

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5, float("nan")])
    def test_rejects(self, p):
        with pytest.raises(ValueError):
            threshold(p)

    @given(st.floats(1e-12, 1.0))
    def test_chi2_tail(self, p):
        # 1 - CDF of chi2(2) at the threshold recovers p
        assert math.exp(-threshold(p) / 2) == pytest.approx(p, rel=1e-12)


class TestAlphaHat:
    def test_noiseless(self):
        h = np.array([1, 1j, -2])
        assert alpha_hat(h, (0.3 - 2j) * h) == pytest.approx(0.3 - 2j)

    def test_orthogonal(self):
        assert alpha_hat(np.array([1, 1]), np.array([1, -1])) == 0

    def test_hand(self):
        assert alpha_hat(np.array([1, 0]), np.array([2 + 1j, 5])) == 2 + 1j

    def test_zero_channel(self):
        with pytest.raises(ValueError):
            alpha_hat(np.zeros(3), np.ones(3))

    def test_residual_is_orthogonal(self, rng):
        h, y = cplx(rng, 8), cplx(rng, 8)
        assert abs(np.vdot(h, residual(h, y))) < 1e-12


class TestWald:
    def test_hand(self):
        assert wald_statistic(np.array([1, 0]), np.array([2, 0]), np.eye(2)) == pytest.approx(8.0)

    def test_zero_observation(self):
        assert wald_statistic(np.array([1, 1j]), np.zeros(2), np.eye(2)) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            wald_statistic(np.ones(2), np.ones(3), np.eye(2))
        with pytest.raises(ValueError):
            wald_statistic(np.ones(2), np.ones(2), np.eye(3))

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(0, 2 * math.pi))
    def test_degree_zero_homogeneity(self, seed, mag, phase):
        rng = np.random.default_rng(seed)
        h, y, c = cplx(rng, 6), cplx(rng, 6), cplx(rng, 6)
        g = BandedCovariance(c, 2)
        s = mag * np.exp(1j * phase)
        scaled = BandedCovariance(s * c, 2)
        assert wald_statistic(h, s * y, scaled) == pytest.approx(wald_statistic(h, y, g), rel=1e-9)

    def test_clamped_denominator_stays_finite(self):
        # residual orthogonal to h in a way that drives the banded form to zero
        h = np.array([1.0, 0.0])
        g = BandedCovariance(np.array([0.0, 1.0]), 1)
        stat = wald_statistic(h, np.array([1.0, 0.0]), g)
        assert np.isfinite(stat) and stat > 0


class TestDecide:
    def _cell(self, stat, lam):
        # Γ = I, h = e_1, y = sqrt(stat/2) e_1 gives Λ = stat
        h = np.array([1.0, 0.0])
        return decide(h, np.array([math.sqrt(stat / 2), 0.0]), np.eye(2), lam)

    def test_below_threshold(self):
        cell = self._cell(8.0, LAM_4)
        assert cell.statistic == pytest.approx(8.0) and cell.flag == 0

    def test_above_threshold(self):
        assert self._cell(20.0, LAM_4).flag == 1

    def test_null_reduces_to_pfa(self):
        cell = decide(np.array([1.0, 0.0]), np.array([0.0, 3.0]), np.eye(2), LAM_4)
        assert cell.zeta_hat == 0.0
        assert cell.pd_hat == pytest.approx(1e-4, rel=1e-9)

    def test_fields(self, rng):
        h, y = cplx(rng, 27), cplx(rng, 27)
        cell = decide(h, y)
        assert isinstance(cell, CellDecision)
        assert cell.flag == int(cell.statistic > threshold(1e-2))
        assert 0.0 <= cell.pd_hat <= 1.0
        # with the estimate plugged in, zeta_hat and the statistic coincide
        assert cell.zeta_hat == pytest.approx(cell.statistic, rel=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 40.0))
    def test_flag_invariant(self, seed, lam):
        rng = np.random.default_rng(seed)
        cell = decide(cplx(rng, 8), cplx(rng, 8), lam=lam)
        assert cell.flag == int(cell.statistic > lam)
        assert 0.0 <= cell.pd_hat <= 1.0


class TestMarcum:
    def test_identities(self):
        assert marcum_q1(2.5, 0.0) == 1.0
        assert marcum_q1(0.0, math.sqrt(2)) == pytest.approx(math.exp(-1), abs=1e-15)
        for b in (0.3, 1.0, 4.0):
            assert marcum_q1(0.0, b) == pytest.approx(math.exp(-b * b / 2), abs=1e-12)

    def test_oracle_one_one(self):
        assert marcum_q1(1.0, 1.0) == pytest.approx(quad_marcum_q1(1.0, 1.0), abs=1e-8)
        assert 0.7328 < marcum_q1(1.0, 1.0) < 0.7329

    def test_vectorized(self):
        out = marcum_q1(np.array([0.0, 1.0]), np.array([math.sqrt(2), 1.0]))
        np.testing.assert_allclose(out, [math.exp(-1), marcum_q1(1.0, 1.0)])

    def test_negative(self):
        with pytest.raises(ValueError):
            marcum_q1(-1.0, 1.0)
        with pytest.raises(ValueError):
            marcum_q1(1.0, -0.1)

    def test_small_b_large_a(self):
        # previously stalled in the chi-square series
        assert marcum_q1(549427.68, 3.7e-23) == 1.0
        assert marcum_q1(30.0, 1e-20) == 1.0
        assert marcum_q1(1e3, 1e-4) == 1.0

    def test_far_tail_stays_positive(self):
        assert 0.0 < marcum_q1(64.4, 77.5) < 1e-30

    @given(st.floats(0, 8), st.floats(0, 8), st.floats(0, 2))
    def test_monotone(self, a, b, step):
        # two evaluation branches meet at b = a and agree to ~1e-14
        assert marcum_q1(a, b + step) <= marcum_q1(a, b) + 1e-13
        assert marcum_q1(a + step, b) >= marcum_q1(a, b) - 1e-13

    @pytest.mark.filterwarnings("ignore:Error in function:RuntimeWarning")
    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    def test_range_wide(self, a, b):
        assert 0.0 <= marcum_q1(a, b) <= 1.0

    @given(st.floats(0, 6), st.floats(0, 6))
    def test_range(self, a, b):
        assert 0.0 <= marcum_q1(a, b) <= 1.0


class TestDetectBins:
    def test_matches_per_cell(self, rng):
        h, y = cplx(rng, 5, 64), cplx(rng, 5, 64)
        lam = threshold(1e-2)
        out = detect_bins(h, y, lam)
        assert len(out) == 5
        for l in range(5):
            ref = decide(h[l], y[l], lam=lam)
            got = out.cell(l)
            assert got.statistic == pytest.approx(ref.statistic, rel=1e-9)
            assert got.alpha_hat == pytest.approx(ref.alpha_hat, rel=1e-12)
            assert got.pd_hat == pytest.approx(ref.pd_hat, rel=1e-9, abs=1e-15)
            assert got.flag == ref.flag

    def test_known_covariance(self, rng):
        h, y = cplx(rng, 3, 10), cplx(rng, 3, 10)
        gamma = np.diag(np.arange(1.0, 11.0))
        out = detect_bins(h, y, 2.0, covariance=gamma)
        for l in range(3):
            assert out.statistic[l] == pytest.approx(wald_statistic(h[l], y[l], gamma), rel=1e-12)

    def test_shared_covariance(self, rng):
        h, y = cplx(rng, 4, 16), cplx(rng, 4, 16)
        out = detect_bins(h, y, 2.0, lag=3, shared_covariance=True)
        res = [residual(h[b], y[b]) for b in range(4)]
        dense = np.mean([BandedCovariance(r, 3).dense() for r in res], axis=0)
        assert out.statistic[2] == pytest.approx(wald_statistic(h[2], y[2], dense), rel=1e-9)

    def test_without_pd(self, rng):
        out = detect_bins(cplx(rng, 2, 8), cplx(rng, 2, 8), 2.0, with_pd=False)
        assert np.isnan(out.pd_hat).all()

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            detect_bins(cplx(rng, 2, 8), cplx(rng, 2, 7), 2.0)
        with pytest.raises(ValueError):
            detect_bins(cplx(rng, 2, 8), cplx(rng, 2, 8), 2.0, lag=8)
        with pytest.raises(ValueError):
            detect_bins(np.zeros((1, 4)), np.ones((1, 4)), 2.0)

    def test_white_null_rate(self):
        """Known Γ = I under white Gaussian noise: flag rate near nominal."""
        rng = np.random.default_rng(11)
        n, trials = 64, 20000
        h = np.tile(np.exp(2j * np.pi * 0.1 * np.arange(n)), (trials, 1))
        y = (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))) / math.sqrt(2)
        out = detect_bins(h, y, threshold(0.05), covariance=np.eye(n), with_pd=False)
        rate = out.flag.mean()
        assert abs(rate - 0.05) < 3 * math.sqrt(0.05 * 0.95 / trials)
