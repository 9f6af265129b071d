import cmath

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogradar.array import (
    ArrayConfig,
    beampattern,
    omni_weights,
    scale_to_power,
    steering,
    transmit_power,
    virtual_channel,
)

nus = st.floats(-0.5, 0.4999, allow_nan=False)
sizes = st.integers(1, 9)


def random_weights(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestArrayConfig:
    def test_uniform_default_grid(self):
        cfg = ArrayConfig.uniform(4, 4)
        assert cfg.n_bins == 20
        assert cfg.grid[0] == -0.5 and cfg.grid[-1] == 0.45
        assert cfg.bin_index(0.2) == 14
        assert cfg.bin_index(0.0) == 10
        assert cfg.n_virtual == 16

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_tx=0, n_rx=2, grid=(0.0,)),
            dict(n_tx=2, n_rx=0, grid=(0.0,)),
            dict(n_tx=2, n_rx=2, grid=()),
            dict(n_tx=2, n_rx=2, grid=(0.1, 0.0)),
            dict(n_tx=2, n_rx=2, grid=(0.0, 0.5)),
            dict(n_tx=2, n_rx=2, grid=(-0.6,)),
            dict(n_tx=2, n_rx=2, grid=(0.0,), spacing_wavelengths=1.0),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ArrayConfig(**kwargs)

    def test_off_grid_lookup(self):
        with pytest.raises(ValueError, match="not on the angle grid"):
            ArrayConfig.uniform(4, 4).bin_index(0.123)


class TestSteering:
    def test_zero_frequency(self):
        np.testing.assert_array_equal(steering(0.0, 4), np.ones(4))

    def test_quarter_cycle(self):
        np.testing.assert_allclose(steering(0.25, 4), [1, 1j, -1, -1j], atol=1e-15)

    def test_direct_evaluation(self):
        assert steering(0.1, 3)[2] == pytest.approx(cmath.exp(0.4j * cmath.pi), abs=1e-15)

    def test_zero_elements(self):
        with pytest.raises(ValueError):
            steering(0.1, 0)

    @given(nus, sizes)
    def test_unit_modulus_and_reference(self, nu, n):
        a = steering(nu, n)
        assert a[0] == 1
        np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-12)

    def test_vectorized_rows(self):
        rows = steering(np.array([0.0, 0.25]), 4)
        assert rows.shape == (2, 4)
        np.testing.assert_allclose(rows[1], steering(0.25, 4))


class TestVirtualChannel:
    def test_identity_kronecker(self):
        cfg = ArrayConfig.uniform(3, 5)
        h = virtual_channel(np.eye(3), 0.15, cfg)
        np.testing.assert_allclose(h, np.kron(steering(0.15, 3), steering(0.15, 5)))
        assert np.vdot(h, h).real == pytest.approx(15, rel=1e-9)

    def test_hand_kronecker(self):
        cfg = ArrayConfig.uniform(2, 2)
        np.testing.assert_allclose(virtual_channel(np.eye(2), 0.25, cfg), [1, 1j, 1j, -1], atol=1e-15)

    def test_zero_weights(self):
        cfg = ArrayConfig.uniform(3, 2)
        np.testing.assert_array_equal(virtual_channel(np.zeros((3, 3)), 0.1, cfg), np.zeros(6))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            virtual_channel(np.eye(3), 0.0, ArrayConfig.uniform(4, 4))
        with pytest.raises(ValueError):
            virtual_channel(np.ones((3, 2)), 0.0, ArrayConfig.uniform(3, 4))

    @given(st.integers(0, 2**32 - 1), nus)
    def test_linear_in_weights(self, seed, nu):
        rng = np.random.default_rng(seed)
        cfg = ArrayConfig.uniform(4, 3)
        w1, w2 = random_weights(rng, 4), random_weights(rng, 4)
        np.testing.assert_allclose(
            virtual_channel(w1 + w2, nu, cfg),
            virtual_channel(w1, nu, cfg) + virtual_channel(w2, nu, cfg),
            atol=1e-12,
        )

    @given(st.integers(0, 2**32 - 1), nus)
    def test_norm_is_pattern_times_receivers(self, seed, nu):
        rng = np.random.default_rng(seed)
        cfg = ArrayConfig.uniform(4, 6)
        w = random_weights(rng, 4)
        h = virtual_channel(w, nu, cfg)
        assert np.vdot(h, h).real == pytest.approx(6 * beampattern(w, nu), rel=1e-10)

    def test_batched_rows_match(self):
        cfg = ArrayConfig.uniform(4, 3)
        w = random_weights(np.random.default_rng(1), 4)
        rows = virtual_channel(w, np.asarray(cfg.grid), cfg)
        for b, nu in enumerate(cfg.grid):
            np.testing.assert_allclose(rows[b], np.kron(w.T @ steering(nu, 4), steering(nu, 3)))


class TestBeampattern:
    def test_identity_is_flat(self):
        np.testing.assert_allclose(beampattern(np.eye(5), np.linspace(-0.5, 0.4, 7)), 5.0)

    def test_matched_rank_one(self):
        n, p, nu0 = 8, 2.0, 0.15
        w = np.zeros((n, n), complex)
        w[:, 0] = np.sqrt(p) * steering(nu0, n).conj() / np.sqrt(n)
        assert beampattern(w, nu0) == pytest.approx(p * n, rel=1e-12)

    def test_zero(self):
        assert beampattern(np.zeros((3, 3)), 0.2) == 0.0

    def test_quadratic_form_definition(self):
        rng = np.random.default_rng(5)
        w = random_weights(rng, 4)
        a = steering(0.3, 4)
        assert beampattern(w, 0.3) == pytest.approx((a @ w @ w.conj().T @ a.conj()).real, rel=1e-12)

    @given(st.integers(0, 2**32 - 1), nus, st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
    def test_scaling(self, seed, nu, c):
        w = random_weights(np.random.default_rng(seed), 3)
        assert beampattern(c * w, nu) == pytest.approx(abs(c) ** 2 * beampattern(w, nu), rel=1e-9, abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    def test_power_conservation(self, seed, n):
        w = random_weights(np.random.default_rng(seed), n)
        grid = -0.5 + np.arange(512) / 512
        assert np.mean(beampattern(w, grid)) == pytest.approx(transmit_power(w), rel=1e-2)


def test_omni_and_power_helpers():
    w = omni_weights(4, 2.0)
    assert transmit_power(w) == pytest.approx(2.0)
    np.testing.assert_allclose(beampattern(w, 0.3), 2.0)
    w2 = scale_to_power(np.ones((3, 3)), 5.0)
    assert transmit_power(w2) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        scale_to_power(np.zeros((2, 2)), 1.0)
