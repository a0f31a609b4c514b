import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feelsim.channel import (
    Beamformer,
    ChannelParams,
    ChannelRealization,
    dbm_to_watts,
    effective_betas,
    interference_plus_noise,
    optimal_beamformer,
    sample_channels,
    sinr_coefficient,
    uplink_bits,
    watts_to_dbm,
)
from feelsim.errors import DegenerateChannelError, DomainError
from feelsim.oracles import power_iteration_beamformer, random_channels, random_unit_vectors, sinr_batch


def e(i, M):
    v = np.zeros(M, dtype=complex)
    v[i] = 1.0
    return v


def chans(*hs):
    return [ChannelRealization(np.asarray(h, dtype=complex), k) for k, h in enumerate(hs)]


# --- sample_channels ---------------------------------------------------------


def test_pure_los_at_reference_distance_has_unit_gain():
    params = ChannelParams(num_antennas=8, rician_factor_db=math.inf, reference_distance=1.0)
    (ch,) = sample_channels([1.0], params, seed=1)
    np.testing.assert_allclose(np.abs(ch.h), 1.0, rtol=0, atol=1e-15)


def test_very_large_k_factor_approaches_los():
    params = ChannelParams(num_antennas=4, rician_factor_db=300.0, reference_distance=1.0)
    (ch,) = sample_channels([1.0], params, seed=1)
    np.testing.assert_allclose(np.abs(ch.h), 1.0, atol=1e-12)


def test_path_loss_at_twice_reference_distance():
    params = ChannelParams(num_antennas=4, rician_factor_db=math.inf, path_loss_exponent=3.2, reference_distance=2.5)
    (ch,) = sample_channels([5.0], params, seed=9)
    # 2 ** -1.6 by hand
    np.testing.assert_allclose(np.abs(ch.h), 0.329876977693224, rtol=1e-12)


def test_sampling_is_deterministic():
    params = ChannelParams()
    a = sample_channels([5.0, 12.0, 19.0], params, seed=42)
    b = sample_channels([5.0, 12.0, 19.0], params, seed=42)
    c = sample_channels([5.0, 12.0, 19.0], params, seed=43)
    for x, y in zip(a, b):
        assert np.array_equal(x.h, y.h)
    assert not np.array_equal(a[0].h, c[0].h)


def test_fixed_los_angles_are_used():
    params = ChannelParams(num_antennas=3, rician_factor_db=math.inf)
    (ch,) = sample_channels([1.0], params, seed=0, los_angles=[0.0])
    np.testing.assert_allclose(ch.h, np.ones(3), atol=1e-15)


@pytest.mark.parametrize("d", [0.0, -3.0])
def test_non_positive_distance_rejected(d):
    with pytest.raises(DomainError):
        sample_channels([5.0, d], ChannelParams(), seed=0)


def test_rician_power_normalization():
    # unit-variance scatter plus unit-modulus LOS: E|g_m|^2 = 1
    params = ChannelParams(num_antennas=8, reference_distance=1.0)
    hs = np.concatenate([c.h for c in sample_channels([1.0] * 2000, params, seed=3)])
    assert np.mean(np.abs(hs) ** 2) == pytest.approx(1.0, rel=0.03)


def test_channel_params_invariants():
    with pytest.raises(DomainError):
        ChannelParams(num_antennas=0)
    with pytest.raises(DomainError):
        ChannelParams(noise_power=0.0)
    with pytest.raises(DomainError):
        ChannelParams(path_loss_exponent=-1)


# --- interference_plus_noise -------------------------------------------------


def test_single_worker_gives_scaled_identity():
    np.testing.assert_array_equal(interference_plus_noise(chans(np.ones(3)), 0, 1.0), np.eye(3))


def test_two_workers_rank_one_plus_identity():
    M = 4
    sigma = interference_plus_noise(chans(np.ones(M), e(0, M)), 0, 1.0)
    np.testing.assert_array_equal(sigma, np.diag([2.0, 1.0, 1.0, 1.0]))


def test_interference_switch_off():
    M = 4
    sigma = interference_plus_noise(chans(np.ones(M), e(0, M)), 0, 0.5, include_interference=False)
    np.testing.assert_array_equal(sigma, 0.5 * np.eye(M))


def test_index_out_of_range():
    with pytest.raises(IndexError):
        interference_plus_noise(chans(np.ones(2)), 1, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31), st.floats(1e-6, 1.0))
def test_covariance_is_hermitian_and_bounded_below(M, K, seed, noise):
    channels = random_channels(np.random.default_rng(seed), M, K)
    sigma = interference_plus_noise(channels, 0, noise)
    assert np.max(np.abs(sigma - sigma.conj().T)) <= 1e-12
    assert np.linalg.eigvalsh(sigma).min() >= noise - 1e-12


# --- optimal_beamformer ------------------------------------------------------


def test_no_interferers_gives_matched_filter():
    h = np.array([1 + 1j, 2 - 0.5j, -0.3j])
    w = optimal_beamformer(chans(h), 0, 1e-6)
    expected = h / np.linalg.norm(h)
    expected = expected * abs(expected[0]) / expected[0]
    np.testing.assert_allclose(w.w, expected, atol=1e-12)
    assert w.w[0].imag == 0 and w.w[0].real > 0


def test_single_antenna_beamformer_is_one():
    w = optimal_beamformer(chans([0.3 - 0.7j], [1.0 + 0j]), 0, 1e-3)
    np.testing.assert_allclose(w.w, [1.0], atol=1e-15)


def test_zero_channel_is_degenerate():
    with pytest.raises(DegenerateChannelError):
        optimal_beamformer(chans(np.zeros(3), np.ones(3)), 0, 1.0)


def test_beats_random_vectors_small_instance():
    g = np.random.default_rng(12)
    channels = random_channels(g, 4, 3)
    sigma = interference_plus_noise(channels, 1, 1e-3)
    w = optimal_beamformer(channels, 1, 1e-3)
    beta_star = sinr_coefficient(channels, 1, w, 1e-3)
    sampled = sinr_batch(channels[1].h, sigma, random_unit_vectors(g, 1000, 4))
    assert sampled.max() <= beta_star * (1 + 1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_beamformer_optimality_sweep(seed):
    g = np.random.default_rng(seed)
    M, K = int(g.integers(1, 9)), int(g.integers(1, 9))
    channels = random_channels(g, M, K)
    k = int(g.integers(0, K))
    sigma = interference_plus_noise(channels, k, 1e-2)
    w = optimal_beamformer(channels, k, 1e-2)
    assert w.norm_error <= 1e-9
    beta_star = sinr_coefficient(channels, k, w, 1e-2)
    sampled = sinr_batch(channels[k].h, sigma, random_unit_vectors(g, 10**4, M))
    assert sampled.max() <= beta_star * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_closed_form_matches_power_iteration(M, K, seed):
    channels = random_channels(np.random.default_rng(seed), M, K)
    sigma = interference_plus_noise(channels, 0, 1e-2)
    w = optimal_beamformer(channels, 0, 1e-2)
    beta_cf = sinr_coefficient(channels, 0, w, 1e-2)
    beta_pi = sinr_batch(channels[0].h, sigma, power_iteration_beamformer(channels[0].h, sigma)[None, :])[0]
    assert beta_pi == pytest.approx(beta_cf, rel=1e-9)
    assert w.norm_error <= 1e-9


def test_max_sinr_equals_quadratic_form():
    channels = random_channels(np.random.default_rng(4), 6, 5)
    sigma = interference_plus_noise(channels, 2, 1e-3)
    h = channels[2].h
    beta = sinr_coefficient(channels, 2, optimal_beamformer(channels, 2, 1e-3), 1e-3)
    assert beta == pytest.approx(np.vdot(h, np.linalg.solve(sigma, h)).real, rel=1e-10)


# --- sinr_coefficient --------------------------------------------------------


def test_beta_unit_case():
    assert sinr_coefficient(chans(e(0, 3)), 0, Beamformer(e(0, 3)), 1.0) == 1.0


def test_beta_at_reported_noise_power():
    h = np.array([0.6, 0.8j])
    w = optimal_beamformer(chans(h), 0, 1e-6)
    assert sinr_coefficient(chans(h), 0, w, 1e-6) == pytest.approx(1e6, rel=1e-12)


def test_beta_orthogonal_is_zero():
    assert sinr_coefficient(chans(e(0, 3)), 0, Beamformer(e(1, 3)), 1.0) == 0.0


def test_effective_betas_respects_switch():
    channels = random_channels(np.random.default_rng(8), 4, 6)
    with_i, _ = effective_betas(channels, ChannelParams(num_antennas=4, noise_power=1e-3))
    without, _ = effective_betas(channels, ChannelParams(num_antennas=4, noise_power=1e-3, include_interference=False))
    assert all(a < b for a, b in zip(with_i, without))
    for k, ch in enumerate(channels):
        assert without[k] == pytest.approx(np.vdot(ch.h, ch.h).real / 1e-3, rel=1e-12)


# --- uplink_bits ---------------------------------------------------------------


def test_uplink_bits_examples():
    assert uplink_bits(1.0, 1.0, 1.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert uplink_bits(1.0, 1.0, 0.0, 5.0) == 0.0
    assert uplink_bits(0.01, 1e6, 3.0, 1.0) == pytest.approx(2e4, rel=1e-12)


@given(
    st.floats(1e-3, 10), st.floats(1e3, 1e7), st.floats(1e-4, 1.0), st.floats(1e-3, 1e3), st.floats(1.01, 3.0)
)
def test_uplink_bits_strictly_increasing(t, B, P, beta, factor):
    base = uplink_bits(t, B, P, beta)
    assert uplink_bits(t * factor, B, P, beta) > base
    assert uplink_bits(t, B * factor, P, beta) > base
    assert uplink_bits(t, B, P * factor, beta) > base


def test_dbm_conversion():
    assert dbm_to_watts(20.0) == pytest.approx(0.1, rel=1e-15)
    assert dbm_to_watts(-10.0) == pytest.approx(1e-4, rel=1e-15)
    assert watts_to_dbm(0.1) == pytest.approx(20.0)
