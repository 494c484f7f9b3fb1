import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chandiff.channel import AWGN, ChannelRealization, sample_rayleigh_channel
from chandiff.equalizer import (
    conditional_moments,
    equalize_mmse,
    mmse_weights,
    normalize_reshape,
    receive,
)
from chandiff.rng import stream
from chandiff.signals import ComplexSymbolBlock, RealSignalBlock, normalize_real, pack_complex


def test_weights_hand_value():
    # |h| = 1, sigma^2 = 0.5: both weights are 1/(1+1) = 0.5.
    w_s, w_n = mmse_weights(np.array([1.0 + 0.0j]), np.sqrt(0.5))
    np.testing.assert_allclose(w_s, [0.5, 0.5])
    np.testing.assert_allclose(w_n, [0.5, 0.5])


def test_weights_deep_fade():
    w_s, w_n = mmse_weights(np.array([0.0 + 0.0j]), 0.3)
    assert w_s.tolist() == [0.0, 0.0] and w_n.tolist() == [0.0, 0.0]


def test_weights_duplication_layout():
    h = np.array([0.5 + 0.1j, 2.0 - 1.0j, 0.0 + 0.3j])
    w_s, w_n = mmse_weights(h, 0.4)
    np.testing.assert_allclose(w_s[:3], w_s[3:])
    np.testing.assert_allclose(w_n[:3], w_n[3:])
    np.testing.assert_allclose(w_s, np.abs(np.concatenate([h, h])) * w_n, atol=1e-15)


def test_weights_awgn_identity_via_realization():
    ch = ChannelRealization.awgn(3, 0.9)
    np.testing.assert_array_equal(ch.w_s_diag, 1.0)
    np.testing.assert_array_equal(ch.w_n_diag, 1.0)


def test_weights_reject_bad_sigma():
    with pytest.raises(ValueError):
        mmse_weights(np.ones(2, dtype=complex), 0.0)


def test_equalize_hand_value():
    # h = 1, sigma^2 = 0.5, y = 2: y_eq = 2/(1+1) = 1.
    y = ComplexSymbolBlock(np.array([2.0]), np.array([0.0]))
    out = equalize_mmse(y, np.array([1.0 + 0.0j]), np.sqrt(0.5))
    np.testing.assert_allclose(out.re, [1.0])
    np.testing.assert_allclose(out.im, [0.0])


def test_equalize_zero_forcing_limit():
    rng = stream(21)
    h = sample_rayleigh_channel(8, rng)
    x = ComplexSymbolBlock(rng.standard_normal(8), rng.standard_normal(8))
    y = ComplexSymbolBlock.from_complex(h * x.as_complex())
    out = equalize_mmse(y, h, 1e-9)
    np.testing.assert_allclose(out.as_complex(), x.as_complex(), atol=1e-10)


def test_equalize_awgn_passthrough():
    y = ComplexSymbolBlock(np.array([1.0, 2.0]), np.array([-1.0, 0.5]))
    out = equalize_mmse(y, AWGN, 0.5)
    np.testing.assert_array_equal(out.as_complex(), y.as_complex())


def test_equalize_rejects_mismatch():
    y = ComplexSymbolBlock(np.ones(4), np.zeros(4))
    with pytest.raises(ValueError):
        equalize_mmse(y, np.ones(3, dtype=complex), 0.5)


def test_equalize_conditional_mean():
    # E[y_eq | x, h] = w_s x per complex symbol; 1e5 noise draws.
    rng = stream(22)
    n, sigma = 10**5, 0.6
    h = np.array([0.8 - 0.4j])
    x = ComplexSymbolBlock(np.full(n, 0.7), np.full(n, -0.2))
    from chandiff.channel import transmit

    y = transmit(x, np.full(n, h[0]), sigma, rng)
    y_eq = equalize_mmse(y, np.full(n, h[0]), sigma)
    w_s, w_n = mmse_weights(h, sigma)
    noise_std = sigma * w_n[0]  # per real dimension after equalization
    se = noise_std / np.sqrt(n)
    assert abs(y_eq.re.mean() - w_s[0] * 0.7) < 3 * se
    assert abs(y_eq.im.mean() - w_s[0] * (-0.2)) < 3 * se


def test_normalize_reshape_unit_scale():
    y = ComplexSymbolBlock(np.array([1.5]), np.array([-0.5]))
    np.testing.assert_array_equal(normalize_reshape(y, 0.0), [1.5, -0.5])


def test_normalize_reshape_hand_value():
    y = ComplexSymbolBlock(np.array([np.sqrt(2.0)]), np.array([0.0]))
    np.testing.assert_allclose(normalize_reshape(y, 1.0), [1.0, 0.0])


@given(st.floats(min_value=-4, max_value=4), st.floats(min_value=0, max_value=2))
@settings(max_examples=40, deadline=None)
def test_normalize_reshape_linear(scale, sigma):
    y = ComplexSymbolBlock(np.array([1.0, -2.0]), np.array([0.25, 3.0]))
    scaled = ComplexSymbolBlock(y.re * scale, y.im * scale)
    np.testing.assert_allclose(
        normalize_reshape(scaled, sigma), scale * normalize_reshape(y, sigma), atol=1e-12
    )


def test_conditional_moments_awgn_hand_value():
    # sigma^2 = 0.25: mean = x/sqrt(1.25), var = 0.25/1.25 = 0.2.
    x = RealSignalBlock(np.array([1.0, -2.0, 0.5, 0.0]))
    ch = ChannelRealization.awgn(2, 0.5)
    mean, var = conditional_moments(x, ch)
    np.testing.assert_allclose(mean, x.values / np.sqrt(1.25))
    np.testing.assert_allclose(var, 0.2)


def test_conditional_moments_zero_signal():
    ch = ChannelRealization.rayleigh(np.array([0.3 + 0.4j]), 0.5)
    x = RealSignalBlock(np.zeros(2))
    mean, var = conditional_moments(x, ch)
    np.testing.assert_array_equal(mean, 0.0)
    np.testing.assert_allclose(var, (0.25 / 1.25) * ch.w_n_diag**2)


@pytest.mark.parametrize("mode", ["awgn", "rayleigh"])
@pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0])
def test_simulated_moments_match_closed_form(mode, sigma):
    """Empirical y_r mean/variance vs the closed forms, 3 std errs, n = 1e5."""
    k, n = 4, 10**5
    rng = stream(23, int(sigma * 10), 0 if mode == "awgn" else 1)
    x = normalize_real(rng.standard_normal(2 * k))
    ch = ChannelRealization.draw(mode, k, sigma, rng)
    xc = pack_complex(RealSignalBlock(np.broadcast_to(x, (n, 2 * k)).copy()))
    obs = receive(xc, ch, rng)
    mean, var = conditional_moments(RealSignalBlock(x), ch)
    emp_mean = obs.y_r.mean(axis=0)
    emp_var = obs.y_r.var(axis=0)
    se_mean = np.sqrt(var / n)
    se_var = var * np.sqrt(2.0 / n)  # Gaussian: var(s^2) = 2 var^2/n
    assert np.all(np.abs(emp_mean - mean) < 3 * se_mean)
    assert np.all(np.abs(emp_var - var) < 3 * se_var)


def test_receive_with_estimation_error_uses_receiver_weights():
    rng = stream(24)
    k, sigma = 3, 0.4
    h = sample_rayleigh_channel(k, rng)
    true_ch = ChannelRealization.rayleigh(h, sigma)
    rx_ch = ChannelRealization.rayleigh(h + 0.1, sigma)
    x = normalize_real(rng.standard_normal(2 * k))
    xc = pack_complex(RealSignalBlock(x))
    obs = receive(xc, true_ch, rng, receiver_channel=rx_ch)
    assert obs.channel is rx_ch
