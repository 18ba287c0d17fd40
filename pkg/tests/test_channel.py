import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import jn_zeros

from zcssc import ParameterError
from zcssc.channel import (FadingProcess, FadingStream, LinkBudget, doppler_hz, noise_variance,
                           sample_fading, snr_from_budget, transmit)

# Doppler that puts the first zero of J0 at the 1 ms slot lag: consecutive slots decorrelate
DOPPLER_IID = jn_zeros(0, 1)[0] / (2 * math.pi * 1e-3)


def rician_cdf(x2, k_lin):
    """P(|h|^2 < x2) for unit-power Rician |h|, by integrating the amplitude pdf."""
    def pdf(a):
        return (2 * (k_lin + 1) * a * math.exp(-k_lin - (k_lin + 1) * a * a)
                * np.i0(2 * a * math.sqrt(k_lin * (k_lin + 1))))
    return quad(pdf, 0, math.sqrt(x2))[0]


def test_budget_examples():
    assert snr_from_budget(LinkBudget(-2.15, 1)) == -2.15
    assert abs(snr_from_budget(LinkBudget(-2.15, 80)) - (-21.18)) < 0.005
    assert abs(snr_from_budget(LinkBudget(-2.15, 160)) - (-24.19)) < 0.005
    with pytest.raises(ParameterError):
        LinkBudget(-2.15, 0)


def test_doppler_default():
    # 3 km/h at 2 GHz
    assert abs(doppler_hz(3.0) - (3 / 3.6) * 2e9 / 299_792_458) < 1e-12
    assert abs(doppler_hz(3.0) - 5.56) < 0.01


def test_pure_los_unit_magnitude():
    h = sample_fading(FadingProcess(k_factor_db=math.inf), 1000, 1)
    assert np.allclose(np.abs(h), 1)


def test_static_los_constant():
    h = sample_fading(FadingProcess(k_factor_db=math.inf, doppler_hz=0.0), 100, 2)
    assert np.allclose(h, h[0])


def test_unit_power_default():
    h = sample_fading(FadingProcess(doppler_hz=DOPPLER_IID), 10 ** 5, 3)
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.02


def test_deep_fade_probability():
    p_ref = rician_cdf(0.1, 10.0)
    h = sample_fading(FadingProcess(k_factor_db=10.0, doppler_hz=DOPPLER_IID), 10 ** 6, 4)
    p_hat = np.mean(np.abs(h) ** 2 < 0.1)
    assert abs(p_hat / p_ref - 1) < 0.2


def test_slot_lag_correlation_matches_model_and_decreases():
    k_lin = 10.0
    measured = []
    for fd in (5.0, 50.0, 150.0):
        fp = FadingProcess(k_factor_db=10.0, doppler_hz=fd)
        h = np.concatenate([sample_fading(fp, 2000, seed) for seed in range(50)]).reshape(50, 2000)
        r1 = np.mean(h[:, 1:] * h[:, :-1].conj())
        los = k_lin / (k_lin + 1)
        expected = los * math.exp(-fp.phase_step_std ** 2 / 2) + (1 - los) * fp.slot_correlation
        assert abs(r1 - expected) < 0.03
        measured.append(r1.real)
    assert measured[0] > measured[1] > measured[2]


def test_stream_continues_from_state():
    fp = FadingProcess(doppler_hz=40.0)
    stream = FadingStream(fp, 9)
    first, second = stream.take(4), stream.take(4)
    assert first[0] == FadingStream(fp, 9).take(1)[0]
    assert not np.allclose(first, second)
    assert np.array_equal(sample_fading(fp, 10, 9), sample_fading(fp, 10, 9))


def test_transmit_noiseless():
    c = np.exp(1j * np.arange(50))
    assert np.array_equal(transmit(c, 1.0, math.inf, 0), c)
    assert noise_variance(math.inf) == 0


def test_measured_snr():
    rng = np.random.default_rng(0)
    c = np.exp(2j * np.pi * rng.random(10 ** 6))
    y = transmit(c, 1.0, -8.0, 1)
    snr = 10 * math.log10(1 / np.mean(np.abs(y - c) ** 2))
    assert abs(snr - (-8.0)) < 0.05


@given(st.floats(0, 2 * np.pi))
def test_noise_independent_of_channel_phase(theta):
    c = np.ones(64, dtype=complex)
    rot = np.exp(1j * theta)
    assert np.allclose(transmit(c, rot, 0.0, 5) - rot * c, transmit(c, 1.0, 0.0, 5) - c)


def test_seed_streams_uncorrelated():
    n = 10 ** 5
    a = transmit(np.zeros(n), 1.0, 0.0, 1)
    b = transmit(np.zeros(n), 1.0, 0.0, 2)
    rho = abs(np.vdot(a, b)) / math.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
    assert rho < 5 / math.sqrt(n)
    assert np.array_equal(a, transmit(np.zeros(n), 1.0, 0.0, 1))
