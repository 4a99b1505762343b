"""Fading synthesis and noise calibration."""

import math

import numpy as np
import pytest
from scipy import stats

from caasim.channel import (ChannelParams, add_noise, coherence_time,
                            doppler_shift, generate_fading, noise_variance)
from caasim.validate import channel_autocorrelation, rayleigh_envelope


class TestDoppler:
    def test_walking_at_5ghz(self):
        assert doppler_shift(ChannelParams()) == pytest.approx(16.67, abs=0.01)

    def test_zero_speed(self):
        assert doppler_shift(ChannelParams(walk_speed_mps=0.0)) == 0.0

    def test_linear_in_speed(self):
        assert doppler_shift(ChannelParams(walk_speed_mps=2.0)) == pytest.approx(33.35, abs=0.02)


class TestCoherenceTime:
    def test_walking_doppler_value(self):
        assert coherence_time(16.67) == pytest.approx(0.0254, abs=0.0002)

    def test_halves_under_doubled_doppler(self):
        assert coherence_time(33.34) == pytest.approx(0.0127, abs=0.0001)

    def test_one_hertz(self):
        assert coherence_time(1.0) == pytest.approx(0.4231, abs=0.0005)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            coherence_time(0.0)
        with pytest.raises(ValueError):
            coherence_time(-3.0)


class TestFading:
    def test_lag_zero_of_normalized_autocorrelation(self):
        trace = generate_fading(ChannelParams(), 4096, stream_seed=1)
        h = trace.samples
        rho0 = np.vdot(h, h).real / (np.abs(h) ** 2).sum()
        assert rho0 == 1.0

    def test_deterministic(self):
        a = generate_fading(ChannelParams(), 256, stream_seed=42).samples
        b = generate_fading(ChannelParams(), 256, stream_seed=42).samples
        assert np.array_equal(a, b)
        c = generate_fading(ChannelParams(), 256, stream_seed=43).samples
        assert not np.array_equal(a, c)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            generate_fading(ChannelParams(), 0, stream_seed=1)

    def test_mean_power_and_envelope(self):
        # Monte Carlo oracle: aggregate power within 2% of 1, Rayleigh KS
        ks, power = rayleigh_envelope(seed=0)
        assert power.passed, power.summary()
        assert abs(power.statistic - 1.0) <= 0.02
        assert ks.passed, ks.summary()
        assert ks.p_value > 0.01

    def test_autocorrelation_matches_bessel(self):
        # leaner config than the acceptance run; same J0 oracle
        result = channel_autocorrelation(seed=0, num_traces=600)
        assert result.passed, result.summary()
        assert result.statistic <= 0.05

    def test_phase_uniform(self):
        # one draw per independent trace; within-trace samples are correlated
        phases = np.empty(6000)
        for i in range(phases.size):
            h = generate_fading(ChannelParams(sample_rate_hz=81.3), 2, stream_seed=1000 + i)
            phases[i] = np.angle(h.samples[1])
        counts, _ = np.histogram(phases, bins=36, range=(-math.pi, math.pi))
        _, p = stats.chisquare(counts)
        assert p > 0.01

    def test_wide_sense_stationary_halves(self):
        # mean power of the two halves of a long decimated trace within 5%
        h = generate_fading(ChannelParams(sample_rate_hz=200.0), 100_000, stream_seed=7).samples
        first = float((np.abs(h[:50_000]) ** 2).mean())
        second = float((np.abs(h[50_000:]) ** 2).mean())
        assert abs(first - second) / first < 0.05


class TestNoise:
    def test_variance_at_20db(self):
        assert noise_variance(20.0, 1.0) == pytest.approx(0.01, abs=1e-12)

    def test_infinite_snr_is_identity(self):
        signal = np.exp(1j * np.linspace(0, 5, 100))
        assert add_noise(signal, math.inf, 1.0, stream_seed=3) is signal

    def test_measured_snr(self):
        rng = np.random.default_rng(8)
        signal = np.exp(1j * rng.uniform(0, 2 * math.pi, 1_000_000))
        noisy = add_noise(signal, 20.0, 1.0, stream_seed=5)
        noise = noisy - signal
        snr_db = 10 * math.log10(float((np.abs(signal) ** 2).mean())
                                 / float((np.abs(noise) ** 2).mean()))
        assert snr_db == pytest.approx(20.0, abs=0.3)

    def test_whiteness(self):
        signal = np.zeros(1_000_000, dtype=complex)
        noise = add_noise(signal, 20.0, 1.0, stream_seed=11)
        power = float((np.abs(noise) ** 2).mean())
        for lag in range(1, 11):
            rho = np.vdot(noise[:-lag], noise[lag:]) / (len(noise) - lag) / power
            assert abs(rho) < 0.01

    def test_component_variance(self):
        noise = add_noise(np.zeros(500_000, dtype=complex), 20.0, 1.0, stream_seed=2)
        assert float((noise.real ** 2).mean()) == pytest.approx(0.005, rel=0.02)
        assert float((noise.imag ** 2).mean()) == pytest.approx(0.005, rel=0.02)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            add_noise(np.array([]), 20.0, 1.0, stream_seed=0)
        with pytest.raises(ValueError):
            add_noise(np.ones(4), 20.0, 0.0, stream_seed=0)


class TestParams:
    @pytest.mark.parametrize("kwargs", [
        {"carrier_freq_hz": 0.0},
        {"sample_rate_hz": -1.0},
        {"walk_speed_mps": -0.5},
        {"channel_power": 0.0},
        {"num_scatterers": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ChannelParams(**kwargs)
