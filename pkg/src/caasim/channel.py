"""Time-correlated Rayleigh fading and receiver noise.

Fading is synthesized as a sum of sinusoids under isotropic scattering:
each trace superposes ``num_scatterers`` unit rays with uniform arrival
angles and phases, giving zero-mean complex Gaussian coefficients (for
moderately many rays) whose autocorrelation follows J0(2*pi*fd*tau) in
ensemble. Noise is i.i.d. circular complex Gaussian sized from the target
SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fingerprint import SPEED_OF_LIGHT
from .rng import stream


@dataclass(frozen=True)
class ChannelParams:
    """Propagation-environment knobs (5 GHz indoor walk by default)."""

    carrier_freq_hz: float = 5e9
    walk_speed_mps: float = 1.0
    sample_rate_hz: float = 1e6
    snr_db: float = 20.0  # math.inf disables noise
    channel_power: float = 1.0
    num_scatterers: int = 64

    def __post_init__(self):
        if self.carrier_freq_hz <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("carrier frequency and sample rate must be positive")
        if self.walk_speed_mps < 0:
            raise ValueError("walk speed must be non-negative")
        if self.channel_power <= 0:
            raise ValueError("channel power must be positive")
        if self.num_scatterers < 1:
            raise ValueError("need at least one scatterer")


@dataclass(frozen=True)
class FadingTrace:
    """Complex channel coefficients sampled at ``sample_rate_hz``."""

    samples: np.ndarray
    sample_rate_hz: float
    doppler_hz: float

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("empty fading trace")


def doppler_shift(params: ChannelParams) -> float:
    """Maximum Doppler shift (walk_speed / c) * carrier, in Hz."""
    return params.walk_speed_mps / SPEED_OF_LIGHT * params.carrier_freq_hz


def coherence_time(doppler_hz: float) -> float:
    """Clarke-model coherence time sqrt(9 / (16 pi fd^2)) seconds."""
    if doppler_hz <= 0:
        raise ValueError("Doppler shift must be positive")
    return 3.0 / (4.0 * doppler_hz * math.sqrt(math.pi))


def generate_fading(params: ChannelParams, n: int, stream_seed: int) -> FadingTrace:
    """Synthesize ``n`` correlated fading samples for one trace.

    h[t] = sqrt(power/M) * sum_m exp(j(2 pi fd cos(gamma_m) t + chi_m)) with
    per-trace uniform arrival angles gamma and phases chi. Deterministic
    given ``stream_seed``.
    """
    if n <= 0:
        raise ValueError("trace length must be positive")
    rng = stream(stream_seed, "fading")
    m = params.num_scatterers
    fd = doppler_shift(params)
    gamma = rng.uniform(0.0, 2.0 * math.pi, m)
    chi = rng.uniform(0.0, 2.0 * math.pi, m)
    t = np.arange(n) / params.sample_rate_hz
    phase = 2.0 * math.pi * fd * np.cos(gamma)[:, None] * t[None, :] + chi[:, None]
    samples = np.sqrt(params.channel_power / m) * np.exp(1j * phase).sum(axis=0)
    return FadingTrace(samples=samples, sample_rate_hz=params.sample_rate_hz, doppler_hz=fd)


def noise_variance(snr_db: float, signal_power: float) -> float:
    """Complex noise variance sigma_w^2 for the target SNR (0.0 if SNR is inf)."""
    if math.isinf(snr_db):
        return 0.0
    return signal_power / (10.0 ** (snr_db / 10.0))


def add_noise(signal: np.ndarray, snr_db: float, signal_power: float,
              stream_seed: int) -> np.ndarray:
    """Add circular complex Gaussian noise sized for ``snr_db``.

    Real and imaginary parts each carry variance sigma_w^2 / 2. An infinite
    SNR returns the input unchanged.
    """
    signal = np.asarray(signal)
    if signal.size == 0:
        raise ValueError("empty signal")
    if signal_power <= 0:
        raise ValueError("signal power must be positive")
    if math.isinf(snr_db):
        return signal
    sigma_sq = noise_variance(snr_db, signal_power)
    rng = stream(stream_seed, "noise")
    scale = math.sqrt(sigma_sq / 2.0)
    noise = rng.normal(0.0, scale, signal.shape) + 1j * rng.normal(0.0, scale, signal.shape)
    return signal + noise
