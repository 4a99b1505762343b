"""Statistical validation suites for the simulator.

Each check regenerates data from a fixed seed and tests a distributional
claim with an independent oracle (chi-square, Kolmogorov-Smirnov, the J0
Bessel autocorrelation, Monte Carlo power ratios). Used by the ``stats``
CLI command and the acceptance tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .channel import ChannelParams, coherence_time, doppler_shift, generate_fading
from .dataset import CorpusConfig, build_session
from .fingerprint import (ELEVATION_MAX, PhaseMode, RandomizationParams,
                          build_device, eval_phase_grid, synthesize_phase_field)
from .rng import derive_seed, stream

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    p_value: float | None = None
    detail: str = ""

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        p = f" p={self.p_value:.4f}" if self.p_value is not None else ""
        return f"{verdict} {self.name}: statistic={self.statistic:.4g}{p} ({self.detail})"


def phase_uniformity(seed: int = 0, num_antennas: int = 1200, bins: int = 36,
                     significance: float = 0.01) -> CheckResult:
    """Chi-square uniformity of geometry-mode phase errors over [0, 2pi).

    One random direction per antenna, as in the array's published histogram
    behavior.
    """
    params = RandomizationParams(master_seed=seed)
    rng = stream(seed, "uniformity-directions")
    phases = np.empty(num_antennas)
    for aid in range(num_antennas):
        fld = synthesize_phase_field(params, aid, PhaseMode.GEOMETRY)
        theta = rng.uniform(0.0, ELEVATION_MAX)
        phi = rng.uniform(-math.pi, math.pi)
        phases[aid] = eval_phase_grid(fld, np.array(theta), np.array(phi))
    counts, _ = np.histogram(phases, bins=bins, range=(0.0, TWO_PI))
    chi2, p = stats.chisquare(counts)
    return CheckResult(
        name="phase-uniformity", passed=bool(p > significance),
        statistic=float(chi2), threshold=significance, p_value=float(p),
        detail=f"{num_antennas} antennas, {bins} bins, reject below p={significance}")


def channel_autocorrelation(seed: int = 0, num_traces: int = 2000,
                            trace_len: int = 2048, decimated_rate: float = 2e4,
                            max_dev: float = 0.05) -> CheckResult:
    """Ensemble fading autocorrelation vs the isotropic-scattering J0 curve.

    Estimated at a decimated sample rate over lags covering twice the
    coherence time; the oracle is scipy's Bessel J0.
    """
    params = ChannelParams(sample_rate_hz=decimated_rate)
    fd = doppler_shift(params)
    max_lag = int(math.ceil(2.0 * coherence_time(fd) * decimated_rate))
    if max_lag >= trace_len:
        raise ValueError("trace too short for the requested lag range")
    acc = np.zeros(max_lag + 1, dtype=complex)
    counts = trace_len - np.arange(max_lag + 1)
    for i in range(num_traces):
        h = generate_fading(params, trace_len, derive_seed(seed, "autocorr", i)).samples
        f = np.fft.fft(h, 2 * trace_len)
        acc += np.fft.ifft(f * np.conj(f))[: max_lag + 1]
    rho = (acc / (counts * num_traces)).real / params.channel_power
    tau = np.arange(max_lag + 1) / decimated_rate
    dev = np.abs(rho - special.j0(TWO_PI * fd * tau))
    worst = float(dev.max())
    return CheckResult(
        name="channel-autocorr", passed=worst <= max_dev, statistic=worst,
        threshold=max_dev,
        detail=f"{num_traces} traces, lags to {tau[-1] * 1e3:.1f} ms vs J0")


def rayleigh_envelope(seed: int = 0, num_draws: int = 10000,
                      significance: float = 0.01,
                      power_tolerance: float = 0.02) -> list[CheckResult]:
    """Envelope KS test against Rayleigh plus mean-power convergence.

    Envelope samples come one per independent trace (sampled away from t=0
    so arrival angles matter); mean power aggregates decimated long traces.
    """
    params = ChannelParams(sample_rate_hz=81.3)
    env = np.empty(num_draws)
    for i in range(num_draws):
        h = generate_fading(params, 2, derive_seed(seed, "envelope", i)).samples
        env[i] = abs(h[1])
    d_stat, p = stats.kstest(env, "rayleigh", args=(0.0, math.sqrt(params.channel_power / 2.0)))
    ks = CheckResult(
        name="rayleigh-ks", passed=bool(p > significance), statistic=float(d_stat),
        threshold=significance, p_value=float(p),
        detail=f"{num_draws} independent envelope draws")

    slow = ChannelParams(sample_rate_hz=1000.0)
    total, count = 0.0, 0
    for i in range(1000):
        h = generate_fading(slow, 1000, derive_seed(seed, "power", i)).samples
        total += float((np.abs(h) ** 2).sum())
        count += h.size
    mean_power = total / count
    power = CheckResult(
        name="mean-power", passed=abs(mean_power - slow.channel_power) <= power_tolerance,
        statistic=mean_power, threshold=power_tolerance,
        detail=f"{count} samples over 1000 traces, target {slow.channel_power}")
    return [ks, power]


def snr_calibration(seed: int = 0, num_sessions: int = 1200, n_samples: int = 250,
                    tolerance_db: float = 0.3) -> CheckResult:
    """Measured corpus SNR against the configured 20 dB.

    Regenerates each session noiselessly (fading streams are separate from
    noise streams, so coefficients match) and compares signal and noise
    powers.
    """
    config = CorpusConfig(num_devices=max(2, num_sessions // 100),
                          sessions_per_device=100, n_samples=n_samples,
                          master_seed=seed)
    clean_cfg = CorpusConfig(
        num_devices=config.num_devices, sessions_per_device=config.sessions_per_device,
        n_samples=n_samples, mode=config.mode,
        channel=ChannelParams(snr_db=math.inf), master_seed=seed)
    params = RandomizationParams(master_seed=seed)
    sig_power, noise_power, count = 0.0, 0.0, 0
    made = 0
    for dev_id in range(config.num_devices):
        device = build_device(params, dev_id, config.mode)
        for s in range(config.sessions_per_device):
            if made >= num_sessions:
                break
            noisy = build_session(config, device, s).samples.astype(np.float64)
            clean = build_session(clean_cfg, device, s).samples.astype(np.float64)
            sig_power += float((clean ** 2).sum())
            noise_power += float(((noisy - clean) ** 2).sum())
            count += clean.size
            made += 1
    snr_db = 10.0 * math.log10(sig_power / noise_power)
    sigma_w_sq = 2.0 * noise_power / count  # count is over real I/Q entries
    target = ChannelParams().snr_db
    return CheckResult(
        name="snr", passed=abs(snr_db - target) <= tolerance_db, statistic=snr_db,
        threshold=tolerance_db,
        detail=f"{made} sessions x {n_samples} samples, measured sigma_w^2={sigma_w_sq:.5f}")


def channel_drift(seed: int = 0, num_traces: int = 2000,
                  ratio_bound: float = 0.4, quantile: float = 0.95,
                  median_bound: float = 0.10) -> list[CheckResult]:
    """Drift of the fading coefficient over a 1 ms authentication sequence.

    Asserts the empirically calibrated bounds: the 95th percentile of
    max|h_t - h_0| / |h_0| stays under ``ratio_bound`` and the median under
    ``median_bound``.
    """
    params = ChannelParams()
    ratios = np.empty(num_traces)
    for i in range(num_traces):
        h = generate_fading(params, 1000, derive_seed(seed, "drift", i)).samples
        ratios[i] = np.abs(h - h[0]).max() / abs(h[0])
    q = float(np.quantile(ratios, quantile))
    med = float(np.median(ratios))
    return [
        CheckResult(name="drift-q95", passed=q < ratio_bound, statistic=q,
                    threshold=ratio_bound,
                    detail=f"p{quantile * 100:.0f} of relative drift, {num_traces} traces"),
        CheckResult(name="drift-median", passed=med < median_bound, statistic=med,
                    threshold=median_bound, detail="median relative drift over 1 ms"),
    ]


SUITES = {
    "phase-uniformity": lambda seed: [phase_uniformity(seed)],
    "channel-autocorr": lambda seed: [channel_autocorrelation(seed)],
    "rayleigh-ks": lambda seed: rayleigh_envelope(seed),
    "snr": lambda seed: [snr_calibration(seed)],
    "drift": lambda seed: channel_drift(seed),
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name == "all":
        results = []
        for suite in SUITES.values():
            results.extend(suite(seed))
        return results
    if name not in SUITES:
        raise ValueError(f"unknown stats suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name](seed)
