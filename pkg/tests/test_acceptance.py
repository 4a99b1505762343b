"""Acceptance gate: each criterion at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS/FAIL line
per criterion. The desk-scale authentication pair (geometry-randomized vs
traditional hardware) trains the full baseline twice and dominates the
runtime (about ten minutes on two desktop cores).
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from caasim.channel import ChannelParams, coherence_time, doppler_shift, noise_variance
from caasim.classifier import (Cnn3Model, ModelSpec, TrainConfig, evaluate,
                               gradient_check, tiny_spec, train)
from caasim.dataset import (CorpusConfig, CorpusFormatError, CorpusTruncatedError,
                            generate_corpus, read_corpus, split_arrays, write_corpus)
from caasim.fingerprint import PhaseMode
from caasim.validate import (channel_autocorrelation, phase_uniformity,
                             rayleigh_envelope, snr_calibration)

DESK_SEED = 0
DESK_DEVICES = 30
DESK_SESSIONS = 80


def report(name: str, passed: bool, detail: str):
    print(f"\nACCEPTANCE {'PASS' if passed else 'FAIL'} - {name}: {detail}")
    assert passed, f"{name}: {detail}"


def desk_accuracy(mode: PhaseMode, tmp_path) -> tuple[float, float]:
    """Generate + train + evaluate one desk-scale corpus; (accuracy, seconds)."""
    started = time.time()
    config = CorpusConfig(num_devices=DESK_DEVICES, sessions_per_device=DESK_SESSIONS,
                          n_samples=1000, mode=mode, master_seed=DESK_SEED)
    payload, manifest = generate_corpus(config, workers=2)
    base = tmp_path / f"desk_{mode.value}"
    write_corpus(payload, manifest, base)
    records, manifest = read_corpus(base)
    splits = split_arrays(records, manifest)
    model = Cnn3Model.initialize(
        ModelSpec(num_classes=DESK_DEVICES, input_rows=1000), seed=DESK_SEED)
    best, _history = train(model, splits["train"], splits["val"],
                           TrainConfig(seed=DESK_SEED))
    accuracy = evaluate(best, *splits["test"]).accuracy
    return accuracy, time.time() - started


@pytest.fixture(scope="module")
def desk_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("desk")
    caa_acc, caa_secs = desk_accuracy(PhaseMode.GEOMETRY, tmp)
    trad_acc, trad_secs = desk_accuracy(PhaseMode.TRADITIONAL, tmp)
    return {"caa": (caa_acc, caa_secs), "traditional": (trad_acc, trad_secs)}


class TestStatisticalCriteria:
    def test_phase_error_uniformity(self):
        started = time.time()
        result = phase_uniformity(seed=0, num_antennas=1200, bins=36)
        elapsed = time.time() - started
        report("phase-error uniformity",
               result.passed and elapsed < 10.0,
               f"chi2={result.statistic:.2f} p={result.p_value:.4f} (> 0.01), "
               f"{elapsed:.1f}s (< 10s)")

    def test_clarke_model_fidelity(self):
        started = time.time()
        autocorr = channel_autocorrelation(seed=0, num_traces=2000)
        ks, power = rayleigh_envelope(seed=0)
        elapsed = time.time() - started
        report("Clarke-model fidelity",
               autocorr.passed and ks.passed and power.passed and elapsed < 60.0,
               f"max|rho-J0|={autocorr.statistic:.4f} (<= 0.05), "
               f"KS p={ks.p_value:.4f} (> 0.01), "
               f"mean power={power.statistic:.4f} (1 +- 2%), {elapsed:.1f}s (< 60s)")

    def test_doppler_and_coherence_numbers(self):
        fd = doppler_shift(ChannelParams())
        tc = coherence_time(fd)
        ok = abs(fd - 16.67) <= 0.01 and abs(tc - 0.0254) <= 0.0002
        report("Doppler/coherence numbers", ok,
               f"fd={fd:.4f} Hz (16.67 +- 0.01), Tc={tc:.5f} s (0.0254 +- 0.0002)")

    def test_snr_calibration(self):
        sigma_sq = noise_variance(20.0, 1.0)
        result = snr_calibration(seed=0)
        report("SNR calibration",
               result.passed and abs(sigma_sq - 0.01) < 1e-12,
               f"measured {result.statistic:.3f} dB (20 +- 0.3), "
               f"sigma_w^2={sigma_sq:.4f} (= 0.01); {result.detail}")


class TestAuthenticationCriteria:
    def test_desk_scale_authentication(self, desk_runs):
        accuracy, seconds = desk_runs["caa"]
        report("desk-scale authentication (CAA mode)",
               accuracy >= 0.90 and seconds <= 1800.0,
               f"{DESK_DEVICES} devices x {DESK_SESSIONS} sessions: test accuracy "
               f"{accuracy:.4f} (>= 0.90) in {seconds / 60:.1f} min (<= 30 min)")

    def test_caa_vs_traditional_separation(self, desk_runs):
        caa_acc, _ = desk_runs["caa"]
        trad_acc, _ = desk_runs["traditional"]
        report("CAA vs traditional separation",
               trad_acc <= caa_acc - 0.10,
               f"traditional {trad_acc:.4f} vs CAA {caa_acc:.4f} "
               f"(gap {caa_acc - trad_acc:.3f} >= 0.10)")


class TestNumericalCriteria:
    def test_gradient_correctness(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0.0, 1.0, (2, 16, 8, 1))
        y = np.array([0, 2])
        err = gradient_check(tiny_spec(), x, y)
        report("gradient correctness", err < 1e-4,
               f"max relative error {err:.2e} (< 1e-4, float64 tiny network)")


class TestReproducibilityCriteria:
    def test_generate_determinism(self, tmp_path):
        from caasim.cli import main
        flags = ["generate", "--devices", "2", "--sessions", "6", "--samples", "32",
                 "--seed", "9"]
        assert main(flags + ["--out", str(tmp_path / "a")]) == 0
        assert main(flags + ["--out", str(tmp_path / "b")]) == 0
        same = (tmp_path / "a.caad").read_bytes() == (tmp_path / "b.caad").read_bytes()
        report("generation determinism", same,
               "two cmd_generate runs with identical flags give byte-identical .caad")

    def test_deterministic_training(self, tmp_path):
        base = tmp_path / "toy"
        config = CorpusConfig(num_devices=2, sessions_per_device=10, n_samples=32,
                              master_seed=4)
        payload, manifest = generate_corpus(config)
        write_corpus(payload, manifest, base)

        checkpoints = []
        for name in ("m1.caaw", "m2.caaw"):
            proc = subprocess.run(
                [sys.executable, "-m", "caasim.cli", "train", "--data", str(base),
                 "--out", str(tmp_path / name), "--epochs", "6", "--seed", "5",
                 "--deterministic"],
                capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            checkpoints.append((tmp_path / name).read_bytes())
        report("deterministic training", checkpoints[0] == checkpoints[1],
               "two --deterministic runs produce bit-identical checkpoints")


class TestCodecCriteria:
    def test_codec_round_trip_and_rejection(self, tmp_path):
        config = CorpusConfig(num_devices=2, sessions_per_device=5, n_samples=8,
                              master_seed=13)
        payload, manifest = generate_corpus(config)
        base = tmp_path / "codec"
        write_corpus(payload, manifest, base)
        records, manifest2 = read_corpus(base)
        lossless = (len(records) == manifest.record_count
                    and manifest2.checksum == manifest.checksum)
        regenerated, _ = generate_corpus(config)
        lossless = lossless and regenerated == payload

        write_corpus(b"ZZZZ" + payload[4:], manifest, tmp_path / "badmagic")
        try:
            read_corpus(tmp_path / "badmagic")
            magic_rejected = False
        except CorpusFormatError:
            magic_rejected = True

        write_corpus(payload[:-20], manifest, tmp_path / "short")
        try:
            read_corpus(tmp_path / "short")
            trunc_rejected = False
        except CorpusTruncatedError:
            trunc_rejected = True

        report("codec round-trip and rejection",
               lossless and magic_rejected and trunc_rejected,
               f"lossless={lossless}, corrupted magic rejected={magic_rejected}, "
               f"truncation rejected={trunc_rejected}")
