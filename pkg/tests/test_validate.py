"""Statistical validation suites pass at the pinned seed."""

import pytest

from caasim.validate import SUITES, run_suite


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suite("nope")


def test_phase_uniformity_suite():
    (result,) = run_suite("phase-uniformity", seed=0)
    assert result.passed, result.summary()
    assert result.p_value > 0.01


def test_snr_suite():
    (result,) = run_suite("snr", seed=0)
    assert result.passed, result.summary()
    assert abs(result.statistic - 20.0) <= 0.3


def test_drift_suite():
    results = run_suite("drift", seed=0)
    for r in results:
        assert r.passed, r.summary()


def test_all_runs_every_suite():
    assert set(SUITES) == {"phase-uniformity", "channel-autocorr", "rayleigh-ks",
                           "snr", "drift"}
