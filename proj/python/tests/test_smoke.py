import numpy as np
import pytest

import erase


def laplacian_mixture(n=3, samples=20000, seed=1):
    rng = np.random.default_rng(seed)
    s = rng.laplace(size=(n, samples))
    s /= s.std(axis=1, keepdims=True)
    a = rng.normal(size=(n, n)) + 2 * np.eye(n)
    return s, a, a @ s


def test_simulate_eeg_shape_and_peak():
    eeg = erase.simulate_eeg(32, 2.0, 500.0, seed=3)
    assert eeg.channels == 32
    assert eeg.samples == 1000
    assert eeg.labels == erase.default_eeg_labels(32)
    assert set(eeg.kinds) == {"EEG"}
    assert abs(np.abs(eeg.data).max() - 60.0) < 1e-6


def test_fastica_recovers_sources():
    s, _, x = laplacian_mixture()
    dec = erase.fastica(x, seed=5)
    corr = np.abs(np.corrcoef(np.vstack([s, dec.sources]))[:3, 3:])
    assert corr.max(axis=1).min() > 0.95
    assert np.allclose(erase.reconstruct_without(dec, []), x, atol=1e-6 * np.abs(x).max())


def test_rejection_on_identity():
    report = erase.identify_artifact_ics(np.eye(5), ["C3", "Cz", "C4"], 2, gain=1.0, use_hat_band=False)
    assert [ic["index"] for ic in report["artifact_ics"]] == [3, 4]
    assert erase.rms_of_reference_rows(np.eye(5), 3, 2) == pytest.approx(np.sqrt(0.2))


def test_run_erase_and_conventional():
    eeg = erase.simulate_eeg(32, 4.0, 500.0, seed=1)
    emg = erase.simulate_head_emg(["left_frontalis"], 4.0, 500.0, seed=2)
    plan = {"assignments": [{"emg_type": "left_frontalis", "channels": [0, 2], "weights": [0.5, -0.5]}]}
    dirty = erase.contaminate(eeg, emg, plan)
    cleaned, report, dec = erase.run_erase(dirty, emg, gain=1.0, seed=4, max_iter=200, max_restarts=0)
    assert cleaned.labels == eeg.labels
    assert cleaned.data.shape == eeg.data.shape
    assert dec.mixing.shape == (33, 33)
    assert report["tau"] == 1
    _, conv, _ = erase.run_conventional_ica(dirty, seed=4, max_iter=200, max_restarts=0)
    assert all(p == ["hat_band_criterion"] for p in (ic["provenance"] for ic in conv["artifact_ics"]))


def test_metrics_and_stats():
    a = np.full((6, 6), 0.1)
    a[[0, 1], 2] = [0.8, -0.6]
    assert erase.artifact_index(a, 2, [0, 1], 4, 2) == pytest.approx(7.0)
    assert erase.artifact_event(a, 2, [0, 1], 4, 2)
    assert erase.percent_reduction(10.0, 2.5) == pytest.approx(75.0)
    r = erase.wilcoxon_rank_sum([1, 2, 3, 4], [5, 6, 7, 8])
    assert r["exact"] and r["p_value"] == pytest.approx(2 / 70)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        erase.simulate_eeg(32, 1.0, 100.0)
    x = np.random.default_rng(0).normal(size=(3, 500))
    x[2] = x[0]
    with pytest.raises(erase.NumericalError):
        erase.fastica(x)


def test_tiny_scenario_is_deterministic():
    cfg = {"n_datasets": 2, "duration_s": 4.0, "sample_rate_hz": 1000.0, "s1_grid": [6],
           "ica": {"max_iter": 100, "max_restarts": 0}, "master_seed": 3}
    a = erase.run_scenario("scenario1", cfg)
    b = erase.run_scenario("scenario1", cfg)
    assert a == b
    assert a["metrics"].startswith("scenario,")
