"""EMG artifact removal from EEG by reference-augmented ICA."""

import json

from . import _core
from ._core import (
    Decomposition,
    NumericalError,
    Recording,
    ValidationError,
    artifact_event,
    artifact_index,
    default_eeg_labels,
    default_gain_grid,
    default_hat_band_labels,
    fastica,
    percent_reduction,
    reconstruct_without,
    rms_of_reference_rows,
    simulate_eeg,
    simulate_head_emg,
    wilcoxon_rank_sum,
)

__all__ = [
    "Decomposition",
    "NumericalError",
    "Recording",
    "ValidationError",
    "artifact_event",
    "artifact_index",
    "contaminate",
    "default_eeg_labels",
    "default_gain_grid",
    "default_hat_band_labels",
    "fastica",
    "identify_artifact_ics",
    "percent_reduction",
    "reconstruct_without",
    "rms_of_reference_rows",
    "run_conventional_ica",
    "run_erase",
    "run_scenario",
    "simulate_eeg",
    "simulate_head_emg",
    "wilcoxon_rank_sum",
]


def contaminate(eeg, emg, plan):
    """Mix EMG rows into EEG channels. `plan` is a ground-truth dict:
    {"assignments": [{"emg_type": ..., "channels": [...], "weights": [...]}]}."""
    return _core.contaminate(eeg, emg, json.dumps(plan))


def identify_artifact_ics(mixing, eeg_labels, tau, **kwargs):
    """Rejection report for a mixing matrix whose last `tau` rows are references."""
    return json.loads(_core.identify_artifact_ics(mixing, list(eeg_labels), tau, **kwargs))


def run_erase(eeg, refs, **kwargs):
    """Returns (cleaned recording, rejection report dict, decomposition)."""
    cleaned, report, dec = _core.run_erase(eeg, refs, **kwargs)
    return cleaned, json.loads(report), dec


def run_conventional_ica(eeg, **kwargs):
    """ICA on the EEG alone with the hat-band criterion."""
    cleaned, report, dec = _core.run_conventional_ica(eeg, **kwargs)
    return cleaned, json.loads(report), dec


def run_scenario(name, config=None):
    """Runs scenario1, scenario2, false-positive or sensitivity; returns CSV text per output."""
    return dict(_core.run_scenario(name, json.dumps(config or {})))
