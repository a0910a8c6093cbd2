#pragma once

#include "erase/eeg_sim.hpp"
#include "erase/emg_sim.hpp"
#include "erase/fastica.hpp"
#include "erase/rejection.hpp"
#include "erase/stats.hpp"
#include "erase/trials.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace erase {

/// One muscle contaminating a named set of EEG channels.
struct MuscleContamination {
  std::string muscle;
  std::vector<std::string> channels;
};

struct SessionConfig {
  std::size_t n_eeg_channels = 32;
  double eeg_rate_hz = 1024.0;
  /// Rate at which the muscle signals are generated before alignment to the EEG.
  double emg_rate_hz = 2000.0;
  std::size_t n_trials = 10;
  double idle_s = 1.0;
  double move_s = 2.0;
  double trial_period_s = 10.0;
  double lead_s = 2.0;
  std::string mu_channel = "C3";
  double mu_frequency_hz = 10.0;
  double mu_amplitude_uv = 5.0;
  /// Fractional amplitude drop of the injected rhythm during movement.
  double erd_depth = 0.3;
  /// Raised-cosine ramp at each movement edge.
  double erd_ramp_s = 0.1;
  std::vector<MuscleContamination> contamination{
      {"left_frontalis", {"Fp1", "F3", "F7"}},
      {"right_frontalis", {"Fp2", "F4", "F8"}},
      {"left_temporalis", {"T7", "FC5", "CP5", "TP9"}},
      {"right_temporalis", {"T8", "FC6", "CP6", "TP10"}}};
  /// Scale applied to the normalized contamination weights. 1.1 puts the mean
  /// baseline movement HF z over channels and trials near 0.32, the level seen
  /// in real recordings.
  double contamination_gain = 1.1;
  /// Sensor noise on the recorded reference channels.
  double reference_noise_uv = 1.0;
  FrequencyBand preprocessing_band{3.0, 100.0};
  int preprocessing_order = 3;
  double mu_alpha = 0.01;
  double hf_alpha = 0.05;
  std::vector<MuscleSpec> muscles;  // empty: defaults for the contaminating muscles
  EegSimParams eeg;
  FiberParams fiber;
  FastIcaOptions ica;
  std::vector<std::string> hat_band_labels;  // empty: default ring for the montage
  /// Fixed gain instead of the sweep.
  std::optional<double> gain;
  StftParams stft;

  SessionConfig();
  void validate() const;
  TrialSchedule schedule() const;
  double duration_s() const;
  std::vector<MuscleSpec> muscle_specs() const;
};

struct SessionRecordSet {
  std::string subject = "sim";
  std::string session = "0";
  MultiChannelRecording eeg;
  /// Recorded reference EMG, already aligned to the EEG rate and length.
  MultiChannelRecording real_references;
  TrialSchedule schedule;
  std::string mu_channel = "C3";
  std::optional<ContaminationGroundTruth> truth;
};

/// Simulated EEG with an injected mu rhythm at the mu channel whose amplitude drops by
/// erd_depth during movement, contaminated by muscle EMG generated at emg_rate_hz and
/// resampled to the EEG rate. The same muscle signals plus sensor noise are returned as
/// the recorded references.
SessionRecordSet make_pseudo_real_session(const SessionConfig& cfg, std::uint64_t seed);

enum class SessionCondition { Baseline, EraseReal, EraseSimulated, Conventional };
std::string_view to_string(SessionCondition c) noexcept;
SessionCondition parse_session_condition(std::string_view text);

struct ConditionResult {
  SessionCondition condition = SessionCondition::Baseline;
  BandPowerSeries mu;  // z-scored
  BandPowerSeries hf;  // z-scored
  std::vector<double> mu_p;  // idle vs movement, per channel
  std::vector<double> hf_p;
  std::optional<RejectionReport> report;
  std::optional<IcaDiagnostics> diagnostics;
  double hf_percent_reduction = 0.0;  // against the baseline
};

/// Mean movement z per channel; with `alpha` set, channels with p >= alpha are zeroed.
std::vector<double> channel_movement_means(const BandPowerSeries& z, const std::vector<double>& p = {},
                                           std::optional<double> alpha = std::nullopt);

/// Bandpass, epoch and concatenate, clean according to the condition, then per-trial
/// mu and HF power z-scored to idle with per-channel rank-sum significance.
/// `baseline_hf` (z-scored) is the denominator of the percent reduction.
ConditionResult run_session_pipeline(const SessionRecordSet& session, SessionCondition condition,
                                     const SessionConfig& cfg, std::uint64_t seed,
                                     const BandPowerSeries* baseline_hf = nullptr);

struct ConditionSummary {
  std::string condition;
  std::size_t n_rejected = 0;
  std::optional<double> gain;
  double hf_percent_reduction = 0.0;
  double hf_mean_z = 0.0;
  double mu_mean_z_at_mu_channel = 0.0;
  std::vector<std::string> channels;
  std::vector<double> mu_z;
  std::vector<double> hf_z;
  std::vector<double> mu_z_nulled;
  std::vector<double> hf_z_nulled;
  std::vector<double> mu_p;
  std::vector<double> hf_p;
};

struct SessionSummary {
  std::string subject;
  std::string session;
  std::uint64_t seed = 0;
  std::string mu_channel;
  std::vector<ConditionSummary> conditions;  // baseline first

  const ConditionSummary* find(std::string_view condition) const;
};

struct SessionRun {
  SessionSummary summary;
  std::vector<ConditionResult> results;
};

/// Baseline plus the requested conditions.
SessionRun run_session(const SessionRecordSet& session, const SessionConfig& cfg, std::uint64_t seed,
                       const std::vector<SessionCondition>& conditions = {SessionCondition::EraseReal,
                                                                          SessionCondition::EraseSimulated,
                                                                          SessionCondition::Conventional});

nlohmann::json to_json(const SessionSummary& s);
SessionSummary session_summary_from_json(const nlohmann::json& doc);

/// summary.json, band_power.csv (per channel, band and condition) and each condition's
/// rejection report and gain sweep.
void write_session_outputs(const std::filesystem::path& dir, const SessionRun& run);

}  // namespace erase
