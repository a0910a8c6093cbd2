#pragma once

#include "erase/eeg_sim.hpp"
#include "erase/emg_sim.hpp"
#include "erase/fastica.hpp"
#include "erase/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace erase {

/// A contamination layout for the event experiments: the first `n_types` EMG types,
/// each on `channels_per_type` EEG channels.
struct EventLayout {
  std::string label;
  std::size_t n_types = 3;
  std::size_t channels_per_type = 2;
};

struct ScenarioConfig {
  std::size_t n_datasets = 20;
  std::size_t n_eeg_channels = 32;
  double duration_s = 10.0;
  double sample_rate_hz = 2000.0;
  /// Idle/movement timing that drives the EMG firing rates.
  double idle_s = 1.0;
  double move_s = 2.0;
  /// Total contaminated channels, split evenly over the first three EMG types.
  std::vector<std::size_t> s1_grid{6, 12, 18, 24, 30};
  std::size_t s1_types = 3;
  /// Number of EMG types, each on s2_channels_per_type channels.
  std::vector<std::size_t> s2_grid{1, 2, 3, 4, 5};
  std::size_t s2_channels_per_type = 6;
  std::vector<EventLayout> event_layouts{{"scenario1", 3, 2}, {"scenario2", 5, 6}};
  double fp_noise_sd_uv = 30.0;
  std::uint64_t master_seed = 0;
  /// EMG types in the order they are added.
  std::vector<MuscleSpec> emg_specs;
  EegSimParams eeg;
  FiberParams fiber;
  FastIcaOptions ica;
  std::vector<std::string> hat_band_labels;  // empty: default ring for the montage
  std::optional<std::filesystem::path> output_dir;
  bool persist_datasets = true;

  ScenarioConfig();
  void validate() const;
  /// Idle/movement windows covering the recording.
  TrialSchedule schedule() const;
};

/// Frontalis, temporalis, masseter, trapezius, eye blink.
std::vector<MuscleSpec> default_scenario_muscles();

/// One simulated dataset before decomposition.
struct SimulatedDataset {
  MultiChannelRecording eeg;           // contaminated
  MultiChannelRecording references;    // EMG_REF rows, one per type
  ContaminationGroundTruth truth;
};

enum class Contaminant { Emg, IndependentNoise };

/// Simulates clean EEG, one EMG per type, contaminates `channels_per_type` random
/// channels per type (disjoint) with normalized weights, and returns the unweighted EMG
/// as references. With IndependentNoise the EEG is contaminated by one Gaussian noise
/// source instead (the references are still the EMG).
SimulatedDataset make_dataset(const ScenarioConfig& cfg, std::size_t n_types, std::size_t channels_per_type,
                              Contaminant contaminant, std::uint64_t seed);

struct AiRecord {
  std::string scenario;
  std::size_t grid_value = 0;
  std::size_t dataset = 0;
  std::string condition;  // erase | conventional
  Eigen::Index ic = 0;
  double ai = 0.0;
  bool infinite = false;
};

struct GridSummary {
  std::size_t grid_value = 0;
  std::size_t datasets_ok = 0;
  std::size_t datasets_failed = 0;
  std::size_t n_erase = 0;
  std::size_t n_conventional = 0;
  double median_erase = 0.0;
  double median_conventional = 0.0;
  RankSumResult test;
};

struct DatasetFailure {
  std::size_t grid_value = 0;
  std::size_t dataset = 0;
  std::string message;
};

struct ScenarioResult {
  std::string scenario;
  std::vector<AiRecord> records;
  std::vector<GridSummary> summary;
  std::vector<DatasetFailure> failures;
};

ScenarioResult run_scenario1(const ScenarioConfig& cfg);
ScenarioResult run_scenario2(const ScenarioConfig& cfg);

struct EventRecord {
  std::string layout;
  std::size_t dataset = 0;
  Eigen::Index ic = 0;
  std::size_t reference_row = 0;
  double mean_contaminated = 0.0;
  double mean_uncontaminated = 0.0;
  double max_reference = 0.0;
  bool event = false;
};

struct EventSummary {
  std::string layout;
  std::size_t datasets_ok = 0;
  std::size_t datasets_failed = 0;
  double rate = 0.0;
  /// Column means of |a*| against column means of |a| across all artifact columns.
  RankSumResult coefficients;
  double median_contaminated = 0.0;
  double median_uncontaminated = 0.0;
};

struct EventResult {
  std::string experiment;  // false_positive | sensitivity
  std::vector<EventRecord> records;
  std::vector<EventSummary> summary;
  std::vector<DatasetFailure> failures;
};

/// Events for every artifact IC of one decomposed dataset (per-reference-row argmax);
/// each column is partitioned by the channel group of the type whose row selected it.
std::vector<EventRecord> dataset_events(const IcaDecomposition& dec, const SimulatedDataset& ds,
                                        const std::string& layout, std::size_t dataset);

EventResult run_false_positive(const ScenarioConfig& cfg);
EventResult run_sensitivity(const ScenarioConfig& cfg);

std::string ai_records_csv(const std::vector<AiRecord>& records);
std::string grid_summary_csv(const ScenarioResult& result);
std::string event_records_csv(const std::vector<EventRecord>& records);
std::string event_summary_csv(const EventResult& result);
std::string failures_csv(const std::vector<DatasetFailure>& failures);

/// Writes metrics.csv, summary.csv and failures.csv under `dir`.
void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioResult& result);
void write_event_outputs(const std::filesystem::path& dir, const EventResult& result);

}  // namespace erase
