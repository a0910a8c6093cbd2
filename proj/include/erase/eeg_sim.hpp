#pragma once

#include "erase/recording.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace erase {

struct EegSimParams {
  /// Each band's upper edge is capped at 0.45 * sample rate.
  std::vector<FrequencyBand> bands{{1, 30}, {20, 40}, {40, 80}, {80, 100}, {100, 200}};
  /// Linear mixing weight per band.
  std::vector<double> band_weights{1, 1, 1, 1, 1};
  int filter_order = 4;
  double smoothing_sd_channels = 4.0;
  double max_amplitude_uv = 60.0;

  void validate() const;
};

/// The 32-channel cap labels for n = 32, otherwise "E1".."En".
std::vector<std::string> default_eeg_labels(std::size_t n_channels);

/// Row i holds the wrap-around Gaussian weights centred on channel i; rows sum to 1.
Eigen::MatrixXd circular_smoothing_kernel(std::size_t n_channels, double sd_channels);

/// Band-limited Gaussian noise per channel, circularly smoothed across channels and
/// scaled so the global maximum absolute value equals max_amplitude_uv.
MultiChannelRecording simulate_eeg(std::size_t n_channels, double duration_s, double sample_rate_hz,
                                   std::uint64_t seed, const EegSimParams& params = {});

/// n standard-normal draws divided by the sum of their magnitudes.
std::vector<double> draw_contamination_weights(std::size_t n, std::uint64_t seed);

struct ContaminationAssignment {
  /// Label of the contaminant channel in the EMG recording.
  std::string emg_type;
  std::vector<std::size_t> channels;
  std::vector<double> weights;
};

struct ContaminationGroundTruth {
  std::vector<ContaminationAssignment> assignments;
  std::uint64_t rng_seed = 0;

  /// Indices unique across assignments and below n_eeg; weights finite, one per channel.
  void validate(std::size_t n_eeg) const;
  /// All contaminated channel indices, in assignment order.
  std::vector<std::size_t> contaminated_channels() const;
  const ContaminationAssignment* find(const std::string& emg_type) const;
};

nlohmann::json to_json(const ContaminationGroundTruth& gt);
ContaminationGroundTruth ground_truth_from_json(const nlohmann::json& doc);

/// Adds weight * emg[emg_type] to each assigned EEG channel; other rows are untouched.
MultiChannelRecording contaminate(const MultiChannelRecording& eeg, const MultiChannelRecording& emg,
                                  const ContaminationGroundTruth& plan);

/// EEG rows followed by the reference rows.
MultiChannelRecording append_reference_channels(const MultiChannelRecording& eeg, const MultiChannelRecording& refs);

}  // namespace erase
