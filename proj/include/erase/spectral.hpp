#pragma once

#include "erase/recording.hpp"

#include <span>
#include <vector>

namespace erase {

struct StftParams {
  double window_s = 0.5;  // Hann
  double hop_s = 0.125;
};

/// Per-channel band power: one-sided PSD summed over the bins inside [low, high]
/// (times the bin width), averaged over STFT frames. Units are uV^2.
Eigen::VectorXd band_power(const MultiChannelRecording& segment, FrequencyBand band, StftParams params = {});

/// Several bands from one STFT pass; result is channels x bands.
Eigen::MatrixXd band_powers(const MultiChannelRecording& segment, std::span<const FrequencyBand> bands,
                            StftParams params = {});

/// Single-channel form used by the inner loops; returns one value per band.
std::vector<double> band_powers(std::span<const double> x, double sample_rate_hz,
                                std::span<const FrequencyBand> bands, StftParams params = {});

}  // namespace erase
