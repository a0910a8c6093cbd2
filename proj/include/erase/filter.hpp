#pragma once

#include "erase/recording.hpp"

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace erase {

/// One biquad, a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2
};

/// Cascade of biquads (second-order sections).
struct SosFilter {
  std::vector<Biquad> sections;
  int order = 0;  // prototype order the cascade was designed from

  std::complex<double> response(double freq_hz, double sample_rate_hz) const;
};

enum class FilterType { Lowpass, Highpass, Bandpass };

/// Digital Butterworth via the bilinear transform with prewarping. For Bandpass the
/// cascade has 2*order poles. Gain is unity at DC / Nyquist / geometric band centre.
SosFilter butterworth(FilterType type, int order, double f1_hz, double f2_hz, double sample_rate_hz);
SosFilter butterworth_bandpass(int order, FrequencyBand band, double sample_rate_hz);
SosFilter butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz);

/// Reflective (odd) padding length used by zero_phase_filter.
constexpr std::size_t filtfilt_padding(int order) { return 3 * static_cast<std::size_t>(order + 1); }
constexpr std::size_t filtfilt_min_samples(int order) { return 2 * (3 * static_cast<std::size_t>(order) + 1); }

/// Causal pass with steady-state initial conditions scaled by the first input value.
std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x, bool steady_state_init);

/// Forward-backward filtering (zero net phase) with odd reflection at both edges.
std::vector<double> zero_phase_filter(const SosFilter& f, std::span<const double> x);

/// Butterworth bandpass applied forward then backward to every channel.
MultiChannelRecording bandpass_filter(const MultiChannelRecording& rec, FrequencyBand band, int order = 3);

/// Anti-alias lowpass at 0.45 * min(source, target) followed by linear interpolation.
MultiChannelRecording resample(const MultiChannelRecording& rec, double target_rate_hz);

}  // namespace erase
