#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace erase {

/// Channels x samples, each channel contiguous.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ChannelKind { Eeg, EmgRef };

std::string_view to_string(ChannelKind kind) noexcept;
ChannelKind parse_channel_kind(std::string_view text);

struct FrequencyBand {
  double low_hz = 0.0;
  double high_hz = 0.0;

  /// Throws ValidationError unless 0 <= low < high (and high <= nyquist when given).
  void validate(std::optional<double> sample_rate_hz = std::nullopt) const;
};

inline constexpr FrequencyBand kMuBand{8.0, 12.0};
inline constexpr FrequencyBand kHighFrequencyBand{40.0, 100.0};

/// Immutable multichannel waveform in microvolts. Rows are channels.
class MultiChannelRecording {
 public:
  MultiChannelRecording() = default;
  MultiChannelRecording(std::vector<std::string> labels, std::vector<ChannelKind> kinds,
                        double sample_rate_hz, SignalMatrix data);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<ChannelKind>& kinds() const noexcept { return kinds_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const SignalMatrix& data() const noexcept { return data_; }

  std::size_t channels() const noexcept { return labels_.size(); }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  double duration_s() const noexcept { return static_cast<double>(samples()) / sample_rate_hz_; }

  std::size_t count(ChannelKind kind) const noexcept;
  std::optional<std::size_t> index_of(std::string_view label) const noexcept;

  /// Same labels/kinds/rate with new data of the same row count.
  MultiChannelRecording with_data(SignalMatrix data) const;
  /// Rows [first, first + n).
  MultiChannelRecording slice_channels(std::size_t first, std::size_t n) const;
  /// Columns [first, first + n).
  MultiChannelRecording slice_samples(std::size_t first, std::size_t n) const;
  /// Channels of the given kind, original order preserved.
  MultiChannelRecording select(ChannelKind kind) const;

 private:
  std::vector<std::string> labels_;
  std::vector<ChannelKind> kinds_;
  double sample_rate_hz_ = 1.0;
  SignalMatrix data_;
};

}  // namespace erase
