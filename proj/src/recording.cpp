#include "erase/recording.hpp"

#include "erase/error.hpp"

#include <cmath>
#include <unordered_set>

namespace erase {

std::string_view to_string(ChannelKind kind) noexcept {
  return kind == ChannelKind::Eeg ? "EEG" : "EMG_REF";
}

ChannelKind parse_channel_kind(std::string_view text) {
  if (text == "EEG") return ChannelKind::Eeg;
  if (text == "EMG_REF") return ChannelKind::EmgRef;
  throw ValidationError("unknown channel kind '" + std::string(text) + "'");
}

void FrequencyBand::validate(std::optional<double> sample_rate_hz) const {
  if (!(low_hz >= 0.0) || !(high_hz > low_hz)) {
    throw ValidationError("invalid frequency band [" + std::to_string(low_hz) + ", " +
                          std::to_string(high_hz) + "] Hz");
  }
  if (sample_rate_hz && high_hz > *sample_rate_hz / 2.0) {
    throw ValidationError("band upper edge " + std::to_string(high_hz) + " Hz exceeds Nyquist (" +
                          std::to_string(*sample_rate_hz / 2.0) + " Hz)");
  }
}

MultiChannelRecording::MultiChannelRecording(std::vector<std::string> labels,
                                             std::vector<ChannelKind> kinds, double sample_rate_hz,
                                             SignalMatrix data)
    : labels_(std::move(labels)),
      kinds_(std::move(kinds)),
      sample_rate_hz_(sample_rate_hz),
      data_(std::move(data)) {
  if (labels_.size() != kinds_.size() || static_cast<Eigen::Index>(labels_.size()) != data_.rows()) {
    throw ValidationError("recording: labels (" + std::to_string(labels_.size()) + "), kinds (" +
                          std::to_string(kinds_.size()) + ") and data rows (" +
                          std::to_string(data_.rows()) + ") differ");
  }
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
    throw ValidationError("recording: sample rate must be positive");
  }
  if (!data_.allFinite()) throw ValidationError("recording: data contains non-finite values");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ValidationError("recording: duplicate channel label '" + l + "'");
  }
}

std::size_t MultiChannelRecording::count(ChannelKind kind) const noexcept {
  std::size_t n = 0;
  for (auto k : kinds_) n += (k == kind);
  return n;
}

std::optional<std::size_t> MultiChannelRecording::index_of(std::string_view label) const noexcept {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

MultiChannelRecording MultiChannelRecording::with_data(SignalMatrix data) const {
  return MultiChannelRecording(labels_, kinds_, sample_rate_hz_, std::move(data));
}

MultiChannelRecording MultiChannelRecording::slice_channels(std::size_t first, std::size_t n) const {
  if (first + n > channels()) throw ValidationError("slice_channels: range out of bounds");
  std::vector<std::string> labels(labels_.begin() + first, labels_.begin() + first + n);
  std::vector<ChannelKind> kinds(kinds_.begin() + first, kinds_.begin() + first + n);
  SignalMatrix d = data_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(n));
  return MultiChannelRecording(std::move(labels), std::move(kinds), sample_rate_hz_, std::move(d));
}

MultiChannelRecording MultiChannelRecording::slice_samples(std::size_t first, std::size_t n) const {
  if (first + n > samples()) throw ValidationError("slice_samples: range out of bounds");
  SignalMatrix d = data_.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(n));
  return MultiChannelRecording(labels_, kinds_, sample_rate_hz_, std::move(d));
}

MultiChannelRecording MultiChannelRecording::select(ChannelKind kind) const {
  std::vector<std::string> labels;
  std::vector<ChannelKind> kinds;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (kinds_[i] != kind) continue;
    labels.push_back(labels_[i]);
    kinds.push_back(kind);
    rows.push_back(static_cast<Eigen::Index>(i));
  }
  SignalMatrix d(static_cast<Eigen::Index>(rows.size()), data_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) d.row(static_cast<Eigen::Index>(r)) = data_.row(rows[r]);
  return MultiChannelRecording(std::move(labels), std::move(kinds), sample_rate_hz_, std::move(d));
}

}  // namespace erase
