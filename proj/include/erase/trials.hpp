#pragma once

#include "erase/recording.hpp"

#include <vector>

namespace erase {

struct TrialWindow {
  double idle_start_s = 0.0;
  double idle_len_s = 0.0;
  double move_start_s = 0.0;
  double move_len_s = 0.0;
};

/// Idle/movement windows in chronological order, non-overlapping.
class TrialSchedule {
 public:
  TrialSchedule() = default;
  explicit TrialSchedule(std::vector<TrialWindow> trials);

  /// `n_trials` repetitions of (idle, movement) starting at `offset_s`, spaced `period_s` apart.
  static TrialSchedule regular(std::size_t n_trials, double idle_s, double move_s, double period_s,
                               double offset_s = 0.0);

  const std::vector<TrialWindow>& trials() const noexcept { return trials_; }
  std::size_t size() const noexcept { return trials_.size(); }
  bool empty() const noexcept { return trials_.empty(); }
  /// End of the last window, 0 when empty.
  double end_s() const noexcept;

  /// Throws ValidationError when any window falls outside [0, duration_s].
  void check_bounds(double duration_s) const;

 private:
  std::vector<TrialWindow> trials_;
};

struct TrialSegments {
  MultiChannelRecording idle;
  MultiChannelRecording movement;
};

/// Sample index of a time, rounded to the nearest sample.
std::size_t to_sample(double t_s, double sample_rate_hz);

/// Copies out each trial's idle and movement segment.
std::vector<TrialSegments> extract_trials(const MultiChannelRecording& rec, const TrialSchedule& schedule);

/// Trials laid end to end as [idle_0, move_0, idle_1, move_1, ...] with the offsets
/// needed to split them again.
struct TrialEpochs {
  MultiChannelRecording concatenated;
  std::vector<std::size_t> idle_offset;
  std::vector<std::size_t> idle_len;
  std::vector<std::size_t> move_offset;
  std::vector<std::size_t> move_len;

  std::size_t size() const noexcept { return idle_offset.size(); }
  /// Splits `rec` (same sample count as `concatenated`) back into trial segments.
  std::vector<TrialSegments> split(const MultiChannelRecording& rec) const;
};

TrialEpochs concatenate_trials(const MultiChannelRecording& rec, const TrialSchedule& schedule);

}  // namespace erase
