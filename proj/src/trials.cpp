#include "erase/trials.hpp"

#include "erase/error.hpp"

#include <cmath>

namespace erase {

TrialSchedule::TrialSchedule(std::vector<TrialWindow> trials) : trials_(std::move(trials)) {
  double last_end = 0.0;
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    const auto& t = trials_[i];
    const std::string where = "trial " + std::to_string(i);
    if (!(t.idle_start_s >= 0.0) || !(t.idle_len_s > 0.0) || !(t.move_len_s > 0.0)) {
      throw ValidationError(where + ": windows need non-negative starts and positive lengths");
    }
    if (t.idle_start_s < last_end - 1e-9) throw ValidationError(where + ": overlaps the previous trial");
    if (t.move_start_s < t.idle_start_s + t.idle_len_s - 1e-9) {
      throw ValidationError(where + ": movement window overlaps the idle window");
    }
    last_end = t.move_start_s + t.move_len_s;
  }
}

TrialSchedule TrialSchedule::regular(std::size_t n_trials, double idle_s, double move_s, double period_s,
                                     double offset_s) {
  if (period_s < idle_s + move_s) throw ValidationError("regular schedule: period shorter than a trial");
  std::vector<TrialWindow> w;
  w.reserve(n_trials);
  for (std::size_t i = 0; i < n_trials; ++i) {
    const double start = offset_s + static_cast<double>(i) * period_s;
    w.push_back({start, idle_s, start + idle_s, move_s});
  }
  return TrialSchedule(std::move(w));
}

double TrialSchedule::end_s() const noexcept {
  return trials_.empty() ? 0.0 : trials_.back().move_start_s + trials_.back().move_len_s;
}

void TrialSchedule::check_bounds(double duration_s) const {
  if (end_s() > duration_s + 1e-9) {
    throw ValidationError("trial schedule ends at " + std::to_string(end_s()) +
                          " s, beyond the recording (" + std::to_string(duration_s) + " s)");
  }
}

std::size_t to_sample(double t_s, double fs) {
  return static_cast<std::size_t>(std::llround(t_s * fs));
}

namespace {

struct SampleWindow {
  std::size_t first;
  std::size_t len;
};

SampleWindow window(double start_s, double len_s, double fs, std::size_t n) {
  const std::size_t first = to_sample(start_s, fs);
  const std::size_t len = to_sample(len_s, fs);
  if (first + len > n) {
    throw ValidationError("trial window [" + std::to_string(start_s) + ", " + std::to_string(start_s + len_s) +
                          ") s is out of bounds");
  }
  return {first, len};
}

}  // namespace

std::vector<TrialSegments> extract_trials(const MultiChannelRecording& rec, const TrialSchedule& schedule) {
  std::vector<TrialSegments> out;
  out.reserve(schedule.size());
  const double fs = rec.sample_rate_hz();
  for (const auto& t : schedule.trials()) {
    const auto idle = window(t.idle_start_s, t.idle_len_s, fs, rec.samples());
    const auto move = window(t.move_start_s, t.move_len_s, fs, rec.samples());
    out.push_back({rec.slice_samples(idle.first, idle.len), rec.slice_samples(move.first, move.len)});
  }
  return out;
}

TrialEpochs concatenate_trials(const MultiChannelRecording& rec, const TrialSchedule& schedule) {
  const auto segs = extract_trials(rec, schedule);
  TrialEpochs ep;
  std::size_t total = 0;
  for (const auto& s : segs) total += s.idle.samples() + s.movement.samples();
  SignalMatrix data(static_cast<Eigen::Index>(rec.channels()), static_cast<Eigen::Index>(total));
  std::size_t off = 0;
  for (const auto& s : segs) {
    ep.idle_offset.push_back(off);
    ep.idle_len.push_back(s.idle.samples());
    data.middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(s.idle.samples())) = s.idle.data();
    off += s.idle.samples();
    ep.move_offset.push_back(off);
    ep.move_len.push_back(s.movement.samples());
    data.middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(s.movement.samples())) =
        s.movement.data();
    off += s.movement.samples();
  }
  ep.concatenated = rec.with_data(std::move(data));
  return ep;
}

std::vector<TrialSegments> TrialEpochs::split(const MultiChannelRecording& rec) const {
  if (rec.samples() != concatenated.samples()) {
    throw ValidationError("TrialEpochs::split: sample count differs from the epoch layout");
  }
  std::vector<TrialSegments> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.push_back({rec.slice_samples(idle_offset[i], idle_len[i]), rec.slice_samples(move_offset[i], move_len[i])});
  }
  return out;
}

}  // namespace erase
