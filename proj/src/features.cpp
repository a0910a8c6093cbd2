#include "erase/features.hpp"

#include "erase/error.hpp"

#include <cmath>

namespace erase {

std::vector<BandPowerSeries> trial_band_powers(const std::vector<TrialSegments>& trials,
                                               const std::vector<NamedBand>& bands, StftParams params) {
  if (trials.empty()) throw ValidationError("trial_band_powers: no trials");
  const auto& first = trials.front().idle;
  const auto channels = static_cast<Eigen::Index>(first.channels());
  const auto n_trials = static_cast<Eigen::Index>(trials.size());
  std::vector<FrequencyBand> fb;
  std::vector<BandPowerSeries> out(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    fb.push_back(bands[b].band);
    out[b].band_name = bands[b].name;
    out[b].band = bands[b].band;
    out[b].channels = first.labels();
    out[b].idle.resize(channels, n_trials);
    out[b].movement.resize(channels, n_trials);
    out[b].flagged.assign(first.channels(), false);
  }
  for (Eigen::Index t = 0; t < n_trials; ++t) {
    const auto& seg = trials[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd idle = band_powers(seg.idle, fb, params);
    const Eigen::MatrixXd move = band_powers(seg.movement, fb, params);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      out[b].idle.col(t) = idle.col(static_cast<Eigen::Index>(b));
      out[b].movement.col(t) = move.col(static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

double mean_movement(const BandPowerSeries& z, const std::vector<std::size_t>& rows) {
  double sum = 0.0;
  std::size_t count = 0;
  auto add_row = [&](std::size_t r) {
    if (r < z.flagged.size() && z.flagged[r]) return;
    for (Eigen::Index t = 0; t < z.movement.cols(); ++t) {
      const double v = z.movement(static_cast<Eigen::Index>(r), t);
      if (std::isfinite(v)) {
        sum += v;
        ++count;
      }
    }
  };
  if (rows.empty()) {
    for (std::size_t r = 0; r < static_cast<std::size_t>(z.movement.rows()); ++r) add_row(r);
  } else {
    for (std::size_t r : rows) add_row(r);
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace erase
