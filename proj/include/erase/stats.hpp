#pragma once

#include "erase/recording.hpp"

#include <span>
#include <string>
#include <vector>

namespace erase {

/// Per-channel, per-trial power in one band for the idle and movement phases.
struct BandPowerSeries {
  std::string band_name;
  FrequencyBand band;
  std::vector<std::string> channels;
  Eigen::MatrixXd idle;      // channels x trials
  Eigen::MatrixXd movement;  // channels x trials
  bool zscored = false;
  /// Channels whose idle power has zero spread; their values are NaN after z-scoring.
  std::vector<bool> flagged;

  Eigen::Index trials() const noexcept { return idle.cols(); }
};

/// z = (p - mean_idle) / sd_idle per channel, applied to both phases. Sample SD (n - 1).
BandPowerSeries zscore_to_idle(const BandPowerSeries& powers);

struct RankSumResult {
  double statistic = 0.0;  // rank sum of the first sample (midranks for ties)
  double p_value = 1.0;    // two-sided
  double z = 0.0;          // normal-approximation score, 0 for the exact path
  bool exact = false;
};

/// Combined sample size at or below which the null distribution is enumerated.
inline constexpr std::size_t kRankSumExactLimit = 12;

/// Wilcoxon rank-sum (Mann-Whitney) test. Exact enumeration of the conditional null
/// for small samples, otherwise the normal approximation with tie and continuity
/// corrections.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);
double median(std::vector<double> x);

/// Midranks (1-based) of the pooled values.
std::vector<double> midranks(std::span<const double> pooled);

}  // namespace erase
