#pragma once

#include "erase/stats.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace erase {

/// One mixing-matrix column split by ground truth into contaminated EEG rows (a*),
/// uncontaminated EEG rows (a) and reference rows (ã).
struct ArtifactColumnView {
  Eigen::Index column = 0;
  std::vector<double> contaminated;
  std::vector<double> uncontaminated;
  std::vector<double> reference;
};

/// Rows [0, t) are EEG, [t, t + tau) references. Throws if a contaminated row is not an EEG row.
ArtifactColumnView make_column_view(const Eigen::MatrixXd& a, Eigen::Index column,
                                    std::span<const std::size_t> contaminated_rows, std::size_t t, std::size_t tau);

struct ArtifactIndex {
  double value = 0.0;
  /// mean |a| was zero; value is +inf.
  bool infinite = false;
};

/// mean |a*| / mean |a|
ArtifactIndex artifact_index(const ArtifactColumnView& view);

inline constexpr double kEventFactor = 0.05;

/// mean |a*| - mean |a| > 0.05 * max |ã|
bool artifact_event(const ArtifactColumnView& view);

/// Fraction of true values.
double rate_over_datasets(const std::vector<bool>& events);

/// |sum before - sum after| / sum before * 100 over all channels and movement trials
/// of z-scored power. Channels flagged in either series are skipped.
double percent_reduction(const BandPowerSeries& before, const BandPowerSeries& after);

/// The same formula on precomputed sums.
double percent_reduction(double before_sum, double after_sum);

}  // namespace erase
