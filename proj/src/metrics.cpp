#include "erase/metrics.hpp"

#include "erase/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace erase {

namespace {

double mean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

ArtifactColumnView make_column_view(const Eigen::MatrixXd& a, Eigen::Index column,
                                    std::span<const std::size_t> contaminated_rows, std::size_t t, std::size_t tau) {
  if (static_cast<std::size_t>(a.rows()) != t + tau) throw ValidationError("column view: row count is not t + tau");
  if (column < 0 || column >= a.cols()) throw ValidationError("column view: column out of range");
  std::vector<bool> hit(t, false);
  for (std::size_t r : contaminated_rows) {
    if (r >= t) throw ValidationError("column view: contaminated row " + std::to_string(r) + " is not an EEG row");
    hit[r] = true;
  }
  ArtifactColumnView v;
  v.column = column;
  for (std::size_t i = 0; i < t + tau; ++i) {
    const double x = a(static_cast<Eigen::Index>(i), column);
    if (i >= t) {
      v.reference.push_back(x);
    } else if (hit[i]) {
      v.contaminated.push_back(x);
    } else {
      v.uncontaminated.push_back(x);
    }
  }
  return v;
}

ArtifactIndex artifact_index(const ArtifactColumnView& view) {
  if (view.contaminated.empty() || view.uncontaminated.empty()) {
    throw ValidationError("artifact_index: need at least one contaminated and one uncontaminated row");
  }
  const double num = mean_abs(view.contaminated);
  const double den = mean_abs(view.uncontaminated);
  if (den == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {num / den, false};
}

bool artifact_event(const ArtifactColumnView& view) {
  if (view.contaminated.empty() || view.uncontaminated.empty() || view.reference.empty()) {
    throw ValidationError("artifact_event: need contaminated, uncontaminated and reference rows");
  }
  double ref_max = 0.0;
  for (double x : view.reference) ref_max = std::max(ref_max, std::abs(x));
  return mean_abs(view.contaminated) - mean_abs(view.uncontaminated) > kEventFactor * ref_max;
}

double rate_over_datasets(const std::vector<bool>& events) {
  if (events.empty()) throw ValidationError("rate_over_datasets: no datasets");
  const auto hits = std::count(events.begin(), events.end(), true);
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

double percent_reduction(double before_sum, double after_sum) {
  if (before_sum == 0.0 || !std::isfinite(before_sum)) {
    throw NumericalError("percent_reduction: baseline sum is zero or non-finite");
  }
  return std::abs(before_sum - after_sum) / before_sum * 100.0;
}

double percent_reduction(const BandPowerSeries& before, const BandPowerSeries& after) {
  if (before.movement.rows() != after.movement.rows() || before.movement.cols() != after.movement.cols() ||
      before.channels != after.channels) {
    throw ValidationError("percent_reduction: series differ in channel/trial structure");
  }
  double sb = 0.0;
  double sa = 0.0;
  for (Eigen::Index c = 0; c < before.movement.rows(); ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const bool skip = (ci < before.flagged.size() && before.flagged[ci]) || (ci < after.flagged.size() && after.flagged[ci]);
    if (skip) continue;
    sb += before.movement.row(c).sum();
    sa += after.movement.row(c).sum();
  }
  return percent_reduction(sb, sa);
}

}  // namespace erase
