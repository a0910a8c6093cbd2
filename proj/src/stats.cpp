#include "erase/stats.hpp"

#include "erase/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace erase {

double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

BandPowerSeries zscore_to_idle(const BandPowerSeries& p) {
  if (p.idle.rows() != p.movement.rows() || p.idle.rows() != static_cast<Eigen::Index>(p.channels.size())) {
    throw ValidationError("zscore_to_idle: channel counts differ between phases");
  }
  if (p.idle.cols() < 2) throw ValidationError("zscore_to_idle: need at least two idle trials per channel");
  BandPowerSeries z = p;
  z.zscored = true;
  z.flagged.assign(p.channels.size(), false);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index c = 0; c < p.idle.rows(); ++c) {
    const Eigen::RowVectorXd idle = p.idle.row(c);
    const std::span<const double> v(idle.data(), static_cast<std::size_t>(idle.size()));
    const double mu = mean(v);
    const double sd = stddev(v);
    if (!(sd > 1e-300) || !std::isfinite(sd)) {
      z.flagged[static_cast<std::size_t>(c)] = true;
      z.idle.row(c).setConstant(nan);
      z.movement.row(c).setConstant(nan);
      continue;
    }
    z.idle.row(c) = (p.idle.row(c).array() - mu) / sd;
    z.movement.row(c) = (p.movement.row(c).array() - mu) / sd;
  }
  return z;
}

std::vector<double> midranks(std::span<const double> pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("wilcoxon_rank_sum: both samples must be nonempty");
  for (auto s : {a, b}) {
    for (double v : s) {
      if (!std::isfinite(v)) throw ValidationError("wilcoxon_rank_sum: non-finite value");
    }
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t total = n + m;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);

  RankSumResult r;
  r.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  const double expected = static_cast<double>(n) * static_cast<double>(total + 1) / 2.0;
  const double observed_dev = std::abs(r.statistic - expected);

  if (total <= kRankSumExactLimit) {
    r.exact = true;
    std::size_t extreme = 0;
    std::size_t count = 0;
    const std::uint32_t limit = 1U << total;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
      double w = 0.0;
      for (std::size_t i = 0; i < total; ++i) {
        if (mask & (1U << i)) w += ranks[i];
      }
      ++count;
      if (std::abs(w - expected) >= observed_dev - 1e-9) ++extreme;
    }
    r.p_value = std::min(1.0, static_cast<double>(extreme) / static_cast<double>(count));
    return r;
  }

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j + 1 < total && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double N = static_cast<double>(total);
  const double var = nn * mm / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double dev = std::max(0.0, observed_dev - 0.5);
  r.z = dev / std::sqrt(var) * (r.statistic >= expected ? 1.0 : -1.0);
  r.p_value = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  return r;
}

}  // namespace erase
