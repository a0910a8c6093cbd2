#pragma once

#include "erase/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace erase::test {

/// Rows: Laplacian, Laplacian, uniform, sinusoid (first `n_sources` of them), unit variance.
inline Eigen::MatrixXd independent_sources(int n_sources, Eigen::Index samples, std::uint64_t seed) {
  Rng rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> uni(-std::sqrt(3.0), std::sqrt(3.0));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::MatrixXd s(n_sources, samples);
  const double ph = phase(rng);
  for (int r = 0; r < n_sources; ++r) {
    for (Eigen::Index i = 0; i < samples; ++i) {
      if (r < 2) {
        s(r, i) = (coin(rng) ? 1.0 : -1.0) * expo(rng) / std::sqrt(2.0);
      } else if (r == 2) {
        s(r, i) = uni(rng);
      } else {
        s(r, i) = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 0.0037 * static_cast<double>(i) + ph);
      }
    }
  }
  return s;
}

/// Well-conditioned random square mixing matrix.
inline Eigen::MatrixXd random_mixing(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  for (;;) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) > 0.1 * sv(0)) return a;
  }
}

inline double abs_correlation(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const Eigen::RowVectorXd x = a.array() - a.mean();
  const Eigen::RowVectorXd y = b.array() - b.mean();
  return std::abs(x.dot(y)) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

/// Best mean |correlation| over every assignment of recovered rows to true rows.
/// `assignment[i]` receives the recovered row matched to true row i.
inline double matched_correlation(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& recovered,
                                  std::vector<int>* assignment = nullptr) {
  const int n = static_cast<int>(truth.rows());
  Eigen::MatrixXd c(n, recovered.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < recovered.rows(); ++j) c(i, j) = abs_correlation(truth.row(i), recovered.row(j));
  }
  std::vector<int> perm(static_cast<std::size_t>(recovered.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += c(i, perm[static_cast<std::size_t>(i)]);
    if (acc > best) {
      best = acc;
      if (assignment) assignment->assign(perm.begin(), perm.begin() + n);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

inline double relative_frobenius(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / want.norm();
}

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.colwise() - x.rowwise().mean();
  return c * c.transpose() / static_cast<double>(x.cols());
}

}  // namespace erase::test
