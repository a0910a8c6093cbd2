#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>

namespace erase {

struct WhiteningTransform {
  Eigen::VectorXd mean;         // per channel
  Eigen::MatrixXd whitening;    // rank x channels
  Eigen::MatrixXd dewhitening;  // channels x rank
  Eigen::VectorXd eigenvalues;  // retained, descending
  Eigen::Index rank = 0;
};

struct Whitened {
  Eigen::MatrixXd data;  // rank x samples, identity covariance (divisor N)
  WhiteningTransform transform;
};

/// Eigenvalues below this fraction of the largest are discarded.
inline constexpr double kWhiteningRelativeFloor = 1e-12;

/// Centres each channel and projects onto the retained covariance eigenvectors.
/// `n_components` defaults to the channel count; a smaller retained rank throws
/// RankDeficiencyError.
Whitened center_and_whiten(const Eigen::MatrixXd& data, std::optional<Eigen::Index> n_components = std::nullopt);

struct FastIcaOptions {
  int max_iter = 1000;
  double tol = 1e-6;
  /// Fresh orthogonal starts after a non-converged attempt.
  int max_restarts = 5;
  /// Throw ConvergenceError instead of returning the best non-converged attempt.
  bool require_convergence = false;
  std::optional<Eigen::Index> n_components;

  void validate() const;
};

struct IcaDiagnostics {
  bool converged = false;
  int iterations = 0;        // of the returned attempt
  int total_iterations = 0;  // across all attempts
  int restarts = 0;
  double final_delta = 1.0;  // 1 - min |diag(W_new W_old^T)| at the last step
};

struct IcaDecomposition {
  Eigen::MatrixXd mixing;    // channels x components; column j holds IC j's channel loadings
  Eigen::MatrixXd unmixing;  // components x channels
  Eigen::MatrixXd sources;   // components x samples, unit variance
  WhiteningTransform whitening;
  IcaDiagnostics diagnostics;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_iter = 0;

  Eigen::Index components() const noexcept { return sources.rows(); }
  Eigen::Index channels() const noexcept { return mixing.rows(); }
};

/// Symmetric fixed-point FastICA with g = tanh on whitened data.
IcaDecomposition fastica(const Eigen::MatrixXd& data, std::uint64_t seed, const FastIcaOptions& options = {});

/// A * S with the rejected source rows zeroed, plus the channel means.
Eigen::MatrixXd reconstruct_without(const IcaDecomposition& dec, const std::set<Eigen::Index>& rejected);

/// (B B^T)^(-1/2) B
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& b);

nlohmann::json decomposition_metadata(const IcaDecomposition& dec);
/// Writes `<stem>.json` (metadata, mixing, unmixing, whitening) and the sources as a recording
/// named `<stem>_sources.json` with a raw payload.
void write_decomposition(const std::filesystem::path& stem, const IcaDecomposition& dec, double sample_rate_hz);
IcaDecomposition read_decomposition(const std::filesystem::path& stem);

}  // namespace erase
