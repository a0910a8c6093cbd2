#include "erase/fastica.hpp"

#include "erase/error.hpp"
#include "erase/random.hpp"
#include "erase/recording.hpp"
#include "erase/recording_io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace erase {

namespace {

Eigen::MatrixXd json_to_matrix(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c) throw ValidationError("decomposition: ragged matrix");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd json_to_vector(const nlohmann::json& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = v[static_cast<std::size_t>(i)].get<double>();
  return out;
}

// tanh(y) = 1 - 2 / (exp(2y) + 1), which vectorizes through exp.
void tanh_inplace(Eigen::MatrixXd& y) {
  y = 1.0 - 2.0 / ((2.0 * y.array()).exp() + 1.0);
}

}  // namespace

Whitened center_and_whiten(const Eigen::MatrixXd& data, std::optional<Eigen::Index> n_components) {
  const Eigen::Index channels = data.rows();
  const Eigen::Index n = data.cols();
  if (channels < 1) throw ValidationError("center_and_whiten: no channels");
  if (n <= channels) {
    throw ValidationError("center_and_whiten: need more samples (" + std::to_string(n) + ") than channels (" +
                          std::to_string(channels) + ")");
  }
  const Eigen::Index requested = n_components.value_or(channels);
  if (requested < 1 || requested > channels) throw ValidationError("center_and_whiten: invalid component count");
  if (!data.allFinite()) throw ValidationError("center_and_whiten: non-finite input");

  Whitened w;
  w.transform.mean = data.rowwise().mean();
  Eigen::MatrixXd centered = data.colwise() - w.transform.mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("center_and_whiten: eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
  const double top = vals(channels - 1);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < channels; ++i) rank += (top > 0.0 && vals(i) >= kWhiteningRelativeFloor * top);
  if (rank < requested) {
    throw RankDeficiencyError("center_and_whiten: covariance rank " + std::to_string(rank) + " is below the " +
                                  std::to_string(requested) + " requested components",
                              static_cast<int>(rank), static_cast<int>(requested));
  }
  const Eigen::Index k = requested;
  WhiteningTransform& t = w.transform;
  t.rank = k;
  t.eigenvalues.resize(k);
  t.whitening.resize(k, channels);
  t.dewhitening.resize(channels, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = channels - 1 - i;
    const double lambda = vals(src);
    t.eigenvalues(i) = lambda;
    t.whitening.row(i) = eig.eigenvectors().col(src).transpose() / std::sqrt(lambda);
    t.dewhitening.col(i) = eig.eigenvectors().col(src) * std::sqrt(lambda);
  }
  w.data = t.whitening * centered;
  return w;
}

void FastIcaOptions::validate() const {
  if (max_iter < 1) throw ValidationError("fastica: max_iter must be >= 1");
  if (!(tol > 0.0 && tol < 1.0)) throw ValidationError("fastica: tol must be in (0, 1)");
  if (max_restarts < 0) throw ValidationError("fastica: max_restarts must be >= 0");
}

Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b * b.transpose());
  const Eigen::VectorXd s = eig.eigenvalues();
  if (eig.info() != Eigen::Success || !(s.minCoeff() > 0.0)) {
    throw NumericalError("fastica: singular matrix in symmetric decorrelation");
  }
  const Eigen::MatrixXd& u = eig.eigenvectors();
  return u * s.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose() * b;
}

IcaDecomposition fastica(const Eigen::MatrixXd& data, std::uint64_t seed, const FastIcaOptions& options) {
  options.validate();
  Whitened w = center_and_whiten(data, options.n_components);
  const Eigen::MatrixXd& z = w.data;
  const Eigen::Index k = z.rows();
  const double n = static_cast<double>(z.cols());

  IcaDiagnostics diag;
  Eigen::MatrixXd best;
  double best_delta = 2.0;
  int best_iterations = 0;
  Eigen::MatrixXd y(k, z.cols());
  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd b(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) b(i, j) = normal(rng);
    }
    b = symmetric_decorrelation(b);
    double delta = 1.0;
    int it = 0;
    bool converged = false;
    while (it < options.max_iter) {
      y.noalias() = b * z;
      tanh_inplace(y);
      const Eigen::VectorXd gprime = (1.0 - y.array().square()).rowwise().mean();
      Eigen::MatrixXd next = (y * z.transpose()) / n - gprime.asDiagonal() * b;
      next = symmetric_decorrelation(next);
      ++it;
      delta = 1.0 - (next * b.transpose()).diagonal().cwiseAbs().minCoeff();
      b = std::move(next);
      if (!b.allFinite()) throw NumericalError("fastica: iteration produced non-finite values");
      if (delta < options.tol) {
        converged = true;
        break;
      }
    }
    diag.total_iterations += it;
    diag.restarts = attempt;
    if (converged || delta < best_delta) {
      best = b;
      best_delta = delta;
      best_iterations = it;
    }
    if (converged) {
      diag.converged = true;
      break;
    }
  }
  diag.iterations = best_iterations;
  diag.final_delta = best_delta;
  if (!diag.converged && options.require_convergence) {
    throw ConvergenceError("fastica: no convergence after " + std::to_string(diag.restarts + 1) + " attempts (" +
                           std::to_string(diag.total_iterations) + " iterations, final delta " +
                           std::to_string(best_delta) + ")");
  }

  IcaDecomposition dec;
  dec.unmixing = best * w.transform.whitening;
  dec.mixing = w.transform.dewhitening * best.transpose();
  dec.sources = best * z;
  dec.whitening = std::move(w.transform);
  dec.diagnostics = diag;
  dec.seed = seed;
  dec.tol = options.tol;
  dec.max_iter = options.max_iter;
  return dec;
}

Eigen::MatrixXd reconstruct_without(const IcaDecomposition& dec, const std::set<Eigen::Index>& rejected) {
  Eigen::MatrixXd a = dec.mixing;
  for (Eigen::Index j : rejected) {
    if (j < 0 || j >= a.cols()) throw ValidationError("reconstruct_without: IC index " + std::to_string(j) + " out of range");
    a.col(j).setZero();
  }
  Eigen::MatrixXd out = a * dec.sources;
  out.colwise() += dec.whitening.mean;
  return out;
}

nlohmann::json decomposition_metadata(const IcaDecomposition& dec) {
  return {{"channels", dec.channels()},
          {"components", dec.components()},
          {"samples", dec.sources.cols()},
          {"seed", dec.seed},
          {"tol", dec.tol},
          {"max_iter", dec.max_iter},
          {"converged", dec.diagnostics.converged},
          {"iterations", dec.diagnostics.iterations},
          {"total_iterations", dec.diagnostics.total_iterations},
          {"restarts", dec.diagnostics.restarts},
          {"final_delta", dec.diagnostics.final_delta}};
}

void write_decomposition(const std::filesystem::path& stem, const IcaDecomposition& dec, double sample_rate_hz) {
  nlohmann::json doc = decomposition_metadata(dec);
  doc["mixing"] = matrix_to_json(dec.mixing);
  doc["unmixing"] = matrix_to_json(dec.unmixing);
  doc["whitening"] = matrix_to_json(dec.whitening.whitening);
  doc["dewhitening"] = matrix_to_json(dec.whitening.dewhitening);
  doc["eigenvalues"] = std::vector<double>(dec.whitening.eigenvalues.begin(), dec.whitening.eigenvalues.end());
  doc["mean"] = std::vector<double>(dec.whitening.mean.begin(), dec.whitening.mean.end());
  const auto sources_name = stem.filename().string() + "_sources.json";
  doc["sources_file"] = sources_name;
  write_json_file(stem.string() + ".json", doc);

  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < dec.components(); ++i) labels.push_back("IC" + std::to_string(i + 1));
  SignalMatrix s = dec.sources;
  MultiChannelRecording rec(std::move(labels), std::vector<ChannelKind>(static_cast<std::size_t>(dec.components()), ChannelKind::Eeg),
                            sample_rate_hz, std::move(s));
  write_recording(stem.parent_path() / sources_name, rec, PayloadFormat::Raw);
}

IcaDecomposition read_decomposition(const std::filesystem::path& stem) {
  const auto doc = read_json_file(stem.string() + ".json");
  try {
    IcaDecomposition dec;
    dec.mixing = json_to_matrix(doc.at("mixing"));
    dec.unmixing = json_to_matrix(doc.at("unmixing"));
    dec.whitening.whitening = json_to_matrix(doc.at("whitening"));
    dec.whitening.dewhitening = json_to_matrix(doc.at("dewhitening"));
    dec.whitening.eigenvalues = json_to_vector(doc.at("eigenvalues"));
    dec.whitening.mean = json_to_vector(doc.at("mean"));
    dec.whitening.rank = dec.whitening.eigenvalues.size();
    dec.seed = doc.at("seed").get<std::uint64_t>();
    dec.tol = doc.at("tol").get<double>();
    dec.max_iter = doc.at("max_iter").get<int>();
    dec.diagnostics.converged = doc.at("converged").get<bool>();
    dec.diagnostics.iterations = doc.at("iterations").get<int>();
    dec.diagnostics.total_iterations = doc.at("total_iterations").get<int>();
    dec.diagnostics.restarts = doc.at("restarts").get<int>();
    dec.diagnostics.final_delta = doc.at("final_delta").get<double>();
    const auto rec = read_recording(stem.parent_path() / doc.at("sources_file").get<std::string>());
    dec.sources = rec.data();
    if (dec.sources.rows() != dec.mixing.cols()) throw ValidationError("decomposition: sources do not match mixing");
    return dec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("decomposition document: ") + e.what());
  }
}

}  // namespace erase
