#include "erase/eeg_sim.hpp"

#include "erase/error.hpp"
#include "erase/filter.hpp"
#include "erase/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace erase {

void EegSimParams::validate() const {
  if (bands.empty() || bands.size() != band_weights.size()) {
    throw ValidationError("eeg params: need one weight per band");
  }
  for (const auto& b : bands) b.validate();
  for (double w : band_weights) {
    if (!std::isfinite(w)) throw ValidationError("eeg params: band weights must be finite");
  }
  if (filter_order < 1) throw ValidationError("eeg params: filter order must be >= 1");
  if (!(smoothing_sd_channels > 0.0)) throw ValidationError("eeg params: smoothing SD must be positive");
  if (!(max_amplitude_uv > 0.0)) throw ValidationError("eeg params: max amplitude must be positive");
}

std::vector<std::string> default_eeg_labels(std::size_t n_channels) {
  static const char* cap32[] = {"Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FC5", "FC1", "FC2", "FC6",
                                "T7",  "C3",  "Cz",  "C4",  "T8",  "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
                                "P7",  "P3",  "Pz",  "P4",  "P8",  "PO9", "O1",  "Oz",  "O2",  "PO10"};
  std::vector<std::string> out;
  if (n_channels == 32) return {std::begin(cap32), std::end(cap32)};
  for (std::size_t i = 0; i < n_channels; ++i) out.push_back("E" + std::to_string(i + 1));
  return out;
}

Eigen::MatrixXd circular_smoothing_kernel(std::size_t n_channels, double sd_channels) {
  const auto n = static_cast<Eigen::Index>(n_channels);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index d = std::abs(i - j);
      const double dist = static_cast<double>(std::min(d, n - d));
      k(i, j) = std::exp(-dist * dist / (2.0 * sd_channels * sd_channels));
    }
    k.row(i) /= k.row(i).sum();
  }
  return k;
}

MultiChannelRecording simulate_eeg(std::size_t n_channels, double duration_s, double sample_rate_hz,
                                   std::uint64_t seed, const EegSimParams& params) {
  params.validate();
  if (n_channels < 8) throw ValidationError("simulate_eeg: need at least 8 channels");
  if (!(duration_s > 0.0)) throw ValidationError("simulate_eeg: duration must be positive");
  if (!(sample_rate_hz >= 400.0)) throw ValidationError("simulate_eeg: sample rate must be at least 400 Hz");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  if (n < filtfilt_min_samples(params.filter_order)) throw ValidationError("simulate_eeg: duration too short");

  std::vector<SosFilter> filters;
  for (const auto& b : params.bands) {
    const double hi = std::min(b.high_hz, 0.45 * sample_rate_hz);
    if (!(hi > b.low_hz)) throw ValidationError("simulate_eeg: band does not fit below 0.45 * sample rate");
    filters.push_back(butterworth_bandpass(params.filter_order, {b.low_hz, hi}, sample_rate_hz));
  }

  const auto rows = static_cast<Eigen::Index>(n_channels);
  const auto cols = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(rows, cols);
  std::vector<double> noise(n);
  for (std::size_t c = 0; c < n_channels; ++c) {
    for (std::size_t b = 0; b < filters.size(); ++b) {
      Rng rng(derive_seed(seed, {c, b}));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& v : noise) v = normal(rng);
      const auto y = zero_phase_filter(filters[b], noise);
      for (std::size_t k = 0; k < n; ++k) {
        raw(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) += params.band_weights[b] * y[k];
      }
    }
  }
  SignalMatrix data = circular_smoothing_kernel(n_channels, params.smoothing_sd_channels) * raw;
  const double peak = data.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw NumericalError("simulate_eeg: generated signal is identically zero");
  data *= params.max_amplitude_uv / peak;
  return MultiChannelRecording(default_eeg_labels(n_channels), std::vector<ChannelKind>(n_channels, ChannelKind::Eeg),
                               sample_rate_hz, std::move(data));
}

std::vector<double> draw_contamination_weights(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("draw_contamination_weights: n must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  while (!(total > 0.0)) {
    total = 0.0;
    for (double& v : w) {
      v = normal(rng);
      total += std::abs(v);
    }
  }
  for (double& v : w) v /= total;
  return w;
}

void ContaminationGroundTruth::validate(std::size_t n_eeg) const {
  std::set<std::size_t> seen;
  for (const auto& a : assignments) {
    if (a.channels.size() != a.weights.size()) {
      throw ValidationError("ground truth: '" + a.emg_type + "' needs one weight per channel");
    }
    for (std::size_t c : a.channels) {
      if (c >= n_eeg) throw ValidationError("ground truth: channel index " + std::to_string(c) + " out of range");
      if (!seen.insert(c).second) {
        throw ValidationError("ground truth: channel " + std::to_string(c) + " assigned to more than one EMG type");
      }
    }
    for (double w : a.weights) {
      if (!std::isfinite(w)) throw ValidationError("ground truth: non-finite weight");
    }
  }
}

std::vector<std::size_t> ContaminationGroundTruth::contaminated_channels() const {
  std::vector<std::size_t> out;
  for (const auto& a : assignments) out.insert(out.end(), a.channels.begin(), a.channels.end());
  return out;
}

const ContaminationAssignment* ContaminationGroundTruth::find(const std::string& emg_type) const {
  for (const auto& a : assignments) {
    if (a.emg_type == emg_type) return &a;
  }
  return nullptr;
}

nlohmann::json to_json(const ContaminationGroundTruth& gt) {
  nlohmann::json doc;
  doc["rng_seed"] = gt.rng_seed;
  doc["assignments"] = nlohmann::json::array();
  for (const auto& a : gt.assignments) {
    doc["assignments"].push_back({{"emg_type", a.emg_type}, {"channels", a.channels}, {"weights", a.weights}});
  }
  return doc;
}

ContaminationGroundTruth ground_truth_from_json(const nlohmann::json& doc) {
  try {
    ContaminationGroundTruth gt;
    gt.rng_seed = doc.value("rng_seed", std::uint64_t{0});
    for (const auto& a : doc.at("assignments")) {
      gt.assignments.push_back({a.at("emg_type").get<std::string>(), a.at("channels").get<std::vector<std::size_t>>(),
                                a.at("weights").get<std::vector<double>>()});
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ground truth document: ") + e.what());
  }
}

MultiChannelRecording contaminate(const MultiChannelRecording& eeg, const MultiChannelRecording& emg,
                                  const ContaminationGroundTruth& plan) {
  plan.validate(eeg.channels());
  if (plan.assignments.empty()) return eeg;
  if (emg.sample_rate_hz() != eeg.sample_rate_hz() || emg.samples() != eeg.samples()) {
    throw ValidationError("contaminate: EEG and EMG differ in sample rate or length");
  }
  SignalMatrix data = eeg.data();
  for (const auto& a : plan.assignments) {
    const auto src = emg.index_of(a.emg_type);
    if (!src) throw ValidationError("contaminate: no EMG channel named '" + a.emg_type + "'");
    for (std::size_t i = 0; i < a.channels.size(); ++i) {
      data.row(static_cast<Eigen::Index>(a.channels[i])) += a.weights[i] * emg.data().row(static_cast<Eigen::Index>(*src));
    }
  }
  return eeg.with_data(std::move(data));
}

MultiChannelRecording append_reference_channels(const MultiChannelRecording& eeg, const MultiChannelRecording& refs) {
  if (refs.channels() == 0) return eeg;
  if (refs.sample_rate_hz() != eeg.sample_rate_hz() || refs.samples() != eeg.samples()) {
    throw ValidationError("append_reference_channels: rates or lengths differ (resample first)");
  }
  for (auto k : refs.kinds()) {
    if (k != ChannelKind::EmgRef) throw ValidationError("append_reference_channels: reference kinds must be EMG_REF");
  }
  std::vector<std::string> labels = eeg.labels();
  labels.insert(labels.end(), refs.labels().begin(), refs.labels().end());
  std::vector<ChannelKind> kinds = eeg.kinds();
  kinds.insert(kinds.end(), refs.kinds().begin(), refs.kinds().end());
  SignalMatrix data(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(eeg.samples()));
  data.topRows(static_cast<Eigen::Index>(eeg.channels())) = eeg.data();
  data.bottomRows(static_cast<Eigen::Index>(refs.channels())) = refs.data();
  // The constructor rejects duplicate labels; give the collision a clearer message first.
  for (const auto& l : refs.labels()) {
    if (eeg.index_of(l)) throw ValidationError("append_reference_channels: label '" + l + "' already used by EEG");
  }
  return MultiChannelRecording(std::move(labels), std::move(kinds), eeg.sample_rate_hz(), std::move(data));
}

}  // namespace erase
