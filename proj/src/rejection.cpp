#include "erase/rejection.hpp"

#include "erase/eeg_sim.hpp"
#include "erase/error.hpp"
#include "erase/features.hpp"
#include "erase/recording_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace erase {

std::string_view to_string(RejectionMode mode) noexcept {
  return mode == RejectionMode::Experimental ? "experimental" : "simulated_ground_truth";
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::ThresholdCriterion:
      return "threshold_criterion";
    case Provenance::HatBandCriterion:
      return "hat_band_criterion";
    case Provenance::MaxRefCoefficient:
      return "max_ref_coefficient";
  }
  return "unknown";
}

RejectionMode parse_rejection_mode(std::string_view text) {
  if (text == "experimental") return RejectionMode::Experimental;
  if (text == "simulated_ground_truth") return RejectionMode::SimulatedGroundTruth;
  throw ValidationError("unknown rejection mode '" + std::string(text) + "'");
}

std::vector<double> default_gain_grid() {
  std::vector<double> g;
  for (int i = 4; i <= 30; ++i) g.push_back(static_cast<double>(i) / 10.0);
  return g;
}

std::vector<std::string> default_hat_band_labels() {
  return {"Fp1", "Fpz", "Fp2", "AF7", "AF8", "F7",  "F8",  "FT9", "FT10", "T7",
          "T8",  "TP9", "TP10", "P7", "P8",  "PO9", "PO10", "O1", "Oz",   "O2"};
}

std::vector<std::string> hat_band_for(const std::vector<std::string>& eeg_labels) {
  std::vector<std::string> out;
  for (const auto& l : default_hat_band_labels()) {
    if (std::find(eeg_labels.begin(), eeg_labels.end(), l) != eeg_labels.end()) out.push_back(l);
  }
  return out;
}

void RejectionCriteria::validate(const std::vector<std::string>& eeg_labels) const {
  if (gain && !(*gain >= kGainMin - 1e-12 && *gain <= kGainMax + 1e-12)) {
    throw ValidationError("criteria: gain " + std::to_string(*gain) + " outside [0.4, 3.0]");
  }
  if (mode == RejectionMode::Experimental && use_hat_band) {
    if (hat_band_labels.empty()) throw ValidationError("criteria: hat band is empty");
    for (const auto& l : hat_band_labels) {
      if (std::find(eeg_labels.begin(), eeg_labels.end(), l) == eeg_labels.end()) {
        throw ValidationError("criteria: hat-band label '" + l + "' is not an EEG channel");
      }
    }
  }
}

std::set<Eigen::Index> RejectionReport::indices() const {
  std::set<Eigen::Index> s;
  for (const auto& f : artifact_ics) s.insert(f.index);
  return s;
}

const FlaggedIc* RejectionReport::find(Eigen::Index ic) const {
  for (const auto& f : artifact_ics) {
    if (f.index == ic) return &f;
  }
  return nullptr;
}

double rms_of_reference_rows(const Eigen::MatrixXd& a, std::size_t t, std::size_t tau) {
  if (tau == 0) throw ValidationError("rms_of_reference_rows: no reference rows");
  if (static_cast<std::size_t>(a.rows()) != t + tau) throw ValidationError("rms_of_reference_rows: row count is not t + tau");
  double total = 0.0;
  for (std::size_t k = 0; k < tau; ++k) {
    const auto row = a.row(static_cast<Eigen::Index>(t + k));
    total += std::sqrt(row.squaredNorm() / static_cast<double>(a.cols()));
  }
  return total / static_cast<double>(tau);
}

RejectionReport identify_artifact_ics(const Eigen::MatrixXd& a, const RejectionCriteria& criteria,
                                      const std::vector<std::string>& eeg_labels, std::size_t t, std::size_t tau) {
  if (static_cast<std::size_t>(a.rows()) != t + tau || eeg_labels.size() != t) {
    throw ValidationError("identify_artifact_ics: mixing rows must equal t + tau with t EEG labels");
  }
  criteria.validate(eeg_labels);
  RejectionReport r;
  r.mode = criteria.mode;
  r.t = t;
  r.tau = tau;
  r.gain = criteria.gain;
  std::map<Eigen::Index, FlaggedIc> flagged;
  auto flag = [&](Eigen::Index j, Provenance p) -> FlaggedIc& {
    auto& f = flagged[j];
    f.index = j;
    if (std::find(f.provenance.begin(), f.provenance.end(), p) == f.provenance.end()) f.provenance.push_back(p);
    return f;
  };
  const Eigen::MatrixXd mag = a.cwiseAbs();

  if (criteria.mode == RejectionMode::SimulatedGroundTruth) {
    if (tau == 0) throw ValidationError("identify_artifact_ics: ground-truth mode needs reference rows");
    r.rms_value = rms_of_reference_rows(a, t, tau);
    for (std::size_t k = 0; k < tau; ++k) {
      Eigen::Index best = 0;
      mag.row(static_cast<Eigen::Index>(t + k)).maxCoeff(&best);  // first maximum
      flag(best, Provenance::MaxRefCoefficient).reference_rows.push_back(k);
    }
  } else {
    if (criteria.use_threshold && tau > 0) {
      if (!criteria.gain) throw ValidationError("identify_artifact_ics: gain is unset");
      r.rms_value = rms_of_reference_rows(a, t, tau);
      r.threshold = r.rms_value * *criteria.gain;
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (std::size_t k = 0; k < tau; ++k) {
          if (mag(static_cast<Eigen::Index>(t + k), j) > r.threshold) {
            flag(j, Provenance::ThresholdCriterion).reference_rows.push_back(k);
          }
        }
      }
    }
    if (criteria.use_hat_band) {
      std::vector<bool> hat(t, false);
      for (std::size_t i = 0; i < t; ++i) {
        hat[i] = std::find(criteria.hat_band_labels.begin(), criteria.hat_band_labels.end(), eeg_labels[i]) !=
                 criteria.hat_band_labels.end();
      }
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        Eigen::Index row = 0;
        mag.col(j).maxCoeff(&row);
        if (static_cast<std::size_t>(row) < t && hat[static_cast<std::size_t>(row)]) flag(j, Provenance::HatBandCriterion);
      }
    }
  }
  for (auto& [j, f] : flagged) r.artifact_ics.push_back(std::move(f));
  return r;
}

RejectionReport identify_artifact_ics(const IcaDecomposition& dec, const RejectionCriteria& criteria,
                                      const std::vector<std::string>& eeg_labels, std::size_t t, std::size_t tau) {
  return identify_artifact_ics(dec.mixing, criteria, eeg_labels, t, tau);
}

GainSweepPoint gain_objective(const IcaDecomposition& dec, const std::set<Eigen::Index>& rejected,
                              const MultiChannelRecording& decomposed, std::size_t t,
                              const GainSelectionContext& ctx) {
  if (!ctx.epochs) throw ValidationError("gain sweep: trial epochs are required");
  const auto eeg_block = decomposed.slice_channels(0, t);
  const auto mu_row = eeg_block.index_of(ctx.mu_channel);
  if (!mu_row) throw ValidationError("gain sweep: mu channel '" + ctx.mu_channel + "' is not an EEG channel");
  const Eigen::MatrixXd full = reconstruct_without(dec, rejected);
  SignalMatrix eeg = full.topRows(static_cast<Eigen::Index>(t));
  const auto trials = ctx.epochs->split(eeg_block.with_data(std::move(eeg)));
  const auto powers = trial_band_powers(trials, {kHfNamedBand, kMuNamedBand}, ctx.stft);
  const auto hf = zscore_to_idle(powers[0]);
  const auto mu = zscore_to_idle(powers[1]);
  GainSweepPoint p;
  p.hf_z = mean_movement(hf);
  p.mu_z = mean_movement(mu, {*mu_row});
  p.objective = p.hf_z + p.mu_z;
  p.n_rejected = rejected.size();
  return p;
}

GainSelection select_gain(const IcaDecomposition& dec, const MultiChannelRecording& decomposed,
                          const RejectionCriteria& criteria, std::size_t t, std::size_t tau,
                          const GainSelectionContext& ctx) {
  if (ctx.grid.empty()) throw ValidationError("select_gain: empty gain grid");
  const std::vector<std::string> eeg_labels(decomposed.labels().begin(),
                                            decomposed.labels().begin() + static_cast<std::ptrdiff_t>(t));
  std::map<std::set<Eigen::Index>, GainSweepPoint> cache;
  GainSelection out;
  bool any_rejected = false;
  double best = 0.0;
  for (double g : ctx.grid) {
    RejectionCriteria c = criteria;
    c.gain = g;
    const auto set = identify_artifact_ics(dec, c, eeg_labels, t, tau).indices();
    any_rejected = any_rejected || !set.empty();
    auto it = cache.find(set);
    if (it == cache.end()) it = cache.emplace(set, gain_objective(dec, set, decomposed, t, ctx)).first;
    GainSweepPoint p = it->second;
    p.gain = g;
    out.sweep.push_back(p);
    if (out.sweep.size() == 1 || p.objective < best) {
      best = p.objective;
      out.gain = g;
    }
  }
  if (!any_rejected) {
    out.degenerate = true;
    out.gain = *std::min_element(ctx.grid.begin(), ctx.grid.end());
  }
  return out;
}

namespace {

FastIcaOptions with_full_rank(FastIcaOptions o) {
  o.n_components.reset();
  return o;
}

}  // namespace

EraseResult run_erase(const MultiChannelRecording& eeg, const MultiChannelRecording& refs,
                      const RejectionCriteria& criteria, std::uint64_t seed, const FastIcaOptions& ica,
                      const GainSelectionContext* sweep) {
  if (refs.channels() == 0) throw ValidationError("run_erase: at least one reference channel is required");
  if (eeg.count(ChannelKind::Eeg) != eeg.channels()) throw ValidationError("run_erase: EEG input contains reference rows");
  criteria.validate(eeg.labels());
  const auto combined = append_reference_channels(eeg, refs);
  const std::size_t t = eeg.channels();
  const std::size_t tau = refs.channels();
  EraseResult res{eeg, {}, fastica(combined.data(), seed, with_full_rank(ica))};

  RejectionCriteria c = criteria;
  GainSelection selection;
  const bool needs_sweep = c.mode == RejectionMode::Experimental && c.use_threshold && !c.gain;
  if (needs_sweep) {
    if (!sweep) throw ValidationError("run_erase: gain is unset and no trial structure was given for the sweep");
    selection = select_gain(res.decomposition, combined, c, t, tau, *sweep);
    c.gain = selection.gain;
  }
  res.report = identify_artifact_ics(res.decomposition, c, eeg.labels(), t, tau);
  if (needs_sweep) {
    res.report.sweep = std::move(selection.sweep);
    res.report.degenerate_sweep = selection.degenerate;
  }
  const Eigen::MatrixXd full = reconstruct_without(res.decomposition, res.report.indices());
  res.cleaned = eeg.with_data(full.topRows(static_cast<Eigen::Index>(t)));
  return res;
}

EraseResult run_conventional_ica(const MultiChannelRecording& eeg, const RejectionCriteria& criteria,
                                 std::uint64_t seed, const FastIcaOptions& ica) {
  if (eeg.channels() == 0) throw ValidationError("run_conventional_ica: empty recording");
  RejectionCriteria c = criteria;
  c.mode = RejectionMode::Experimental;
  c.use_threshold = false;
  c.use_hat_band = true;
  c.gain.reset();
  c.validate(eeg.labels());
  EraseResult res{eeg, {}, fastica(eeg.data(), seed, with_full_rank(ica))};
  res.report = identify_artifact_ics(res.decomposition, c, eeg.labels(), eeg.channels(), 0);
  res.cleaned = eeg.with_data(reconstruct_without(res.decomposition, res.report.indices()));
  return res;
}

nlohmann::json to_json(const RejectionReport& report) {
  nlohmann::json doc;
  doc["mode"] = std::string(to_string(report.mode));
  doc["t"] = report.t;
  doc["tau"] = report.tau;
  doc["rms_value"] = report.rms_value;
  doc["threshold"] = report.threshold;
  doc["gain"] = report.gain ? nlohmann::json(*report.gain) : nlohmann::json(nullptr);
  doc["degenerate_sweep"] = report.degenerate_sweep;
  doc["artifact_ics"] = nlohmann::json::array();
  for (const auto& f : report.artifact_ics) {
    nlohmann::json e;
    e["index"] = f.index;
    e["provenance"] = nlohmann::json::array();
    for (auto p : f.provenance) e["provenance"].push_back(std::string(to_string(p)));
    e["reference_rows"] = f.reference_rows;
    doc["artifact_ics"].push_back(std::move(e));
  }
  doc["sweep"] = nlohmann::json::array();
  for (const auto& p : report.sweep) {
    doc["sweep"].push_back(
        {{"gain", p.gain}, {"hf_z", p.hf_z}, {"mu_z", p.mu_z}, {"objective", p.objective}, {"n_rejected", p.n_rejected}});
  }
  return doc;
}

std::string sweep_csv(const RejectionReport& report) {
  std::ostringstream os;
  os << "gain,hf_z,mu_z,objective,n_rejected\n";
  for (const auto& p : report.sweep) {
    os << format_double(p.gain) << ',' << format_double(p.hf_z) << ',' << format_double(p.mu_z) << ','
       << format_double(p.objective) << ',' << p.n_rejected << '\n';
  }
  return os.str();
}

}  // namespace erase
