#include "erase/session.hpp"

#include "erase/error.hpp"
#include "erase/features.hpp"
#include "erase/filter.hpp"
#include "erase/metrics.hpp"
#include "erase/random.hpp"
#include "erase/recording_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace erase {

namespace {

constexpr std::uint64_t kIcaSeedTag = 100;
constexpr std::uint64_t kSimulatedRefsTag = 200;

// Trims or zero-pads the sample axis to n.
MultiChannelRecording fit_length(const MultiChannelRecording& rec, std::size_t n) {
  if (rec.samples() == n) return rec;
  if (rec.samples() > n) return rec.slice_samples(0, n);
  SignalMatrix d = SignalMatrix::Zero(static_cast<Eigen::Index>(rec.channels()), static_cast<Eigen::Index>(n));
  d.leftCols(rec.data().cols()) = rec.data();
  return rec.with_data(std::move(d));
}

// Muscle set at emg_rate, brought to the EEG rate and length.
MultiChannelRecording aligned_muscles(const SessionConfig& cfg, const TrialSchedule& schedule, double eeg_rate,
                                      std::size_t eeg_samples, std::uint64_t seed) {
  const double duration = static_cast<double>(eeg_samples) / eeg_rate;
  auto native = simulate_head_emg_set(cfg.muscle_specs(), schedule, cfg.emg_rate_hz, seed, duration, cfg.fiber);
  if (native.sample_rate_hz() != eeg_rate) native = resample(native, eeg_rate);
  return fit_length(native, eeg_samples);
}

// 0 outside movement, 1 inside, raised-cosine edges of length ramp_s inside each window.
double movement_envelope(const TrialSchedule& schedule, double t, double ramp_s) {
  for (const auto& w : schedule.trials()) {
    const double a = w.move_start_s;
    const double b = w.move_start_s + w.move_len_s;
    if (t < a || t >= b) continue;
    const double ramp = std::min(ramp_s, 0.5 * w.move_len_s);
    if (ramp <= 0.0) return 1.0;
    const double edge = std::min(t - a, b - t);
    if (edge >= ramp) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * edge / ramp));
  }
  return 0.0;
}

RejectionCriteria session_criteria(const SessionConfig& cfg, const std::vector<std::string>& eeg_labels,
                                   bool conventional) {
  RejectionCriteria c;
  c.mode = RejectionMode::Experimental;
  c.gain = cfg.gain;
  c.hat_band_labels = cfg.hat_band_labels.empty() ? hat_band_for(eeg_labels) : cfg.hat_band_labels;
  if (conventional) c.use_threshold = false;
  return c;
}

std::vector<double> rank_sum_per_channel(const BandPowerSeries& z) {
  std::vector<double> p(static_cast<std::size_t>(z.idle.rows()), 1.0);
  for (Eigen::Index c = 0; c < z.idle.rows(); ++c) {
    const auto ci = static_cast<std::size_t>(c);
    if (ci < z.flagged.size() && z.flagged[ci]) continue;
    const Eigen::VectorXd idle = z.idle.row(c).transpose();
    const Eigen::VectorXd move = z.movement.row(c).transpose();
    p[ci] = wilcoxon_rank_sum(std::span<const double>(idle.data(), static_cast<std::size_t>(idle.size())),
                              std::span<const double>(move.data(), static_cast<std::size_t>(move.size())))
                .p_value;
  }
  return p;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

SessionConfig::SessionConfig() {
  ica.max_iter = 200;
  ica.max_restarts = 0;
}

void SessionConfig::validate() const {
  if (n_eeg_channels < 8) throw ValidationError("session: need at least 8 EEG channels");
  if (!(eeg_rate_hz > 0.0) || !(emg_rate_hz > 0.0)) throw ValidationError("session: sample rates must be positive");
  if (n_trials < 2) throw ValidationError("session: need at least 2 trials");
  if (!(idle_s > 0.0) || !(move_s > 0.0)) throw ValidationError("session: idle and movement windows must be positive");
  if (idle_s + move_s > trial_period_s) throw ValidationError("session: idle + movement exceeds the trial period");
  if (lead_s < 0.0) throw ValidationError("session: lead must be non-negative");
  if (!(mu_frequency_hz > 0.0) || mu_frequency_hz >= 0.5 * eeg_rate_hz) throw ValidationError("session: invalid mu frequency");
  if (mu_amplitude_uv < 0.0) throw ValidationError("session: mu amplitude must be non-negative");
  if (erd_depth < 0.0 || erd_depth > 1.0) throw ValidationError("session: erd_depth must lie in [0, 1]");
  if (erd_ramp_s < 0.0) throw ValidationError("session: erd_ramp_s must be non-negative");
  if (!(contamination_gain >= 0.0) || !(reference_noise_uv >= 0.0)) {
    throw ValidationError("session: contamination gain and reference noise must be non-negative");
  }
  if (!(mu_alpha > 0.0 && mu_alpha < 1.0) || !(hf_alpha > 0.0 && hf_alpha < 1.0)) {
    throw ValidationError("session: significance levels must lie in (0, 1)");
  }
  preprocessing_band.validate(eeg_rate_hz);
  if (preprocessing_order < 1) throw ValidationError("session: preprocessing order must be positive");
  if (gain && (*gain < kGainMin || *gain > kGainMax)) throw ValidationError("session: gain outside [0.4, 3.0]");

  const auto labels = default_eeg_labels(n_eeg_channels);
  auto has = [&](const std::string& l) { return std::find(labels.begin(), labels.end(), l) != labels.end(); };
  if (!has(mu_channel)) throw ValidationError("session: mu channel '" + mu_channel + "' is not in the montage");
  if (contamination.empty()) throw ValidationError("session: no contaminating muscles");
  std::set<std::string> used;
  std::set<std::string> muscles_seen;
  for (const auto& m : contamination) {
    if (!muscles_seen.insert(m.muscle).second) throw ValidationError("session: muscle '" + m.muscle + "' listed twice");
    if (m.channels.empty()) throw ValidationError("session: muscle '" + m.muscle + "' has no channels");
    for (const auto& c : m.channels) {
      if (!has(c)) throw ValidationError("session: contaminated channel '" + c + "' is not in the montage");
      if (!used.insert(c).second) throw ValidationError("session: channel '" + c + "' contaminated twice");
    }
  }
  if (used.size() >= n_eeg_channels) throw ValidationError("session: no uncontaminated channel left");
  for (const auto& s : muscle_specs()) s.validate(emg_rate_hz);
  eeg.validate();
  fiber.validate();
  ica.validate();
}

TrialSchedule SessionConfig::schedule() const {
  return TrialSchedule::regular(n_trials, idle_s, move_s, trial_period_s, lead_s);
}

double SessionConfig::duration_s() const { return lead_s + static_cast<double>(n_trials) * trial_period_s; }

std::vector<MuscleSpec> SessionConfig::muscle_specs() const {
  std::vector<MuscleSpec> out;
  for (const auto& m : contamination) {
    const auto it = std::find_if(muscles.begin(), muscles.end(), [&](const MuscleSpec& s) { return s.name == m.muscle; });
    out.push_back(it != muscles.end() ? *it : default_muscle_spec(m.muscle));
  }
  return out;
}

SessionRecordSet make_pseudo_real_session(const SessionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto schedule = cfg.schedule();
  auto clean = simulate_eeg(cfg.n_eeg_channels, cfg.duration_s(), cfg.eeg_rate_hz, derive_seed(seed, 1), cfg.eeg);
  const std::size_t n = clean.samples();
  const double fs = clean.sample_rate_hz();

  SignalMatrix data = clean.data();
  const auto mu_row = static_cast<Eigen::Index>(*clean.index_of(cfg.mu_channel));
  Rng phase_rng(derive_seed(seed, 5));
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(phase_rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double env = 1.0 - cfg.erd_depth * movement_envelope(schedule, t, cfg.erd_ramp_s);
    data(mu_row, static_cast<Eigen::Index>(i)) +=
        cfg.mu_amplitude_uv * env * std::sin(2.0 * std::numbers::pi * cfg.mu_frequency_hz * t + phase);
  }
  clean = clean.with_data(std::move(data));

  const auto muscles = aligned_muscles(cfg, schedule, fs, n, derive_seed(seed, 2));

  ContaminationGroundTruth truth;
  truth.rng_seed = seed;
  for (std::size_t k = 0; k < cfg.contamination.size(); ++k) {
    const auto& m = cfg.contamination[k];
    ContaminationAssignment a;
    a.emg_type = m.muscle;
    for (const auto& c : m.channels) a.channels.push_back(*clean.index_of(c));
    a.weights = draw_contamination_weights(a.channels.size(), derive_seed(seed, {3, k}));
    for (double& w : a.weights) w *= cfg.contamination_gain;
    truth.assignments.push_back(std::move(a));
  }

  SignalMatrix refs = muscles.data();
  if (cfg.reference_noise_uv > 0.0) {
    Rng rng(derive_seed(seed, 4));
    std::normal_distribution<double> normal(0.0, cfg.reference_noise_uv);
    for (Eigen::Index r = 0; r < refs.rows(); ++r) {
      for (Eigen::Index i = 0; i < refs.cols(); ++i) refs(r, i) += normal(rng);
    }
  }

  SessionRecordSet out;
  out.session = std::to_string(seed);
  out.eeg = contaminate(clean, muscles, truth);
  out.real_references = muscles.with_data(std::move(refs));
  out.schedule = schedule;
  out.mu_channel = cfg.mu_channel;
  out.truth = std::move(truth);
  return out;
}

std::string_view to_string(SessionCondition c) noexcept {
  switch (c) {
    case SessionCondition::Baseline: return "baseline";
    case SessionCondition::EraseReal: return "erase_real";
    case SessionCondition::EraseSimulated: return "erase_simulated";
    case SessionCondition::Conventional: return "conventional";
  }
  return "baseline";
}

SessionCondition parse_session_condition(std::string_view text) {
  for (auto c : {SessionCondition::Baseline, SessionCondition::EraseReal, SessionCondition::EraseSimulated,
                 SessionCondition::Conventional}) {
    if (text == to_string(c)) return c;
  }
  throw ValidationError("unknown session condition '" + std::string(text) + "'");
}

std::vector<double> channel_movement_means(const BandPowerSeries& z, const std::vector<double>& p,
                                           std::optional<double> alpha) {
  std::vector<double> out(static_cast<std::size_t>(z.movement.rows()), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (alpha && c < p.size() && !(p[c] < *alpha)) continue;
    out[c] = mean_movement(z, {c});
  }
  return out;
}

ConditionResult run_session_pipeline(const SessionRecordSet& session, SessionCondition condition,
                                     const SessionConfig& cfg, std::uint64_t seed, const BandPowerSeries* baseline_hf) {
  const auto& eeg_labels = session.eeg.labels();
  if (session.eeg.count(ChannelKind::EmgRef) != 0) throw ValidationError("session: EEG recording contains reference rows");
  if (!session.eeg.index_of(session.mu_channel)) {
    throw ValidationError("session: mu channel '" + session.mu_channel + "' is not in the recording");
  }
  session.schedule.check_bounds(session.eeg.duration_s());

  const auto filtered = bandpass_filter(session.eeg, cfg.preprocessing_band, cfg.preprocessing_order);
  const auto epochs = concatenate_trials(filtered, session.schedule);
  const std::uint64_t ica_seed = derive_seed(seed, kIcaSeedTag);

  GainSelectionContext ctx;
  ctx.epochs = &epochs;
  ctx.mu_channel = session.mu_channel;
  ctx.stft = cfg.stft;

  auto prepare_refs = [&](const MultiChannelRecording& refs) {
    if (refs.sample_rate_hz() != session.eeg.sample_rate_hz() || refs.samples() != session.eeg.samples()) {
      throw ValidationError("session: references must match the EEG rate and length");
    }
    return concatenate_trials(bandpass_filter(refs, cfg.preprocessing_band, cfg.preprocessing_order), session.schedule)
        .concatenated;
  };

  ConditionResult result;
  result.condition = condition;
  MultiChannelRecording cleaned = epochs.concatenated;
  std::optional<EraseResult> er;
  switch (condition) {
    case SessionCondition::Baseline:
      break;
    case SessionCondition::EraseReal:
      er = run_erase(epochs.concatenated, prepare_refs(session.real_references),
                     session_criteria(cfg, eeg_labels, false), ica_seed, cfg.ica, &ctx);
      break;
    case SessionCondition::EraseSimulated: {
      const auto sim = aligned_muscles(cfg, session.schedule, session.eeg.sample_rate_hz(), session.eeg.samples(),
                                       derive_seed(seed, kSimulatedRefsTag));
      er = run_erase(epochs.concatenated, prepare_refs(sim), session_criteria(cfg, eeg_labels, false), ica_seed,
                     cfg.ica, &ctx);
      break;
    }
    case SessionCondition::Conventional:
      er = run_conventional_ica(epochs.concatenated, session_criteria(cfg, eeg_labels, true), ica_seed, cfg.ica);
      break;
  }
  if (er) {
    cleaned = er->cleaned;
    result.report = er->report;
    result.diagnostics = er->decomposition.diagnostics;
  }

  const auto powers = trial_band_powers(epochs.split(cleaned), {kMuNamedBand, kHfNamedBand}, cfg.stft);
  result.mu = zscore_to_idle(powers[0]);
  result.hf = zscore_to_idle(powers[1]);
  result.mu_p = rank_sum_per_channel(result.mu);
  result.hf_p = rank_sum_per_channel(result.hf);
  if (baseline_hf) result.hf_percent_reduction = percent_reduction(*baseline_hf, result.hf);
  return result;
}

const ConditionSummary* SessionSummary::find(std::string_view condition) const {
  for (const auto& c : conditions) {
    if (c.condition == condition) return &c;
  }
  return nullptr;
}

SessionRun run_session(const SessionRecordSet& session, const SessionConfig& cfg, std::uint64_t seed,
                       const std::vector<SessionCondition>& conditions) {
  SessionRun run;
  run.summary.subject = session.subject;
  run.summary.session = session.session;
  run.summary.seed = seed;
  run.summary.mu_channel = session.mu_channel;
  run.results.push_back(run_session_pipeline(session, SessionCondition::Baseline, cfg, seed));
  for (auto c : conditions) {
    if (c == SessionCondition::Baseline) continue;
    run.results.push_back(run_session_pipeline(session, c, cfg, seed, &run.results.front().hf));
  }
  const std::size_t mu_row = *session.eeg.index_of(session.mu_channel);
  for (const auto& r : run.results) {
    ConditionSummary s;
    s.condition = std::string(to_string(r.condition));
    if (r.report) {
      s.n_rejected = r.report->artifact_ics.size();
      s.gain = r.report->gain;
    }
    s.hf_percent_reduction = r.hf_percent_reduction;
    s.hf_mean_z = mean_movement(r.hf);
    s.mu_mean_z_at_mu_channel = mean_movement(r.mu, {mu_row});
    s.channels = session.eeg.labels();
    s.mu_z = channel_movement_means(r.mu);
    s.hf_z = channel_movement_means(r.hf);
    s.mu_z_nulled = channel_movement_means(r.mu, r.mu_p, cfg.mu_alpha);
    s.hf_z_nulled = channel_movement_means(r.hf, r.hf_p, cfg.hf_alpha);
    s.mu_p = r.mu_p;
    s.hf_p = r.hf_p;
    run.summary.conditions.push_back(std::move(s));
  }
  return run;
}

nlohmann::json to_json(const SessionSummary& s) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : s.conditions) {
    conds.push_back({{"condition", c.condition},
                     {"n_rejected", c.n_rejected},
                     {"gain", optional_number(c.gain)},
                     {"hf_percent_reduction", c.hf_percent_reduction},
                     {"hf_mean_z", c.hf_mean_z},
                     {"mu_mean_z_at_mu_channel", c.mu_mean_z_at_mu_channel},
                     {"channels", c.channels},
                     {"mu_z", c.mu_z},
                     {"hf_z", c.hf_z},
                     {"mu_z_nulled", c.mu_z_nulled},
                     {"hf_z_nulled", c.hf_z_nulled},
                     {"mu_p", c.mu_p},
                     {"hf_p", c.hf_p}});
  }
  return {{"subject", s.subject},
          {"session", s.session},
          {"seed", s.seed},
          {"mu_channel", s.mu_channel},
          {"conditions", conds}};
}

SessionSummary session_summary_from_json(const nlohmann::json& doc) {
  try {
    SessionSummary s;
    s.subject = doc.at("subject").get<std::string>();
    s.session = doc.at("session").get<std::string>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.mu_channel = doc.at("mu_channel").get<std::string>();
    for (const auto& j : doc.at("conditions")) {
      ConditionSummary c;
      c.condition = j.at("condition").get<std::string>();
      c.n_rejected = j.at("n_rejected").get<std::size_t>();
      if (!j.at("gain").is_null()) c.gain = j.at("gain").get<double>();
      c.hf_percent_reduction = j.at("hf_percent_reduction").get<double>();
      c.hf_mean_z = j.at("hf_mean_z").get<double>();
      c.mu_mean_z_at_mu_channel = j.at("mu_mean_z_at_mu_channel").get<double>();
      c.channels = j.at("channels").get<std::vector<std::string>>();
      c.mu_z = j.at("mu_z").get<std::vector<double>>();
      c.hf_z = j.at("hf_z").get<std::vector<double>>();
      c.mu_z_nulled = j.at("mu_z_nulled").get<std::vector<double>>();
      c.hf_z_nulled = j.at("hf_z_nulled").get<std::vector<double>>();
      c.mu_p = j.at("mu_p").get<std::vector<double>>();
      c.hf_p = j.at("hf_p").get<std::vector<double>>();
      const std::size_t n = c.channels.size();
      for (const auto* v : {&c.mu_z, &c.hf_z, &c.mu_z_nulled, &c.hf_z_nulled, &c.mu_p, &c.hf_p}) {
        if (v->size() != n) throw ValidationError("session summary: per-channel arrays differ in length");
      }
      s.conditions.push_back(std::move(c));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("session summary: ") + e.what());
  }
}

void write_session_outputs(const std::filesystem::path& dir, const SessionRun& run) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "summary.json", to_json(run.summary));
  std::ostringstream os;
  os << "condition,channel,band,mean_movement_z,p_value\n";
  for (const auto& c : run.summary.conditions) {
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
      os << c.condition << ',' << c.channels[i] << ",mu," << format_double(c.mu_z[i]) << ',' << format_double(c.mu_p[i])
         << '\n';
      os << c.condition << ',' << c.channels[i] << ",hf," << format_double(c.hf_z[i]) << ',' << format_double(c.hf_p[i])
         << '\n';
    }
  }
  write_text_file(dir / "band_power.csv", os.str());
  for (const auto& r : run.results) {
    if (!r.report) continue;
    const std::string name(to_string(r.condition));
    write_json_file(dir / ("report_" + name + ".json"), to_json(*r.report));
    if (!r.report->sweep.empty()) write_text_file(dir / ("sweep_" + name + ".csv"), sweep_csv(*r.report));
  }
}

}  // namespace erase
