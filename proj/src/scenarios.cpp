#include "erase/scenarios.hpp"

#include "erase/error.hpp"
#include "erase/metrics.hpp"
#include "erase/random.hpp"
#include "erase/recording_io.hpp"
#include "erase/rejection.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>
#include <sstream>

namespace erase {

namespace {

constexpr std::uint64_t kTagScenario1 = 1;
constexpr std::uint64_t kTagScenario2 = 2;
constexpr std::uint64_t kTagFalsePositive = 3;
constexpr std::uint64_t kTagSensitivity = 4;

std::string mixing_csv(const Eigen::MatrixXd& a, const std::vector<std::string>& row_labels) {
  std::ostringstream os;
  os << "channel";
  for (Eigen::Index j = 0; j < a.cols(); ++j) os << ",IC" << j;
  os << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    os << row_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < a.cols(); ++j) os << ',' << format_double(a(i, j));
    os << '\n';
  }
  return os.str();
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

RejectionCriteria hat_band_criteria(const ScenarioConfig& cfg, const std::vector<std::string>& eeg_labels) {
  RejectionCriteria c;
  c.mode = RejectionMode::Experimental;
  c.use_threshold = false;
  c.hat_band_labels = cfg.hat_band_labels.empty() ? hat_band_for(eeg_labels) : cfg.hat_band_labels;
  return c;
}

RejectionCriteria ground_truth_criteria() {
  RejectionCriteria c;
  c.mode = RejectionMode::SimulatedGroundTruth;
  c.use_hat_band = false;
  return c;
}

std::string dataset_dir_name(std::size_t grid_value, std::size_t dataset) {
  return "g" + std::to_string(grid_value) + "_d" + std::to_string(dataset);
}

std::vector<std::string> row_labels(const SimulatedDataset& ds) {
  auto labels = ds.eeg.labels();
  labels.insert(labels.end(), ds.references.labels().begin(), ds.references.labels().end());
  return labels;
}

void append_ai(std::vector<AiRecord>& out, const AiRecord& base, const Eigen::MatrixXd& a,
               const RejectionReport& report, const std::vector<std::size_t>& contaminated, std::size_t t,
               std::size_t tau) {
  for (const auto& f : report.artifact_ics) {
    const auto view = make_column_view(a, f.index, contaminated, t, tau);
    const auto ai = artifact_index(view);
    AiRecord r = base;
    r.ic = f.index;
    r.ai = ai.value;
    r.infinite = ai.infinite;
    out.push_back(r);
  }
}

ScenarioResult run_effectiveness(const ScenarioConfig& cfg, const std::string& name, std::uint64_t tag,
                                 const std::vector<std::size_t>& grid,
                                 const std::function<std::pair<std::size_t, std::size_t>(std::size_t)>& layout) {
  cfg.validate();
  ScenarioResult result;
  result.scenario = name;
  for (std::size_t g : grid) {
    const auto [n_types, per_type] = layout(g);
    GridSummary summary;
    summary.grid_value = g;
    std::vector<double> erase_ai;
    std::vector<double> conv_ai;
    for (std::size_t d = 0; d < cfg.n_datasets; ++d) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, {tag, g, d});
      try {
        const auto ds = make_dataset(cfg, n_types, per_type, Contaminant::Emg, seed);
        const std::size_t t = ds.eeg.channels();
        const std::size_t tau = ds.references.channels();
        const auto contaminated = ds.truth.contaminated_channels();

        const auto er = run_erase(ds.eeg, ds.references, ground_truth_criteria(), derive_seed(seed, 10), cfg.ica);
        const auto conv = run_conventional_ica(ds.eeg, hat_band_criteria(cfg, ds.eeg.labels()), derive_seed(seed, 11), cfg.ica);

        std::vector<AiRecord> rows;
        append_ai(rows, {name, g, d, "erase", 0, 0.0, false}, er.decomposition.mixing, er.report, contaminated, t, tau);
        append_ai(rows, {name, g, d, "conventional", 0, 0.0, false}, conv.decomposition.mixing, conv.report,
                  contaminated, t, 0);
        for (const auto& r : rows) {
          if (r.infinite) continue;
          (r.condition == "erase" ? erase_ai : conv_ai).push_back(r.ai);
        }
        result.records.insert(result.records.end(), rows.begin(), rows.end());
        ++summary.datasets_ok;

        if (cfg.output_dir && cfg.persist_datasets) {
          const auto dir = *cfg.output_dir / "datasets" / dataset_dir_name(g, d);
          std::filesystem::create_directories(dir);
          write_json_file(dir / "ground_truth.json", to_json(ds.truth));
          write_text_file(dir / "mixing_erase.csv", mixing_csv(er.decomposition.mixing, row_labels(ds)));
          write_text_file(dir / "mixing_conventional.csv", mixing_csv(conv.decomposition.mixing, ds.eeg.labels()));
          write_json_file(dir / "report_erase.json", to_json(er.report));
          write_json_file(dir / "report_conventional.json", to_json(conv.report));
        }
      } catch (const NumericalError& e) {
        result.failures.push_back({g, d, e.what()});
        ++summary.datasets_failed;
      }
    }
    summary.n_erase = erase_ai.size();
    summary.n_conventional = conv_ai.size();
    if (!erase_ai.empty()) summary.median_erase = median(erase_ai);
    if (!conv_ai.empty()) summary.median_conventional = median(conv_ai);
    if (!erase_ai.empty() && !conv_ai.empty()) summary.test = wilcoxon_rank_sum(erase_ai, conv_ai);
    result.summary.push_back(summary);
  }
  return result;
}

EventResult run_events(const ScenarioConfig& cfg, const std::string& name, std::uint64_t tag, Contaminant contaminant) {
  cfg.validate();
  EventResult result;
  result.experiment = name;
  for (std::size_t li = 0; li < cfg.event_layouts.size(); ++li) {
    const auto& layout = cfg.event_layouts[li];
    EventSummary summary;
    summary.layout = layout.label;
    std::vector<bool> hits;
    std::vector<double> contaminated;
    std::vector<double> uncontaminated;
    for (std::size_t d = 0; d < cfg.n_datasets; ++d) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, {tag, li, d});
      try {
        const auto ds = make_dataset(cfg, layout.n_types, layout.channels_per_type, contaminant, seed);
        const auto combined = append_reference_channels(ds.eeg, ds.references);
        const auto dec = fastica(combined.data(), derive_seed(seed, 10), cfg.ica);
        const auto events = dataset_events(dec, ds, layout.label, d);
        bool any = false;
        bool all = !events.empty();
        for (const auto& e : events) {
          any = any || e.event;
          all = all && e.event;
          contaminated.push_back(e.mean_contaminated);
          uncontaminated.push_back(e.mean_uncontaminated);
        }
        hits.push_back(contaminant == Contaminant::IndependentNoise ? any : all);
        result.records.insert(result.records.end(), events.begin(), events.end());
        ++summary.datasets_ok;
        if (cfg.output_dir && cfg.persist_datasets) {
          const auto dir = *cfg.output_dir / "datasets" / (layout.label + "_d" + std::to_string(d));
          std::filesystem::create_directories(dir);
          write_json_file(dir / "ground_truth.json", to_json(ds.truth));
          write_text_file(dir / "mixing.csv", mixing_csv(dec.mixing, row_labels(ds)));
        }
      } catch (const NumericalError& e) {
        result.failures.push_back({li, d, e.what()});
        ++summary.datasets_failed;
      }
    }
    if (!hits.empty()) summary.rate = rate_over_datasets(hits);
    if (!contaminated.empty()) {
      summary.coefficients = wilcoxon_rank_sum(contaminated, uncontaminated);
      summary.median_contaminated = median(contaminated);
      summary.median_uncontaminated = median(uncontaminated);
    }
    result.summary.push_back(summary);
  }
  return result;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::vector<MuscleSpec> default_scenario_muscles() {
  std::vector<MuscleSpec> out;
  for (const char* n : {"left_frontalis", "left_temporalis", "left_masseter", "left_trapezius", "eye_blink"}) {
    out.push_back(default_muscle_spec(n));
  }
  return out;
}

ScenarioConfig::ScenarioConfig() : emg_specs(default_scenario_muscles()) {
  ica.max_iter = 200;
  ica.max_restarts = 0;
}

void ScenarioConfig::validate() const {
  if (n_datasets < 2) throw ValidationError("scenario: n_datasets must be at least 2");
  if (n_eeg_channels < 8) throw ValidationError("scenario: need at least 8 EEG channels");
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0)) throw ValidationError("scenario: duration and rate must be positive");
  if (!(idle_s > 0.0) || !(move_s > 0.0)) throw ValidationError("scenario: idle and movement windows must be positive");
  if (s1_grid.empty() || s2_grid.empty() || event_layouts.empty()) throw ValidationError("scenario: grids must be nonempty");
  if (s1_types == 0 || s1_types > emg_specs.size()) throw ValidationError("scenario: s1_types exceeds the EMG specs");
  for (std::size_t g : s1_grid) {
    if (g == 0 || g % s1_types != 0) throw ValidationError("scenario: S1 grid values must be positive multiples of s1_types");
    if (g >= n_eeg_channels) throw ValidationError("scenario: S1 grid value leaves no uncontaminated channel");
  }
  for (std::size_t g : s2_grid) {
    if (g == 0 || g > emg_specs.size()) throw ValidationError("scenario: S2 type count exceeds the EMG specs");
    if (g * s2_channels_per_type >= n_eeg_channels) throw ValidationError("scenario: S2 grid value leaves no uncontaminated channel");
  }
  for (const auto& l : event_layouts) {
    if (l.n_types == 0 || l.n_types > emg_specs.size() || l.channels_per_type == 0 ||
        l.n_types * l.channels_per_type >= n_eeg_channels) {
      throw ValidationError("scenario: invalid event layout '" + l.label + "'");
    }
  }
  if (!(fp_noise_sd_uv > 0.0)) throw ValidationError("scenario: noise SD must be positive");
  for (const auto& s : emg_specs) s.validate(sample_rate_hz);
  eeg.validate();
  fiber.validate();
  ica.validate();
}

TrialSchedule ScenarioConfig::schedule() const {
  const double period = idle_s + move_s;
  const auto n = static_cast<std::size_t>(std::floor(duration_s / period + 1e-9));
  return TrialSchedule::regular(n, idle_s, move_s, period);
}

SimulatedDataset make_dataset(const ScenarioConfig& cfg, std::size_t n_types, std::size_t channels_per_type,
                              Contaminant contaminant, std::uint64_t seed) {
  if (n_types == 0 || n_types > cfg.emg_specs.size()) throw ValidationError("make_dataset: invalid EMG type count");
  if (n_types * channels_per_type >= cfg.n_eeg_channels) throw ValidationError("make_dataset: too many contaminated channels");
  const auto clean = simulate_eeg(cfg.n_eeg_channels, cfg.duration_s, cfg.sample_rate_hz, derive_seed(seed, 1), cfg.eeg);
  const std::vector<MuscleSpec> specs(cfg.emg_specs.begin(), cfg.emg_specs.begin() + static_cast<std::ptrdiff_t>(n_types));
  auto refs = simulate_head_emg_set(specs, cfg.schedule(), cfg.sample_rate_hz, derive_seed(seed, 2), clean.duration_s(),
                                    cfg.fiber);

  const auto order = shuffled_indices(cfg.n_eeg_channels, derive_seed(seed, 3));
  SimulatedDataset ds{clean, refs, {}};
  ds.truth.rng_seed = seed;
  const std::string noise_label = "gaussian_noise";
  for (std::size_t k = 0; k < n_types; ++k) {
    ContaminationAssignment a;
    a.emg_type = contaminant == Contaminant::Emg ? specs[k].name : noise_label;
    a.channels.assign(order.begin() + static_cast<std::ptrdiff_t>(k * channels_per_type),
                      order.begin() + static_cast<std::ptrdiff_t>((k + 1) * channels_per_type));
    std::sort(a.channels.begin(), a.channels.end());
    a.weights = draw_contamination_weights(channels_per_type, derive_seed(seed, {4, k}));
    ds.truth.assignments.push_back(std::move(a));
  }
  if (contaminant == Contaminant::Emg) {
    ds.eeg = contaminate(clean, refs, ds.truth);
  } else {
    SignalMatrix noise(1, static_cast<Eigen::Index>(clean.samples()));
    Rng rng(derive_seed(seed, 5));
    std::normal_distribution<double> normal(0.0, cfg.fp_noise_sd_uv);
    for (Eigen::Index i = 0; i < noise.cols(); ++i) noise(0, i) = normal(rng);
    const MultiChannelRecording source({noise_label}, {ChannelKind::EmgRef}, clean.sample_rate_hz(), std::move(noise));
    ds.eeg = contaminate(clean, source, ds.truth);
  }
  return ds;
}

std::vector<EventRecord> dataset_events(const IcaDecomposition& dec, const SimulatedDataset& ds,
                                        const std::string& layout, std::size_t dataset) {
  const std::size_t t = ds.eeg.channels();
  const std::size_t tau = ds.references.channels();
  if (ds.truth.assignments.size() != tau) throw ValidationError("dataset_events: one assignment per reference row expected");
  const auto report = identify_artifact_ics(dec, ground_truth_criteria(), ds.eeg.labels(), t, tau);
  std::vector<EventRecord> out;
  for (const auto& f : report.artifact_ics) {
    for (std::size_t k : f.reference_rows) {
      const auto view = make_column_view(dec.mixing, f.index, ds.truth.assignments[k].channels, t, tau);
      EventRecord r;
      r.layout = layout;
      r.dataset = dataset;
      r.ic = f.index;
      r.reference_row = k;
      for (double x : view.contaminated) r.mean_contaminated += std::abs(x);
      r.mean_contaminated /= static_cast<double>(view.contaminated.size());
      for (double x : view.uncontaminated) r.mean_uncontaminated += std::abs(x);
      r.mean_uncontaminated /= static_cast<double>(view.uncontaminated.size());
      for (double x : view.reference) r.max_reference = std::max(r.max_reference, std::abs(x));
      r.event = artifact_event(view);
      out.push_back(r);
    }
  }
  return out;
}

ScenarioResult run_scenario1(const ScenarioConfig& cfg) {
  return run_effectiveness(cfg, "scenario1", kTagScenario1, cfg.s1_grid,
                           [&](std::size_t g) { return std::pair{cfg.s1_types, g / cfg.s1_types}; });
}

ScenarioResult run_scenario2(const ScenarioConfig& cfg) {
  return run_effectiveness(cfg, "scenario2", kTagScenario2, cfg.s2_grid,
                           [&](std::size_t g) { return std::pair{g, cfg.s2_channels_per_type}; });
}

EventResult run_false_positive(const ScenarioConfig& cfg) {
  return run_events(cfg, "false_positive", kTagFalsePositive, Contaminant::IndependentNoise);
}

EventResult run_sensitivity(const ScenarioConfig& cfg) {
  return run_events(cfg, "sensitivity", kTagSensitivity, Contaminant::Emg);
}

std::string ai_records_csv(const std::vector<AiRecord>& records) {
  std::ostringstream os;
  os << "scenario,grid_value,dataset_index,condition,ic,artifact_index,infinite\n";
  for (const auto& r : records) {
    os << r.scenario << ',' << r.grid_value << ',' << r.dataset << ',' << r.condition << ',' << r.ic << ','
       << fmt(r.ai) << ',' << (r.infinite ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string grid_summary_csv(const ScenarioResult& result) {
  std::ostringstream os;
  os << "scenario,grid_value,datasets_ok,datasets_failed,n_erase,n_conventional,median_ai_erase,"
        "median_ai_conventional,rank_sum,p_value,exact\n";
  for (const auto& s : result.summary) {
    os << result.scenario << ',' << s.grid_value << ',' << s.datasets_ok << ',' << s.datasets_failed << ','
       << s.n_erase << ',' << s.n_conventional << ',' << fmt(s.median_erase) << ',' << fmt(s.median_conventional)
       << ',' << fmt(s.test.statistic) << ',' << fmt(s.test.p_value) << ',' << (s.test.exact ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string event_records_csv(const std::vector<EventRecord>& records) {
  std::ostringstream os;
  os << "layout,dataset_index,ic,reference_row,mean_contaminated,mean_uncontaminated,max_reference,event\n";
  for (const auto& r : records) {
    os << r.layout << ',' << r.dataset << ',' << r.ic << ',' << r.reference_row << ',' << fmt(r.mean_contaminated)
       << ',' << fmt(r.mean_uncontaminated) << ',' << fmt(r.max_reference) << ',' << (r.event ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string event_summary_csv(const EventResult& result) {
  std::ostringstream os;
  os << "experiment,layout,datasets_ok,datasets_failed,rate,median_contaminated,median_uncontaminated,rank_sum,"
        "p_value\n";
  for (const auto& s : result.summary) {
    os << result.experiment << ',' << s.layout << ',' << s.datasets_ok << ',' << s.datasets_failed << ','
       << fmt(s.rate) << ',' << fmt(s.median_contaminated) << ',' << fmt(s.median_uncontaminated) << ','
       << fmt(s.coefficients.statistic) << ',' << fmt(s.coefficients.p_value) << '\n';
  }
  return os.str();
}

std::string failures_csv(const std::vector<DatasetFailure>& failures) {
  std::ostringstream os;
  os << "grid_value,dataset_index,message\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << f.grid_value << ',' << f.dataset << ',' << msg << '\n';
  }
  return os.str();
}

void write_scenario_outputs(const std::filesystem::path& dir, const ScenarioResult& result) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "metrics.csv", ai_records_csv(result.records));
  write_text_file(dir / "summary.csv", grid_summary_csv(result));
  write_text_file(dir / "failures.csv", failures_csv(result.failures));
}

void write_event_outputs(const std::filesystem::path& dir, const EventResult& result) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "events.csv", event_records_csv(result.records));
  write_text_file(dir / "summary.csv", event_summary_csv(result));
  write_text_file(dir / "failures.csv", failures_csv(result.failures));
}

}  // namespace erase
