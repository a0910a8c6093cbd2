// erase: batch front end for the simulators, the ERASE pipeline and the validation
// experiments. Exit codes: 0 ok, 1 validation error, 2 numerical failure.

#include "erase/config.hpp"
#include "erase/eeg_sim.hpp"
#include "erase/emg_sim.hpp"
#include "erase/error.hpp"
#include "erase/fastica.hpp"
#include "erase/random.hpp"
#include "erase/recording_io.hpp"
#include "erase/rejection.hpp"
#include "erase/report.hpp"
#include "erase/scenarios.hpp"
#include "erase/session.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace erase;

namespace {

struct Common {
  std::optional<std::uint64_t> seed_opt;
  std::string config;
  std::string out;
  std::optional<std::size_t> datasets;
  std::string gain = "auto";
  std::string hat_band;
  std::string mu_channel;

  std::uint64_t seed() const { return seed_opt.value_or(0); }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed_opt, "Master seed (default 0, or the config's master_seed)");
  sub->add_option("--config", c.config, "JSON config document")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_option("--datasets", c.datasets, "Number of datasets or sessions");
  sub->add_option("--gain", c.gain, "Criterion-1 gain in [0.4, 3], or auto");
  sub->add_option("--hat-band", c.hat_band, "Hat-band label file")->check(CLI::ExistingFile);
  sub->add_option("--mu-channel", c.mu_channel, "Channel carrying the mu rhythm");
}

std::optional<double> parse_gain(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double g = 0.0;
  try {
    std::size_t used = 0;
    g = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ValidationError("--gain must be a number or 'auto', got '" + text + "'");
  }
  if (g < kGainMin || g > kGainMax) throw ValidationError("--gain must lie in [0.4, 3.0]");
  return g;
}

json load_config(const Common& c) { return c.config.empty() ? json::object() : read_json_file(c.config); }

// A config section, or the whole document when the section is absent.
json section(const json& doc, const char* key) {
  if (doc.contains(key)) return doc.at(key);
  return doc;
}

std::vector<std::string> hat_band_override(const Common& c) {
  return c.hat_band.empty() ? std::vector<std::string>{} : read_hat_band_file(c.hat_band);
}

ScenarioConfig scenario_config(const Common& c) {
  ScenarioConfig cfg = scenario_config_from_json(section(load_config(c), "scenario"));
  if (c.seed_opt) cfg.master_seed = *c.seed_opt;
  if (c.datasets) cfg.n_datasets = *c.datasets;
  if (!c.hat_band.empty()) cfg.hat_band_labels = hat_band_override(c);
  cfg.output_dir = fs::path(c.out);
  cfg.validate();
  return cfg;
}

SessionConfig session_config(const Common& c) {
  SessionConfig cfg = session_config_from_json(section(load_config(c), "session"));
  cfg.gain = parse_gain(c.gain);
  if (!c.hat_band.empty()) cfg.hat_band_labels = hat_band_override(c);
  if (!c.mu_channel.empty()) cfg.mu_channel = c.mu_channel;
  cfg.validate();
  return cfg;
}

void print_summary(const ScenarioResult& r) {
  for (const auto& s : r.summary) {
    std::cout << r.scenario << " grid=" << s.grid_value << " ok=" << s.datasets_ok << " failed=" << s.datasets_failed
              << " median_ai_erase=" << format_double(s.median_erase)
              << " median_ai_conventional=" << format_double(s.median_conventional)
              << " p=" << format_double(s.test.p_value) << '\n';
  }
}

void print_summary(const EventResult& r) {
  for (const auto& s : r.summary) {
    std::cout << r.experiment << ' ' << s.layout << " ok=" << s.datasets_ok << " failed=" << s.datasets_failed
              << " rate=" << format_double(s.rate) << " p=" << format_double(s.coefficients.p_value) << '\n';
  }
}

TrialSchedule schedule_for(double idle_s, double move_s, double duration_s) {
  const double period = idle_s + move_s;
  const auto n = static_cast<std::size_t>(std::floor(duration_s / period + 1e-9));
  return TrialSchedule::regular(n, idle_s, move_s, period);
}

// Schedule options shared by erase and ica-baseline when trial structure is needed.
struct ScheduleOpts {
  std::size_t n_trials = 0;
  double idle_s = 1.0;
  double move_s = 2.0;
  double period_s = 0.0;
  double offset_s = 0.0;

  void add(CLI::App* sub) {
    sub->add_option("--trials", n_trials, "Trial count (0: no trial structure)");
    sub->add_option("--idle", idle_s, "Idle window per trial, s");
    sub->add_option("--move", move_s, "Movement window per trial, s");
    sub->add_option("--period", period_s, "Trial period, s (default idle + move)");
    sub->add_option("--offset", offset_s, "Start of the first trial, s");
  }
  std::optional<TrialSchedule> schedule() const {
    if (n_trials == 0) return std::nullopt;
    const double period = period_s > 0.0 ? period_s : idle_s + move_s;
    return TrialSchedule::regular(n_trials, idle_s, move_s, period, offset_s);
  }
};

void write_erase_outputs(const fs::path& out, const EraseResult& r, double rate) {
  fs::create_directories(out);
  write_recording(out / "cleaned.json", r.cleaned);
  write_json_file(out / "report.json", to_json(r.report));
  if (!r.report.sweep.empty()) write_text_file(out / "sweep.csv", sweep_csv(r.report));
  write_decomposition(out / "decomposition", r.decomposition, rate);
}

std::vector<fs::path> collect_summaries(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() == "summary.json") out.push_back(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw ValidationError("report: no such input " + in);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMG artifact removal by reference-augmented ICA"};
  app.require_subcommand(1);
  Common c;

  // simulate-eeg
  auto* sim_eeg = app.add_subcommand("simulate-eeg", "Simulate clean multichannel EEG");
  add_common(sim_eeg, c);
  std::size_t n_channels = 32;
  double duration_s = 10.0;
  double rate_hz = 2000.0;
  sim_eeg->add_option("--channels", n_channels, "EEG channel count");
  sim_eeg->add_option("--duration", duration_s, "Duration, s");
  sim_eeg->add_option("--rate", rate_hz, "Sample rate, Hz");

  // simulate-emg
  auto* sim_emg = app.add_subcommand("simulate-emg", "Simulate reference EMG for a set of head muscles");
  add_common(sim_emg, c);
  std::vector<std::string> muscles;
  double idle_s = 1.0;
  double move_s = 2.0;
  sim_emg->add_option("--muscles", muscles, "Muscle names (default: the eight head muscles)");
  sim_emg->add_option("--duration", duration_s, "Duration, s");
  sim_emg->add_option("--rate", rate_hz, "Sample rate, Hz");
  sim_emg->add_option("--idle", idle_s, "Idle window per trial, s");
  sim_emg->add_option("--move", move_s, "Movement window per trial, s");

  // contaminate
  auto* contam = app.add_subcommand("contaminate", "Mix EMG into EEG channels");
  add_common(contam, c);
  std::string eeg_path;
  std::string emg_path;
  std::string truth_path;
  std::size_t per_type = 2;
  contam->add_option("--eeg", eeg_path, "Clean EEG recording")->required()->check(CLI::ExistingFile);
  contam->add_option("--emg", emg_path, "EMG recording, one row per type")->required()->check(CLI::ExistingFile);
  contam->add_option("--ground-truth", truth_path, "Contamination plan to apply")->check(CLI::ExistingFile);
  contam->add_option("--channels-per-type", per_type, "Random plan: channels per EMG type");

  // erase
  auto* erase_cmd = app.add_subcommand("erase", "Reference-augmented ICA with automated rejection");
  add_common(erase_cmd, c);
  std::string refs_path;
  std::string mode_text = "experimental";
  ScheduleOpts sched;
  erase_cmd->add_option("--eeg", eeg_path, "EEG recording")->required()->check(CLI::ExistingFile);
  erase_cmd->add_option("--refs", refs_path, "Reference EMG recording")->required()->check(CLI::ExistingFile);
  erase_cmd->add_option("--mode", mode_text, "experimental | simulated_ground_truth");
  sched.add(erase_cmd);

  // ica-baseline
  auto* ica_cmd = app.add_subcommand("ica-baseline", "Conventional ICA with the hat-band criterion");
  add_common(ica_cmd, c);
  ica_cmd->add_option("--eeg", eeg_path, "EEG recording")->required()->check(CLI::ExistingFile);

  auto* s1 = app.add_subcommand("scenario1", "Effectiveness vs. number of contaminated channels");
  add_common(s1, c);
  auto* s2 = app.add_subcommand("scenario2", "Effectiveness vs. number of EMG types");
  add_common(s2, c);
  auto* fp = app.add_subcommand("false-positive", "Independent-noise contamination");
  add_common(fp, c);
  auto* sens = app.add_subcommand("sensitivity", "Reference-matched contamination");
  add_common(sens, c);

  // session
  auto* sess = app.add_subcommand("session", "Movement-session pipeline over all conditions");
  add_common(sess, c);
  std::vector<std::string> condition_names;
  sess->add_option("--eeg", eeg_path, "Recorded EEG (default: pseudo-real sessions)")->check(CLI::ExistingFile);
  sess->add_option("--refs", refs_path, "Recorded reference EMG aligned to the EEG")->check(CLI::ExistingFile);
  sess->add_option("--conditions", condition_names, "Subset of erase_real, erase_simulated, conventional");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate session summaries");
  add_common(rep, c);
  std::vector<std::string> inputs;
  rep->add_option("inputs", inputs, "summary.json files or directories holding them")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    parse_gain(c.gain);
    const fs::path out(c.out);
    if (sim_eeg->parsed()) {
      const auto params = eeg_params_from_json(section(load_config(c), "eeg"));
      const auto rec = simulate_eeg(n_channels, duration_s, rate_hz, c.seed(), params);
      fs::create_directories(out);
      write_recording(out / "eeg.json", rec, PayloadFormat::Csv, {{"seed", c.seed()}, {"generator", to_json(params)}});
      std::cout << "wrote " << (out / "eeg.json").string() << '\n';
    } else if (sim_emg->parsed()) {
      const json doc = load_config(c);
      std::vector<MuscleSpec> specs;
      if (!muscles.empty()) {
        for (const auto& m : muscles) specs.push_back(default_muscle_spec(m));
      } else if (doc.contains("muscles")) {
        specs = muscle_specs_from_json(doc.at("muscles"));
      } else {
        specs = default_head_muscles();
      }
      const auto fiber = doc.contains("fiber") ? fiber_params_from_json(doc.at("fiber")) : FiberParams{};
      const auto rec =
          simulate_head_emg_set(specs, schedule_for(idle_s, move_s, duration_s), rate_hz, c.seed(), duration_s, fiber);
      fs::create_directories(out);
      json spec_doc = json::array();
      for (const auto& s : specs) spec_doc.push_back(to_json(s));
      write_recording(out / "emg.json", rec, PayloadFormat::Csv,
                      {{"seed", c.seed()}, {"muscles", spec_doc}, {"fiber", to_json(fiber)}});
      std::cout << "wrote " << (out / "emg.json").string() << '\n';
    } else if (contam->parsed()) {
      const auto eeg = read_recording(eeg_path);
      const auto emg = read_recording(emg_path);
      ContaminationGroundTruth plan;
      if (!truth_path.empty()) {
        plan = ground_truth_from_json(read_json_file(truth_path));
      } else {
        const std::size_t types = emg.channels();
        if (per_type == 0 || types * per_type >= eeg.channels()) {
          throw ValidationError("contaminate: channels-per-type leaves no uncontaminated channel");
        }
        std::vector<std::size_t> order(eeg.channels());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(c.seed(), 3));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        plan.rng_seed = c.seed();
        for (std::size_t k = 0; k < types; ++k) {
          ContaminationAssignment a;
          a.emg_type = emg.labels()[k];
          a.channels.assign(order.begin() + static_cast<std::ptrdiff_t>(k * per_type),
                            order.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_type));
          std::sort(a.channels.begin(), a.channels.end());
          a.weights = draw_contamination_weights(per_type, derive_seed(c.seed(), {4, k}));
          plan.assignments.push_back(std::move(a));
        }
      }
      plan.validate(eeg.channels());
      fs::create_directories(out);
      write_recording(out / "contaminated.json", contaminate(eeg, emg, plan));
      write_recording(out / "references.json", emg);
      write_json_file(out / "ground_truth.json", to_json(plan));
      std::cout << "wrote " << (out / "contaminated.json").string() << '\n';
    } else if (erase_cmd->parsed()) {
      const auto eeg = read_recording(eeg_path);
      const auto refs = read_recording(refs_path);
      RejectionCriteria crit;
      crit.mode = parse_rejection_mode(mode_text);
      crit.gain = parse_gain(c.gain);
      crit.hat_band_labels = c.hat_band.empty() ? hat_band_for(eeg.labels()) : hat_band_override(c);
      if (crit.mode == RejectionMode::SimulatedGroundTruth) crit.use_hat_band = false;
      const json doc = load_config(c);
      const auto ica = doc.contains("ica") ? ica_options_from_json(doc.at("ica")) : FastIcaOptions{};
      const auto schedule = sched.schedule();
      std::optional<TrialEpochs> epochs;
      GainSelectionContext ctx;
      EraseResult r;
      if (!crit.gain && crit.mode == RejectionMode::Experimental) {
        if (!schedule) throw ValidationError("erase: --gain auto needs a trial schedule (--trials)");
        epochs = concatenate_trials(eeg, *schedule);
        ctx.epochs = &*epochs;
        if (!c.mu_channel.empty()) ctx.mu_channel = c.mu_channel;
        const auto ref_epochs = concatenate_trials(refs, *schedule);
        r = run_erase(epochs->concatenated, ref_epochs.concatenated, crit, c.seed(), ica, &ctx);
      } else {
        r = run_erase(eeg, refs, crit, c.seed(), ica);
      }
      write_erase_outputs(out, r, eeg.sample_rate_hz());
      std::cout << "rejected " << r.report.artifact_ics.size() << " of " << r.decomposition.mixing.cols()
                << " ICs; gain " << (r.report.gain ? format_double(*r.report.gain) : std::string("n/a")) << '\n';
    } else if (ica_cmd->parsed()) {
      const auto eeg = read_recording(eeg_path);
      RejectionCriteria crit;
      crit.use_threshold = false;
      crit.hat_band_labels = c.hat_band.empty() ? hat_band_for(eeg.labels()) : hat_band_override(c);
      const json doc = load_config(c);
      const auto ica = doc.contains("ica") ? ica_options_from_json(doc.at("ica")) : FastIcaOptions{};
      const auto r = run_conventional_ica(eeg, crit, c.seed(), ica);
      write_erase_outputs(out, r, eeg.sample_rate_hz());
      std::cout << "rejected " << r.report.artifact_ics.size() << " of " << r.decomposition.mixing.cols() << " ICs\n";
    } else if (s1->parsed() || s2->parsed()) {
      const auto cfg = scenario_config(c);
      const auto r = s1->parsed() ? run_scenario1(cfg) : run_scenario2(cfg);
      write_scenario_outputs(out, r);
      write_json_file(out / "config.json", to_json(cfg));
      print_summary(r);
    } else if (fp->parsed() || sens->parsed()) {
      const auto cfg = scenario_config(c);
      const auto r = fp->parsed() ? run_false_positive(cfg) : run_sensitivity(cfg);
      write_event_outputs(out, r);
      write_json_file(out / "config.json", to_json(cfg));
      print_summary(r);
    } else if (sess->parsed()) {
      const auto cfg = session_config(c);
      std::vector<SessionCondition> conds;
      for (const auto& n : condition_names) conds.push_back(parse_session_condition(n));
      if (conds.empty()) {
        conds = {SessionCondition::EraseReal, SessionCondition::EraseSimulated, SessionCondition::Conventional};
      }
      std::vector<SessionSummary> summaries;
      auto run_one = [&](const SessionRecordSet& rs, std::uint64_t seed, const fs::path& dir) {
        const auto run = run_session(rs, cfg, seed, conds);
        write_session_outputs(dir, run);
        for (const auto& s : run.summary.conditions) {
          std::cout << dir.filename().string() << ' ' << s.condition << " rejected=" << s.n_rejected
                    << " hf_reduction=" << format_double(s.hf_percent_reduction)
                    << " mu_z=" << format_double(s.mu_mean_z_at_mu_channel) << '\n';
        }
        summaries.push_back(run.summary);
      };
      if (!eeg_path.empty()) {
        if (refs_path.empty()) throw ValidationError("session: --eeg needs --refs");
        SessionRecordSet rs;
        rs.eeg = read_recording(eeg_path);
        rs.real_references = read_recording(refs_path);
        rs.schedule = cfg.schedule();
        rs.mu_channel = cfg.mu_channel;
        rs.session = fs::path(eeg_path).stem().string();
        run_one(rs, c.seed(), out / "session_0");
      } else {
        const std::size_t n = c.datasets.value_or(1);
        if (n == 0) throw ValidationError("session: --datasets must be positive");
        for (std::size_t i = 0; i < n; ++i) {
          const std::uint64_t seed = derive_seed(c.seed(), i);
          const auto rs = make_pseudo_real_session(cfg, seed);
          const fs::path dir = out / ("session_" + std::to_string(i));
          fs::create_directories(dir);
          if (rs.truth) write_json_file(dir / "ground_truth.json", to_json(*rs.truth));
          run_one(rs, seed, dir);
        }
      }
      write_json_file(out / "config.json", to_json(cfg));
      write_report_outputs(out / "report", aggregate_report(summaries));
    } else if (rep->parsed()) {
      std::vector<SessionSummary> summaries;
      for (const auto& p : collect_summaries(inputs)) summaries.push_back(session_summary_from_json(read_json_file(p)));
      const auto report = aggregate_report(summaries);
      write_report_outputs(out, report);
      std::cout << condition_table_csv(report);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
