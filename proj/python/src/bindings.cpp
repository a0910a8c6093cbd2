#include "erase/config.hpp"
#include "erase/eeg_sim.hpp"
#include "erase/emg_sim.hpp"
#include "erase/error.hpp"
#include "erase/fastica.hpp"
#include "erase/metrics.hpp"
#include "erase/rejection.hpp"
#include "erase/scenarios.hpp"
#include "erase/stats.hpp"
#include "erase/trials.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace erase;

namespace {

std::vector<ChannelKind> parse_kinds(const std::vector<std::string>& kinds) {
  std::vector<ChannelKind> out;
  for (const auto& k : kinds) out.push_back(parse_channel_kind(k));
  return out;
}

std::vector<std::string> kind_names(const MultiChannelRecording& r) {
  std::vector<std::string> out;
  for (auto k : r.kinds()) out.emplace_back(to_string(k));
  return out;
}

RejectionCriteria criteria(std::optional<double> gain, const std::optional<std::vector<std::string>>& hat_band,
                           const std::vector<std::string>& eeg_labels, const std::string& mode) {
  RejectionCriteria c;
  c.mode = parse_rejection_mode(mode);
  c.gain = gain;
  c.hat_band_labels = hat_band ? *hat_band : hat_band_for(eeg_labels);
  if (c.mode == RejectionMode::SimulatedGroundTruth) c.use_hat_band = false;
  return c;
}

FastIcaOptions ica_options(int max_iter, double tol, int max_restarts) {
  FastIcaOptions o;
  o.max_iter = max_iter;
  o.tol = tol;
  o.max_restarts = max_restarts;
  return o;
}

std::set<Eigen::Index> to_set(const std::vector<Eigen::Index>& v) { return {v.begin(), v.end()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the erase package";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  (void)validation;
  (void)numerical;

  py::class_<MultiChannelRecording>(m, "Recording")
      .def(py::init([](std::vector<std::string> labels, const std::vector<std::string>& kinds, double rate,
                       const Eigen::MatrixXd& data) {
             return MultiChannelRecording(std::move(labels), parse_kinds(kinds), rate, SignalMatrix(data));
           }),
           py::arg("labels"), py::arg("kinds"), py::arg("sample_rate_hz"), py::arg("data"))
      .def_property_readonly("labels", &MultiChannelRecording::labels)
      .def_property_readonly("kinds", &kind_names)
      .def_property_readonly("sample_rate_hz", &MultiChannelRecording::sample_rate_hz)
      .def_property_readonly("data", [](const MultiChannelRecording& r) { return Eigen::MatrixXd(r.data()); })
      .def_property_readonly("channels", &MultiChannelRecording::channels)
      .def_property_readonly("samples", &MultiChannelRecording::samples)
      .def("__repr__", [](const MultiChannelRecording& r) {
        return "<Recording " + std::to_string(r.channels()) + " x " + std::to_string(r.samples()) + " @ " +
               std::to_string(r.sample_rate_hz()) + " Hz>";
      });

  py::class_<IcaDecomposition>(m, "Decomposition")
      .def_readonly("mixing", &IcaDecomposition::mixing)
      .def_readonly("unmixing", &IcaDecomposition::unmixing)
      .def_readonly("sources", &IcaDecomposition::sources)
      .def_readonly("seed", &IcaDecomposition::seed)
      .def_property_readonly("mean", [](const IcaDecomposition& d) { return d.whitening.mean; })
      .def_property_readonly("converged", [](const IcaDecomposition& d) { return d.diagnostics.converged; })
      .def_property_readonly("iterations", [](const IcaDecomposition& d) { return d.diagnostics.iterations; });

  m.def("default_eeg_labels", &default_eeg_labels, py::arg("n_channels"));
  m.def("default_hat_band_labels", &default_hat_band_labels);
  m.def("default_gain_grid", &default_gain_grid);

  m.def(
      "simulate_eeg",
      [](std::size_t n, double duration, double rate, std::uint64_t seed) { return simulate_eeg(n, duration, rate, seed); },
      py::arg("n_channels") = 32, py::arg("duration_s") = 10.0, py::arg("sample_rate_hz") = 2000.0,
      py::arg("seed") = 0);

  m.def(
      "simulate_head_emg",
      [](const std::optional<std::vector<std::string>>& muscles, double duration, double rate, std::uint64_t seed,
         double idle_s, double move_s) {
        std::vector<MuscleSpec> specs;
        if (muscles) {
          for (const auto& name : *muscles) specs.push_back(default_muscle_spec(name));
        } else {
          specs = default_head_muscles();
        }
        const auto n = static_cast<std::size_t>(duration / (idle_s + move_s) + 1e-9);
        const auto schedule = TrialSchedule::regular(n, idle_s, move_s, idle_s + move_s);
        return simulate_head_emg_set(specs, schedule, rate, seed, duration);
      },
      py::arg("muscles") = py::none(), py::arg("duration_s") = 10.0, py::arg("sample_rate_hz") = 2000.0,
      py::arg("seed") = 0, py::arg("idle_s") = 1.0, py::arg("move_s") = 2.0);

  m.def(
      "contaminate",
      [](const MultiChannelRecording& eeg, const MultiChannelRecording& emg, const std::string& plan_json) {
        return contaminate(eeg, emg, ground_truth_from_json(nlohmann::json::parse(plan_json)));
      },
      py::arg("eeg"), py::arg("emg"), py::arg("plan_json"));

  m.def(
      "fastica",
      [](const Eigen::MatrixXd& data, std::uint64_t seed, int max_iter, double tol, int max_restarts) {
        return fastica(data, seed, ica_options(max_iter, tol, max_restarts));
      },
      py::arg("data"), py::arg("seed") = 0, py::arg("max_iter") = 1000, py::arg("tol") = 1e-6,
      py::arg("max_restarts") = 5);
  m.def(
      "reconstruct_without",
      [](const IcaDecomposition& d, const std::vector<Eigen::Index>& rejected) {
        return reconstruct_without(d, to_set(rejected));
      },
      py::arg("decomposition"), py::arg("rejected"));

  m.def("rms_of_reference_rows", &rms_of_reference_rows, py::arg("mixing"), py::arg("t"), py::arg("tau"));
  m.def(
      "identify_artifact_ics",
      [](const Eigen::MatrixXd& a, const std::vector<std::string>& eeg_labels, std::size_t tau,
         std::optional<double> gain, const std::optional<std::vector<std::string>>& hat_band, const std::string& mode,
         bool use_threshold, bool use_hat_band) {
        auto c = criteria(gain, hat_band, eeg_labels, mode);
        c.use_threshold = use_threshold;
        c.use_hat_band = c.use_hat_band && use_hat_band;
        return to_json(identify_artifact_ics(a, c, eeg_labels, eeg_labels.size(), tau)).dump();
      },
      py::arg("mixing"), py::arg("eeg_labels"), py::arg("tau"), py::arg("gain") = py::none(),
      py::arg("hat_band") = py::none(), py::arg("mode") = "experimental", py::arg("use_threshold") = true,
      py::arg("use_hat_band") = true);

  m.def(
      "run_erase",
      [](const MultiChannelRecording& eeg, const MultiChannelRecording& refs, std::optional<double> gain,
         const std::optional<std::vector<std::string>>& hat_band, const std::string& mode, std::uint64_t seed,
         std::size_t n_trials, double idle_s, double move_s, double period_s, const std::string& mu_channel,
         int max_iter, int max_restarts) {
        const auto crit = criteria(gain, hat_band, eeg.labels(), mode);
        const auto ica = ica_options(max_iter, 1e-6, max_restarts);
        EraseResult r;
        if (!gain && crit.mode == RejectionMode::Experimental) {
          if (n_trials == 0) throw ValidationError("run_erase: automatic gain needs n_trials > 0");
          const auto schedule =
              TrialSchedule::regular(n_trials, idle_s, move_s, period_s > 0.0 ? period_s : idle_s + move_s);
          const auto epochs = concatenate_trials(eeg, schedule);
          GainSelectionContext ctx;
          ctx.epochs = &epochs;
          ctx.mu_channel = mu_channel;
          r = run_erase(epochs.concatenated, concatenate_trials(refs, schedule).concatenated, crit, seed, ica, &ctx);
        } else {
          r = run_erase(eeg, refs, crit, seed, ica);
        }
        return py::make_tuple(r.cleaned, to_json(r.report).dump(), r.decomposition);
      },
      py::arg("eeg"), py::arg("refs"), py::arg("gain") = py::none(), py::arg("hat_band") = py::none(),
      py::arg("mode") = "experimental", py::arg("seed") = 0, py::arg("n_trials") = 0, py::arg("idle_s") = 1.0,
      py::arg("move_s") = 2.0, py::arg("period_s") = 0.0, py::arg("mu_channel") = "C3", py::arg("max_iter") = 1000,
      py::arg("max_restarts") = 5);

  m.def(
      "run_conventional_ica",
      [](const MultiChannelRecording& eeg, const std::optional<std::vector<std::string>>& hat_band, std::uint64_t seed,
         int max_iter, int max_restarts) {
        auto crit = criteria(std::nullopt, hat_band, eeg.labels(), "experimental");
        const auto r = run_conventional_ica(eeg, crit, seed, ica_options(max_iter, 1e-6, max_restarts));
        return py::make_tuple(r.cleaned, to_json(r.report).dump(), r.decomposition);
      },
      py::arg("eeg"), py::arg("hat_band") = py::none(), py::arg("seed") = 0, py::arg("max_iter") = 1000,
      py::arg("max_restarts") = 5);

  m.def(
      "artifact_index",
      [](const Eigen::MatrixXd& a, Eigen::Index column, const std::vector<std::size_t>& rows, std::size_t t,
         std::size_t tau) { return artifact_index(make_column_view(a, column, rows, t, tau)).value; },
      py::arg("mixing"), py::arg("column"), py::arg("contaminated_rows"), py::arg("t"), py::arg("tau"));
  m.def(
      "artifact_event",
      [](const Eigen::MatrixXd& a, Eigen::Index column, const std::vector<std::size_t>& rows, std::size_t t,
         std::size_t tau) { return artifact_event(make_column_view(a, column, rows, t, tau)); },
      py::arg("mixing"), py::arg("column"), py::arg("contaminated_rows"), py::arg("t"), py::arg("tau"));
  m.def("percent_reduction", py::overload_cast<double, double>(&percent_reduction), py::arg("before_sum"),
        py::arg("after_sum"));

  m.def(
      "wilcoxon_rank_sum",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = wilcoxon_rank_sum(a, b);
        py::dict d;
        d["statistic"] = r.statistic;
        d["p_value"] = r.p_value;
        d["z"] = r.z;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "run_scenario",
      [](const std::string& name, const std::string& config_json) {
        const auto cfg = scenario_config_from_json(nlohmann::json::parse(config_json));
        py::dict d;
        if (name == "scenario1" || name == "scenario2") {
          const auto r = name == "scenario1" ? run_scenario1(cfg) : run_scenario2(cfg);
          d["metrics"] = ai_records_csv(r.records);
          d["summary"] = grid_summary_csv(r);
          d["failures"] = failures_csv(r.failures);
        } else if (name == "false-positive" || name == "sensitivity") {
          const auto r = name == "false-positive" ? run_false_positive(cfg) : run_sensitivity(cfg);
          d["metrics"] = event_records_csv(r.records);
          d["summary"] = event_summary_csv(r);
          d["failures"] = failures_csv(r.failures);
        } else {
          throw ValidationError("run_scenario: unknown experiment '" + name + "'");
        }
        return d;
      },
      py::arg("name"), py::arg("config_json") = "{}");
}
