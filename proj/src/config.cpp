#include "erase/config.hpp"

#include "erase/error.hpp"
#include "erase/recording_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace erase {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

FrequencyBand band_from_json(const json& j, const std::string& where) {
  try {
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_object()) return {j.at("low_hz").get<double>(), j.at("high_hz").get<double>()};
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  throw ValidationError(where + ": a band is [low, high] or {low_hz, high_hz}");
}

json band_to_json(const FrequencyBand& b) { return json::array({b.low_hz, b.high_hz}); }

}  // namespace

EegSimParams eeg_params_from_json(const json& j, EegSimParams base) {
  const std::string where = "eeg";
  check_keys(j, {"bands", "band_weights", "filter_order", "smoothing_sd_channels", "max_amplitude_uv"}, where);
  if (j.contains("bands")) {
    base.bands.clear();
    for (const auto& b : j.at("bands")) base.bands.push_back(band_from_json(b, where + ".bands"));
  }
  read(j, "band_weights", base.band_weights, where);
  read(j, "filter_order", base.filter_order, where);
  read(j, "smoothing_sd_channels", base.smoothing_sd_channels, where);
  read(j, "max_amplitude_uv", base.max_amplitude_uv, where);
  base.validate();
  return base;
}

FiberParams fiber_params_from_json(const json& j, FiberParams base) {
  const std::string where = "fiber";
  check_keys(j,
             {"fiber_length_mm", "endplate_mean_mm", "endplate_sd_mm", "velocity_mean_m_s", "velocity_sd",
              "observation_axial_mm", "observation_radial_mm", "spatial_step_mm", "scale_K"},
             where);
  read(j, "fiber_length_mm", base.fiber_length_mm, where);
  read(j, "endplate_mean_mm", base.endplate_mean_mm, where);
  read(j, "endplate_sd_mm", base.endplate_sd_mm, where);
  read(j, "velocity_mean_m_s", base.velocity_mean_m_s, where);
  read(j, "velocity_sd", base.velocity_sd, where);
  read(j, "observation_axial_mm", base.observation_axial_mm, where);
  read(j, "observation_radial_mm", base.observation_radial_mm, where);
  read(j, "spatial_step_mm", base.spatial_step_mm, where);
  read(j, "scale_K", base.scale_K, where);
  base.validate();
  return base;
}

FastIcaOptions ica_options_from_json(const json& j, FastIcaOptions base) {
  const std::string where = "ica";
  check_keys(j, {"max_iter", "tol", "max_restarts", "require_convergence", "n_components"}, where);
  read(j, "max_iter", base.max_iter, where);
  read(j, "tol", base.tol, where);
  read(j, "max_restarts", base.max_restarts, where);
  read(j, "require_convergence", base.require_convergence, where);
  if (j.contains("n_components")) {
    if (j.at("n_components").is_null()) {
      base.n_components.reset();
    } else {
      Eigen::Index n = 0;
      read(j, "n_components", n, where);
      base.n_components = n;
    }
  }
  base.validate();
  return base;
}

StftParams stft_params_from_json(const json& j, StftParams base) {
  const std::string where = "stft";
  check_keys(j, {"window_s", "hop_s"}, where);
  read(j, "window_s", base.window_s, where);
  read(j, "hop_s", base.hop_s, where);
  if (!(base.window_s > 0.0) || !(base.hop_s > 0.0)) throw ValidationError("stft: window and hop must be positive");
  return base;
}

MuscleSpec muscle_spec_from_json(const json& j) {
  const std::string where = "muscle";
  check_keys(j, {"name", "band", "topo_position", "rate_idle_hz", "rate_move_hz", "amplitude_uv_rms"}, where);
  if (!j.contains("name")) throw ValidationError("muscle: 'name' is required");
  const auto name = j.at("name").get<std::string>();
  MuscleSpec s;
  try {
    s = default_muscle_spec(name);
  } catch (const ValidationError&) {
    if (!j.contains("band")) throw ValidationError("muscle '" + name + "': unknown name needs an explicit band");
    s.name = name;
  }
  if (j.contains("band")) s.band = band_from_json(j.at("band"), where + ".band");
  read(j, "topo_position", s.topo_position, where);
  read(j, "rate_idle_hz", s.rate_idle_hz, where);
  read(j, "rate_move_hz", s.rate_move_hz, where);
  read(j, "amplitude_uv_rms", s.amplitude_uv_rms, where);
  s.validate();
  return s;
}

std::vector<MuscleSpec> muscle_specs_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("muscles: expected an array");
  std::vector<MuscleSpec> out;
  for (const auto& m : j) out.push_back(m.is_string() ? default_muscle_spec(m.get<std::string>()) : muscle_spec_from_json(m));
  return out;
}

ScenarioConfig scenario_config_from_json(const json& j, ScenarioConfig base) {
  const std::string where = "scenario";
  check_keys(j,
             {"n_datasets", "n_eeg_channels", "duration_s", "sample_rate_hz", "idle_s", "move_s", "s1_grid", "s1_types",
              "s2_grid", "s2_channels_per_type", "event_layouts", "fp_noise_sd_uv", "master_seed", "emg_specs", "eeg",
              "fiber", "ica", "hat_band_labels", "persist_datasets"},
             where);
  read(j, "n_datasets", base.n_datasets, where);
  read(j, "n_eeg_channels", base.n_eeg_channels, where);
  read(j, "duration_s", base.duration_s, where);
  read(j, "sample_rate_hz", base.sample_rate_hz, where);
  read(j, "idle_s", base.idle_s, where);
  read(j, "move_s", base.move_s, where);
  read(j, "s1_grid", base.s1_grid, where);
  read(j, "s1_types", base.s1_types, where);
  read(j, "s2_grid", base.s2_grid, where);
  read(j, "s2_channels_per_type", base.s2_channels_per_type, where);
  if (j.contains("event_layouts")) {
    base.event_layouts.clear();
    for (const auto& l : j.at("event_layouts")) {
      check_keys(l, {"label", "n_types", "channels_per_type"}, where + ".event_layouts");
      EventLayout e;
      read(l, "label", e.label, where);
      read(l, "n_types", e.n_types, where);
      read(l, "channels_per_type", e.channels_per_type, where);
      base.event_layouts.push_back(e);
    }
  }
  read(j, "fp_noise_sd_uv", base.fp_noise_sd_uv, where);
  read(j, "master_seed", base.master_seed, where);
  if (j.contains("emg_specs")) base.emg_specs = muscle_specs_from_json(j.at("emg_specs"));
  if (j.contains("eeg")) base.eeg = eeg_params_from_json(j.at("eeg"), base.eeg);
  if (j.contains("fiber")) base.fiber = fiber_params_from_json(j.at("fiber"), base.fiber);
  if (j.contains("ica")) base.ica = ica_options_from_json(j.at("ica"), base.ica);
  read(j, "hat_band_labels", base.hat_band_labels, where);
  read(j, "persist_datasets", base.persist_datasets, where);
  base.validate();
  return base;
}

SessionConfig session_config_from_json(const json& j, SessionConfig base) {
  const std::string where = "session";
  check_keys(j,
             {"n_eeg_channels", "eeg_rate_hz", "emg_rate_hz", "n_trials", "idle_s", "move_s", "trial_period_s",
              "lead_s", "mu_channel", "mu_frequency_hz", "mu_amplitude_uv", "erd_depth", "erd_ramp_s",
              "contamination", "contamination_gain", "reference_noise_uv", "preprocessing_band",
              "preprocessing_order", "mu_alpha", "hf_alpha", "muscles", "eeg", "fiber", "ica", "hat_band_labels",
              "gain", "stft"},
             where);
  read(j, "n_eeg_channels", base.n_eeg_channels, where);
  read(j, "eeg_rate_hz", base.eeg_rate_hz, where);
  read(j, "emg_rate_hz", base.emg_rate_hz, where);
  read(j, "n_trials", base.n_trials, where);
  read(j, "idle_s", base.idle_s, where);
  read(j, "move_s", base.move_s, where);
  read(j, "trial_period_s", base.trial_period_s, where);
  read(j, "lead_s", base.lead_s, where);
  read(j, "mu_channel", base.mu_channel, where);
  read(j, "mu_frequency_hz", base.mu_frequency_hz, where);
  read(j, "mu_amplitude_uv", base.mu_amplitude_uv, where);
  read(j, "erd_depth", base.erd_depth, where);
  read(j, "erd_ramp_s", base.erd_ramp_s, where);
  if (j.contains("contamination")) {
    base.contamination.clear();
    for (const auto& c : j.at("contamination")) {
      check_keys(c, {"muscle", "channels"}, where + ".contamination");
      MuscleContamination m;
      read(c, "muscle", m.muscle, where);
      read(c, "channels", m.channels, where);
      base.contamination.push_back(std::move(m));
    }
  }
  read(j, "contamination_gain", base.contamination_gain, where);
  read(j, "reference_noise_uv", base.reference_noise_uv, where);
  if (j.contains("preprocessing_band")) base.preprocessing_band = band_from_json(j.at("preprocessing_band"), where);
  read(j, "preprocessing_order", base.preprocessing_order, where);
  read(j, "mu_alpha", base.mu_alpha, where);
  read(j, "hf_alpha", base.hf_alpha, where);
  if (j.contains("muscles")) base.muscles = muscle_specs_from_json(j.at("muscles"));
  if (j.contains("eeg")) base.eeg = eeg_params_from_json(j.at("eeg"), base.eeg);
  if (j.contains("fiber")) base.fiber = fiber_params_from_json(j.at("fiber"), base.fiber);
  if (j.contains("ica")) base.ica = ica_options_from_json(j.at("ica"), base.ica);
  read(j, "hat_band_labels", base.hat_band_labels, where);
  if (j.contains("gain")) {
    const auto& g = j.at("gain");
    if (g.is_null() || (g.is_string() && g.get<std::string>() == "auto")) {
      base.gain.reset();
    } else {
      double v = 0.0;
      read(j, "gain", v, where);
      base.gain = v;
    }
  }
  if (j.contains("stft")) base.stft = stft_params_from_json(j.at("stft"), base.stft);
  base.validate();
  return base;
}

json to_json(const EegSimParams& p) {
  json bands = json::array();
  for (const auto& b : p.bands) bands.push_back(band_to_json(b));
  return {{"bands", bands},
          {"band_weights", p.band_weights},
          {"filter_order", p.filter_order},
          {"smoothing_sd_channels", p.smoothing_sd_channels},
          {"max_amplitude_uv", p.max_amplitude_uv}};
}

json to_json(const FiberParams& p) {
  return {{"fiber_length_mm", p.fiber_length_mm},
          {"endplate_mean_mm", p.endplate_mean_mm},
          {"endplate_sd_mm", p.endplate_sd_mm},
          {"velocity_mean_m_s", p.velocity_mean_m_s},
          {"velocity_sd", p.velocity_sd},
          {"observation_axial_mm", p.observation_axial_mm},
          {"observation_radial_mm", p.observation_radial_mm},
          {"spatial_step_mm", p.spatial_step_mm},
          {"scale_K", p.scale_K}};
}

json to_json(const FastIcaOptions& o) {
  return {{"max_iter", o.max_iter},
          {"tol", o.tol},
          {"max_restarts", o.max_restarts},
          {"require_convergence", o.require_convergence},
          {"n_components", o.n_components ? json(*o.n_components) : json(nullptr)}};
}

json to_json(const StftParams& p) { return {{"window_s", p.window_s}, {"hop_s", p.hop_s}}; }

json to_json(const MuscleSpec& s) {
  return {{"name", s.name},
          {"band", band_to_json(s.band)},
          {"topo_position", s.topo_position},
          {"rate_idle_hz", s.rate_idle_hz},
          {"rate_move_hz", s.rate_move_hz},
          {"amplitude_uv_rms", s.amplitude_uv_rms}};
}

json to_json(const ScenarioConfig& c) {
  json layouts = json::array();
  for (const auto& l : c.event_layouts) {
    layouts.push_back({{"label", l.label}, {"n_types", l.n_types}, {"channels_per_type", l.channels_per_type}});
  }
  json specs = json::array();
  for (const auto& s : c.emg_specs) specs.push_back(to_json(s));
  return {{"n_datasets", c.n_datasets},
          {"n_eeg_channels", c.n_eeg_channels},
          {"duration_s", c.duration_s},
          {"sample_rate_hz", c.sample_rate_hz},
          {"idle_s", c.idle_s},
          {"move_s", c.move_s},
          {"s1_grid", c.s1_grid},
          {"s1_types", c.s1_types},
          {"s2_grid", c.s2_grid},
          {"s2_channels_per_type", c.s2_channels_per_type},
          {"event_layouts", layouts},
          {"fp_noise_sd_uv", c.fp_noise_sd_uv},
          {"master_seed", c.master_seed},
          {"emg_specs", specs},
          {"eeg", to_json(c.eeg)},
          {"fiber", to_json(c.fiber)},
          {"ica", to_json(c.ica)},
          {"hat_band_labels", c.hat_band_labels},
          {"persist_datasets", c.persist_datasets}};
}

json to_json(const SessionConfig& c) {
  json contamination = json::array();
  for (const auto& m : c.contamination) contamination.push_back({{"muscle", m.muscle}, {"channels", m.channels}});
  json muscles = json::array();
  for (const auto& s : c.muscles) muscles.push_back(to_json(s));
  return {{"n_eeg_channels", c.n_eeg_channels},
          {"eeg_rate_hz", c.eeg_rate_hz},
          {"emg_rate_hz", c.emg_rate_hz},
          {"n_trials", c.n_trials},
          {"idle_s", c.idle_s},
          {"move_s", c.move_s},
          {"trial_period_s", c.trial_period_s},
          {"lead_s", c.lead_s},
          {"mu_channel", c.mu_channel},
          {"mu_frequency_hz", c.mu_frequency_hz},
          {"mu_amplitude_uv", c.mu_amplitude_uv},
          {"erd_depth", c.erd_depth},
          {"erd_ramp_s", c.erd_ramp_s},
          {"contamination", contamination},
          {"contamination_gain", c.contamination_gain},
          {"reference_noise_uv", c.reference_noise_uv},
          {"preprocessing_band", band_to_json(c.preprocessing_band)},
          {"preprocessing_order", c.preprocessing_order},
          {"mu_alpha", c.mu_alpha},
          {"hf_alpha", c.hf_alpha},
          {"muscles", muscles},
          {"eeg", to_json(c.eeg)},
          {"fiber", to_json(c.fiber)},
          {"ica", to_json(c.ica)},
          {"hat_band_labels", c.hat_band_labels},
          {"gain", c.gain ? json(*c.gain) : json("auto")},
          {"stft", to_json(c.stft)}};
}

std::vector<std::string> read_hat_band_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<std::string> labels;
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    try {
      const json doc = json::parse(text);
      labels = (doc.is_object() ? doc.at("labels") : doc).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ValidationError("hat band file " + path.string() + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      line = line.substr(0, line.find('#'));
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream words(line);
      std::string w;
      while (words >> w) labels.push_back(w);
    }
  }
  if (labels.empty()) throw ValidationError("hat band file " + path.string() + " lists no labels");
  return labels;
}

}  // namespace erase
