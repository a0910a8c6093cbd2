#pragma once

#include "erase/scenarios.hpp"
#include "erase/session.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace erase {

// JSON config documents. Every loader starts from `base` and overrides only the keys
// present; unknown keys are a ValidationError so typos do not pass silently.

EegSimParams eeg_params_from_json(const nlohmann::json& j, EegSimParams base = {});
FiberParams fiber_params_from_json(const nlohmann::json& j, FiberParams base = {});
FastIcaOptions ica_options_from_json(const nlohmann::json& j, FastIcaOptions base = {});
StftParams stft_params_from_json(const nlohmann::json& j, StftParams base = {});

/// Starts from the default spec of the same name when the name is known.
MuscleSpec muscle_spec_from_json(const nlohmann::json& j);
std::vector<MuscleSpec> muscle_specs_from_json(const nlohmann::json& j);

ScenarioConfig scenario_config_from_json(const nlohmann::json& j, ScenarioConfig base = {});
SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig base = {});

nlohmann::json to_json(const EegSimParams& p);
nlohmann::json to_json(const FiberParams& p);
nlohmann::json to_json(const FastIcaOptions& o);
nlohmann::json to_json(const StftParams& p);
nlohmann::json to_json(const MuscleSpec& s);
nlohmann::json to_json(const ScenarioConfig& c);
nlohmann::json to_json(const SessionConfig& c);

/// Labels from a JSON array, a JSON object with a "labels" array, or plain text with
/// one or more labels per line separated by whitespace or commas ('#' starts a comment).
std::vector<std::string> read_hat_band_file(const std::filesystem::path& path);

}  // namespace erase
