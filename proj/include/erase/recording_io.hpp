#pragma once

#include "erase/recording.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace erase {

/// On-disk layout for recordings.
///
/// A recording is a JSON document
///   {"format_version": 1, "sample_rate_hz": ..., "labels": [...], "kinds": [...],
///    "samples": N, "payload": "csv" | "raw", ...}
/// With payload "csv" the field "csv" holds the samples inline: one header row of
/// labels, then one row per sample in decimal microvolts. With payload "raw" the field
/// "payload_file" names a sidecar (relative to the document) of little-endian float32
/// values, channel-major. Readers reject sample-count mismatches.
enum class PayloadFormat { Csv, Raw };

inline constexpr int kRecordingFormatVersion = 1;

/// Writes `path` (and the sidecar for Raw). `extra` keys are merged into the document
/// under "metadata" so provenance (seeds, generator parameters) travels with the data.
void write_recording(const std::filesystem::path& path, const MultiChannelRecording& rec,
                     PayloadFormat format = PayloadFormat::Csv,
                     const nlohmann::json& extra = nlohmann::json::object());

MultiChannelRecording read_recording(const std::filesystem::path& path);

/// Document-level helpers, exposed for the decomposition writer and tests.
nlohmann::json recording_header(const MultiChannelRecording& rec);
std::string matrix_to_csv(const std::vector<std::string>& header, const SignalMatrix& channel_major);
SignalMatrix csv_to_matrix(const std::string& text, const std::vector<std::string>& expected_header);

std::string format_double(double v);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace erase
