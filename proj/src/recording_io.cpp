#include "erase/recording_io.hpp"

#include "erase/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace erase {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw ValidationError("cannot format value");
  return std::string(buf.data(), end);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

json recording_header(const MultiChannelRecording& rec) {
  json kinds = json::array();
  for (auto k : rec.kinds()) kinds.push_back(std::string(to_string(k)));
  return json{{"format_version", kRecordingFormatVersion},
              {"sample_rate_hz", rec.sample_rate_hz()},
              {"labels", rec.labels()},
              {"kinds", kinds},
              {"samples", rec.samples()}};
}

std::string matrix_to_csv(const std::vector<std::string>& header, const SignalMatrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12 + 64);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (Eigen::Index s = 0; s < m.cols(); ++s) {
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
      if (c) out += ',';
      out += format_double(m(c, s));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("csv: not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

SignalMatrix csv_to_matrix(const std::string& text, const std::vector<std::string>& expected_header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: missing header row");
  const auto header = split(line, ',');
  if (header != expected_header) throw ValidationError("csv: header does not match channel labels");
  const auto n_ch = static_cast<Eigen::Index>(header.size());
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n_ch) {
      throw ValidationError("csv: row " + std::to_string(rows + 1) + " has " +
                            std::to_string(cells.size()) + " fields, expected " + std::to_string(n_ch));
    }
    for (const auto& c : cells) values.push_back(parse_double(c));
    ++rows;
  }
  SignalMatrix m(n_ch, rows);
  for (Eigen::Index s = 0; s < rows; ++s) {
    for (Eigen::Index c = 0; c < n_ch; ++c) m(c, s) = values[static_cast<std::size_t>(s * n_ch + c)];
  }
  return m;
}

namespace {

fs::path sidecar_for(const fs::path& doc) {
  fs::path p = doc;
  p.replace_extension(".f32");
  return p;
}

void write_raw(const fs::path& path, const SignalMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  std::vector<char> bytes(static_cast<std::size_t>(m.size()) * 4);
  std::size_t off = 0;
  for (Eigen::Index c = 0; c < m.rows(); ++c) {
    for (Eigen::Index s = 0; s < m.cols(); ++s) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m(c, s)));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(bytes.data() + off, &bits, 4);
      off += 4;
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SignalMatrix read_raw(const fs::path& path, Eigen::Index channels, Eigen::Index samples) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ValidationError("cannot open raw payload " + path.string());
  const auto size = static_cast<std::uint64_t>(in.tellg());
  const auto expected = static_cast<std::uint64_t>(channels) * static_cast<std::uint64_t>(samples) * 4U;
  if (size != expected) {
    throw ValidationError("raw payload " + path.string() + " holds " + std::to_string(size / 4) +
                          " values, metadata implies " + std::to_string(expected / 4));
  }
  in.seekg(0);
  std::vector<char> bytes(size);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  SignalMatrix m(channels, samples);
  std::size_t off = 0;
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index s = 0; s < samples; ++s) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, bytes.data() + off, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      m(c, s) = static_cast<double>(std::bit_cast<float>(bits));
      off += 4;
    }
  }
  return m;
}

}  // namespace

void write_recording(const fs::path& path, const MultiChannelRecording& rec, PayloadFormat format,
                     const json& extra) {
  json doc = recording_header(rec);
  if (!extra.empty()) doc["metadata"] = extra;
  if (format == PayloadFormat::Csv) {
    doc["payload"] = "csv";
    doc["csv"] = matrix_to_csv(rec.labels(), rec.data());
  } else {
    const fs::path side = sidecar_for(path);
    doc["payload"] = "raw";
    doc["payload_file"] = side.filename().string();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_raw(side, rec.data());
  }
  write_json_file(path, doc);
}

MultiChannelRecording read_recording(const fs::path& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.at("format_version").get<int>() != kRecordingFormatVersion) {
      throw ValidationError("unsupported recording format_version");
    }
    const auto labels = doc.at("labels").get<std::vector<std::string>>();
    std::vector<ChannelKind> kinds;
    for (const auto& k : doc.at("kinds")) kinds.push_back(parse_channel_kind(k.get<std::string>()));
    const double rate = doc.at("sample_rate_hz").get<double>();
    const std::string payload = doc.value("payload", "csv");
    SignalMatrix data;
    if (payload == "csv") {
      data = csv_to_matrix(doc.at("csv").get<std::string>(), labels);
      if (doc.contains("samples") && doc["samples"].get<Eigen::Index>() != data.cols()) {
        throw ValidationError("recording: csv has " + std::to_string(data.cols()) +
                              " samples, metadata says " + doc["samples"].dump());
      }
    } else if (payload == "raw") {
      const auto samples = doc.at("samples").get<Eigen::Index>();
      fs::path side = path.parent_path() / doc.value("payload_file", sidecar_for(path).filename().string());
      data = read_raw(side, static_cast<Eigen::Index>(labels.size()), samples);
    } else {
      throw ValidationError("unknown payload kind '" + payload + "'");
    }
    return MultiChannelRecording(labels, std::move(kinds), rate, std::move(data));
  } catch (const json::exception& e) {
    throw ValidationError("recording " + path.string() + ": " + e.what());
  }
}

}  // namespace erase
