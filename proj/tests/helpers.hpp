#pragma once

#include "erase/recording.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace erase::test {

inline MultiChannelRecording single_channel(const std::vector<double>& x, double fs, const std::string& label = "Cz") {
  SignalMatrix d(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) d(0, static_cast<Eigen::Index>(i)) = x[i];
  return MultiChannelRecording({label}, {ChannelKind::Eeg}, fs, std::move(d));
}

inline std::vector<double> row(const MultiChannelRecording& rec, std::size_t r) {
  const auto& d = rec.data();
  std::vector<double> out(static_cast<std::size_t>(d.cols()));
  for (Eigen::Index i = 0; i < d.cols(); ++i) out[static_cast<std::size_t>(i)] = d(static_cast<Eigen::Index>(r), i);
  return out;
}

inline std::vector<double> sine(double freq_hz, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

/// Amplitude and phase of the freq_hz component over [first, last) by least-squares
/// projection on sin and cos.
struct Tone {
  double amplitude;
  double phase;
};

inline Tone fit_tone(const std::vector<double>& x, double freq_hz, double fs, std::size_t first, std::size_t last) {
  double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double w = 2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs;
    const double s = std::sin(w), c = std::cos(w);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    ys += x[i] * s;
    yc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return {std::hypot(a, b), std::atan2(b, a)};
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace erase::test
