#include "erase/spectral.hpp"

#include "erase/error.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace erase {

namespace {

struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
};

struct Plan {
  std::size_t win = 0;
  std::size_t hop = 0;
  std::vector<double> hann;
  double psd_scale = 0.0;  // one-sided PSD times bin width
  std::vector<BinRange> bins;
};

Plan make_plan(double fs, std::size_t n, std::span<const FrequencyBand> bands, StftParams p) {
  if (!(p.window_s > 0.0) || !(p.hop_s > 0.0)) throw ValidationError("band_power: window and hop must be positive");
  Plan plan;
  plan.win = static_cast<std::size_t>(std::llround(p.window_s * fs));
  plan.hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.hop_s * fs)));
  if (plan.win < 2) throw ValidationError("band_power: window shorter than two samples");
  if (plan.win > n) {
    throw ValidationError("band_power: window (" + std::to_string(plan.win) + " samples) longer than segment (" +
                          std::to_string(n) + ")");
  }
  plan.hann.resize(plan.win);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < plan.win; ++i) {
    // periodic Hann
    plan.hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(plan.win));
    sum_sq += plan.hann[i] * plan.hann[i];
  }
  const double df = fs / static_cast<double>(plan.win);
  plan.psd_scale = df / (fs * sum_sq);
  for (const auto& b : bands) {
    b.validate(fs);
    BinRange r;
    r.first = static_cast<std::size_t>(std::ceil(b.low_hz / df - 1e-9));
    r.last = static_cast<std::size_t>(std::floor(b.high_hz / df + 1e-9)) + 1;
    r.last = std::min(r.last, plan.win / 2 + 1);
    plan.bins.push_back(r);
  }
  return plan;
}

void accumulate(const Plan& plan, std::span<const double> x, Eigen::FFT<double>& fft,
                std::vector<double>& frame, std::vector<std::complex<double>>& spec, double* out) {
  const std::size_t n_bands = plan.bins.size();
  for (std::size_t b = 0; b < n_bands; ++b) out[b] = 0.0;
  std::size_t frames = 0;
  const std::size_t half = plan.win / 2;
  for (std::size_t start = 0; start + plan.win <= x.size(); start += plan.hop) {
    for (std::size_t i = 0; i < plan.win; ++i) frame[i] = x[start + i] * plan.hann[i];
    fft.fwd(spec, frame);
    for (std::size_t b = 0; b < n_bands; ++b) {
      double acc = 0.0;
      for (std::size_t k = plan.bins[b].first; k < plan.bins[b].last; ++k) {
        const double one_sided = (k == 0 || (plan.win % 2 == 0 && k == half)) ? 1.0 : 2.0;
        acc += one_sided * std::norm(spec[k]);
      }
      out[b] += acc * plan.psd_scale;
    }
    ++frames;
  }
  for (std::size_t b = 0; b < n_bands; ++b) out[b] /= static_cast<double>(frames);
}

}  // namespace

std::vector<double> band_powers(std::span<const double> x, double fs, std::span<const FrequencyBand> bands,
                                StftParams params) {
  const Plan plan = make_plan(fs, x.size(), bands, params);
  Eigen::FFT<double> fft;
  std::vector<double> frame(plan.win);
  std::vector<std::complex<double>> spec;
  std::vector<double> out(bands.size());
  accumulate(plan, x, fft, frame, spec, out.data());
  return out;
}

Eigen::MatrixXd band_powers(const MultiChannelRecording& segment, std::span<const FrequencyBand> bands,
                            StftParams params) {
  const Plan plan = make_plan(segment.sample_rate_hz(), segment.samples(), bands, params);
  Eigen::FFT<double> fft;
  std::vector<double> frame(plan.win);
  std::vector<std::complex<double>> spec;
  std::vector<double> row(bands.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(segment.channels()), static_cast<Eigen::Index>(bands.size()));
  for (Eigen::Index c = 0; c < out.rows(); ++c) {
    accumulate(plan, std::span<const double>(segment.data().row(c).data(), segment.samples()), fft, frame, spec,
               row.data());
    for (Eigen::Index b = 0; b < out.cols(); ++b) out(c, b) = row[static_cast<std::size_t>(b)];
  }
  return out;
}

Eigen::VectorXd band_power(const MultiChannelRecording& segment, FrequencyBand band, StftParams params) {
  const FrequencyBand bands[] = {band};
  return band_powers(segment, bands, params).col(0);
}

}  // namespace erase
