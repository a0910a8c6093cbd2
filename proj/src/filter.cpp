#include "erase/filter.hpp"

#include "erase/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace erase {

using cd = std::complex<double>;

std::complex<double> SosFilter::response(double freq_hz, double sample_rate_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const cd z1 = std::polar(1.0, -w);
  const cd z2 = z1 * z1;
  cd h{1.0, 0.0};
  for (const auto& s : sections) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (1.0 + s.a[0] * z1 + s.a[1] * z2);
  }
  return h;
}

namespace {

bool is_real(const cd& p) { return std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p)); }

// Groups digital poles and zeros into biquads. Zeros are all real here (+1 or -1).
SosFilter assemble(std::vector<cd> poles, std::vector<double> zeros, int order) {
  std::vector<std::array<double, 2>> pole_quads;  // (a1, a2)
  std::vector<double> real_poles;
  for (const auto& p : poles) {
    if (is_real(p)) {
      real_poles.push_back(p.real());
    } else if (p.imag() > 0.0) {
      pole_quads.push_back({-2.0 * p.real(), std::norm(p)});
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    pole_quads.push_back({-(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});
  }
  const bool odd = real_poles.size() % 2 == 1;
  if (odd) pole_quads.push_back({-real_poles.back(), 0.0});

  SosFilter f;
  f.order = order;
  std::size_t zi = 0;
  for (std::size_t i = 0; i < pole_quads.size(); ++i) {
    Biquad q;
    q.a = pole_quads[i];
    const bool first_order = odd && i + 1 == pole_quads.size();
    if (first_order) {
      const double z = zi < zeros.size() ? zeros[zi++] : 0.0;
      q.b = {1.0, -z, 0.0};
    } else {
      const double za = zi < zeros.size() ? zeros[zi++] : 0.0;
      const double zb = zi < zeros.size() ? zeros[zi++] : 0.0;
      q.b = {1.0, -(za + zb), za * zb};
    }
    f.sections.push_back(q);
  }
  return f;
}

}  // namespace

SosFilter butterworth(FilterType type, int order, double f1_hz, double f2_hz, double fs) {
  if (order < 1) throw ValidationError("butterworth: order must be >= 1");
  if (!(fs > 0.0)) throw ValidationError("butterworth: sample rate must be positive");
  const double nyq = fs / 2.0;
  auto check = [&](double f) {
    if (!(f > 0.0) || !(f < nyq)) {
      throw ValidationError("butterworth: cutoff " + std::to_string(f) + " Hz outside (0, " +
                            std::to_string(nyq) + ") Hz");
    }
  };
  check(f1_hz);
  if (type == FilterType::Bandpass) {
    check(f2_hz);
    if (!(f2_hz > f1_hz)) throw ValidationError("butterworth: band edges out of order");
  }
  const double fs2 = 2.0 * fs;
  auto warp = [&](double f) { return fs2 * std::tan(std::numbers::pi * f / fs); };

  std::vector<cd> proto;
  for (int k = 1; k <= order; ++k) {
    proto.push_back(std::polar(1.0, std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order)));
  }

  std::vector<cd> analog;
  std::vector<double> zeros;
  double ref_freq = 0.0;
  switch (type) {
    case FilterType::Lowpass: {
      const double wc = warp(f1_hz);
      for (auto p : proto) analog.push_back(p * wc);
      zeros.assign(static_cast<std::size_t>(order), -1.0);
      ref_freq = 0.0;
      break;
    }
    case FilterType::Highpass: {
      const double wc = warp(f1_hz);
      for (auto p : proto) analog.push_back(wc / p);
      zeros.assign(static_cast<std::size_t>(order), 1.0);
      ref_freq = nyq;
      break;
    }
    case FilterType::Bandpass: {
      const double w1 = warp(f1_hz);
      const double w2 = warp(f2_hz);
      const double bw = w2 - w1;
      const double w0 = std::sqrt(w1 * w2);
      for (auto p : proto) {
        const cd half = p * bw / 2.0;
        const cd root = std::sqrt(half * half - w0 * w0);
        analog.push_back(half + root);
        analog.push_back(half - root);
      }
      for (int i = 0; i < order; ++i) {
        zeros.push_back(1.0);
        zeros.push_back(-1.0);
      }
      ref_freq = fs / std::numbers::pi * std::atan(w0 / fs2);
      break;
    }
  }

  std::vector<cd> digital;
  digital.reserve(analog.size());
  for (auto s : analog) digital.push_back((fs2 + s) / (fs2 - s));

  SosFilter f = assemble(std::move(digital), std::move(zeros), order);
  const double g = std::abs(f.response(ref_freq, fs));
  for (double& b : f.sections.front().b) b /= g;
  return f;
}

SosFilter butterworth_bandpass(int order, FrequencyBand band, double fs) {
  band.validate(fs);
  if (band.low_hz <= 0.0) return butterworth(FilterType::Lowpass, order, band.high_hz, 0.0, fs);
  return butterworth(FilterType::Bandpass, order, band.low_hz, band.high_hz, fs);
}

SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs) {
  return butterworth(FilterType::Lowpass, order, cutoff_hz, 0.0, fs);
}

std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x, bool steady_state_init) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  for (const auto& s : f.sections) {
    const double b0 = s.b[0], b1 = s.b[1], b2 = s.b[2];
    const double a1 = s.a[0], a2 = s.a[1];
    double z1 = 0.0, z2 = 0.0;
    // The section input at sample 0 is the previous section's steady-state output.
    if (steady_state_init) {
      const double den = 1.0 + a1 + a2;
      const double g = std::abs(den) > 1e-300 ? (b0 + b1 + b2) / den : 0.0;
      const double x0 = y.front();
      z2 = (b2 - a2 * g) * x0;
      z1 = (b1 - a1 * g) * x0 + z2;
    }
    for (double& v : y) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> zero_phase_filter(const SosFilter& f, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t pad = filtfilt_padding(f.order);
  if (n < filtfilt_min_samples(f.order) || n <= pad) {
    throw ValidationError("zero_phase_filter: " + std::to_string(n) + " samples is too short (need " +
                          std::to_string(std::max(filtfilt_min_samples(f.order), pad + 1)) + ")");
  }
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto fwd = sos_filter(f, ext, true);
  std::reverse(fwd.begin(), fwd.end());
  auto back = sos_filter(f, fwd, true);
  std::reverse(back.begin(), back.end());
  return {back.begin() + static_cast<std::ptrdiff_t>(pad), back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

MultiChannelRecording filter_rows(const MultiChannelRecording& rec, const SosFilter& f) {
  SignalMatrix out(rec.data().rows(), rec.data().cols());
  for (Eigen::Index c = 0; c < rec.data().rows(); ++c) {
    std::span<const double> row(rec.data().row(c).data(), rec.samples());
    const auto y = zero_phase_filter(f, row);
    out.row(c) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  }
  return rec.with_data(std::move(out));
}

}  // namespace

MultiChannelRecording bandpass_filter(const MultiChannelRecording& rec, FrequencyBand band, int order) {
  if (order < 1) throw ValidationError("bandpass_filter: order must be >= 1");
  band.validate(rec.sample_rate_hz());
  if (rec.samples() < filtfilt_min_samples(order)) {
    throw ValidationError("bandpass_filter: recording too short for edge padding");
  }
  return filter_rows(rec, butterworth_bandpass(order, band, rec.sample_rate_hz()));
}

MultiChannelRecording resample(const MultiChannelRecording& rec, double target_rate_hz) {
  if (!(target_rate_hz > 0.0) || !std::isfinite(target_rate_hz)) {
    throw ValidationError("resample: target rate must be positive");
  }
  const double src = rec.sample_rate_hz();
  constexpr int kAntiAliasOrder = 4;
  const double cutoff = 0.45 * std::min(src, target_rate_hz);
  const MultiChannelRecording smooth =
      rec.samples() >= filtfilt_min_samples(kAntiAliasOrder)
          ? filter_rows(rec, butterworth_lowpass(kAntiAliasOrder, cutoff, src))
          : rec;

  const auto n_in = static_cast<Eigen::Index>(rec.samples());
  const auto n_out = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(n_in) * target_rate_hz / src));
  SignalMatrix out(smooth.data().rows(), n_out);
  for (Eigen::Index k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * src / target_rate_hz;
    auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    double frac = pos - static_cast<double>(i0);
    if (i0 >= n_in - 1) {
      i0 = n_in - 1;
      frac = 0.0;
    }
    const Eigen::Index i1 = std::min(i0 + 1, n_in - 1);
    out.col(k) = (1.0 - frac) * smooth.data().col(i0) + frac * smooth.data().col(i1);
  }
  return MultiChannelRecording(rec.labels(), rec.kinds(), target_rate_hz, std::move(out));
}

}  // namespace erase
