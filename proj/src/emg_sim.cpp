#include "erase/emg_sim.hpp"

#include "erase/error.hpp"
#include "erase/filter.hpp"
#include "erase/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace erase {

namespace {

constexpr double kGNa = 120.0;
constexpr double kGK = 36.0;
constexpr double kGL = 0.3;
constexpr double kENa = 50.0;
constexpr double kEK = -77.0;
constexpr double kEL = -54.387;
constexpr double kCm = 1.0;

// x / (1 - exp(-x / s)) with the removable singularity at 0.
double ratio(double x, double s) {
  if (std::abs(x) < 1e-7) return s;
  return x / (1.0 - std::exp(-x / s));
}

double alpha_m(double v) { return 0.1 * ratio(v + 40.0, 10.0); }
double beta_m(double v) { return 4.0 * std::exp(-(v + 65.0) / 18.0); }
double alpha_h(double v) { return 0.07 * std::exp(-(v + 65.0) / 20.0); }
double beta_h(double v) { return 1.0 / (1.0 + std::exp(-(v + 35.0) / 10.0)); }
double alpha_n(double v) { return 0.01 * ratio(v + 55.0, 10.0); }
double beta_n(double v) { return 0.125 * std::exp(-(v + 65.0) / 80.0); }

double ionic(double v, double m, double h, double n) {
  return kGNa * m * m * m * h * (v - kENa) + kGK * n * n * n * n * (v - kEK) + kGL * (v - kEL);
}

struct Gates {
  double m, h, n;
};

Gates steady(double v) {
  return {alpha_m(v) / (alpha_m(v) + beta_m(v)), alpha_h(v) / (alpha_h(v) + beta_h(v)),
          alpha_n(v) / (alpha_n(v) + beta_n(v))};
}

double resting_potential() {
  double lo = -90.0;
  double hi = -60.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const Gates g = steady(mid);
    if (ionic(mid, g.m, g.h, g.n) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

HhTrace hh_extracellular_current(double duration_ms, double dt_ms, HhStimulus stim) {
  if (!(dt_ms > 0.0) || dt_ms > 0.025) throw ValidationError("hh: dt_ms must be in (0, 0.025]");
  if (!(duration_ms >= 15.0)) throw ValidationError("hh: duration must cover the action potential (>= 15 ms)");
  const auto n = static_cast<std::size_t>(std::llround(duration_ms / dt_ms));
  HhTrace tr;
  tr.dt_ms = dt_ms;
  tr.voltage_mv.resize(n);
  tr.current_ua_cm2.resize(n);
  double v = resting_potential();
  Gates g = steady(v);
  tr.resting_voltage_mv = v;
  tr.resting_current_ua_cm2 = ionic(v, g.m, g.h, g.n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt_ms;
    const double i_ion = ionic(v, g.m, g.h, g.n);
    tr.voltage_mv[i] = v;
    tr.current_ua_cm2[i] = i_ion;
    const double i_stim = (t >= stim.start_ms && t < stim.start_ms + stim.width_ms) ? stim.amplitude_ua_cm2 : 0.0;
    const double dv = (i_stim - i_ion) / kCm;
    const double dm = alpha_m(v) * (1.0 - g.m) - beta_m(v) * g.m;
    const double dh = alpha_h(v) * (1.0 - g.h) - beta_h(v) * g.h;
    const double dn = alpha_n(v) * (1.0 - g.n) - beta_n(v) * g.n;
    v += dt_ms * dv;
    g.m += dt_ms * dm;
    g.h += dt_ms * dh;
    g.n += dt_ms * dn;
    if (!std::isfinite(v) || std::abs(v) > 200.0) {
      throw IntegrationError("hh: membrane voltage diverged at t = " + std::to_string(t) + " ms");
    }
  }
  return tr;
}

double SourceWaveform::at(double t_ms) const noexcept {
  if (t_ms < 0.0 || current.empty()) return 0.0;
  const double pos = t_ms / dt_ms;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= current.size()) return 0.0;
  const double f = pos - static_cast<double>(i);
  return current[i] + f * (current[i + 1] - current[i]);
}

SourceWaveform to_source(const HhTrace& trace) {
  SourceWaveform s;
  s.dt_ms = trace.dt_ms;
  s.current.resize(trace.current_ua_cm2.size());
  for (std::size_t i = 0; i < s.current.size(); ++i) {
    s.current[i] = trace.current_ua_cm2[i] - trace.resting_current_ua_cm2;
  }
  return s;
}

SourceWaveform default_source() {
  return to_source(hh_extracellular_current(20.0, 0.01, HhStimulus{10.0, 0.0, 1.0}));
}

void FiberParams::validate() const {
  for (double v : {fiber_length_mm, spatial_step_mm, velocity_mean_m_s}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("fiber: lengths and velocity must be positive");
  }
  if (!(endplate_sd_mm >= 0.0) || !(velocity_sd >= 0.0) || !(observation_radial_mm >= 0.0)) {
    throw ValidationError("fiber: standard deviations and radial distance must be non-negative");
  }
  if (!(endplate_mean_mm > 0.0 && endplate_mean_mm < fiber_length_mm)) {
    throw ValidationError("fiber: endplate must lie inside the fibre");
  }
  if (!(velocity_mean_m_s > 3.0 * velocity_sd)) throw ValidationError("fiber: velocity_mean must exceed 3 * velocity_sd");
  const double steps = fiber_length_mm / spatial_step_mm;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw ValidationError("fiber: spatial_step_mm must divide fiber_length_mm");
  }
  if (!std::isfinite(scale_K)) throw ValidationError("fiber: scale_K must be finite");
}

SfapComponents sfap_components(const FiberParams& fp, double endplate_mm, double velocity_m_s,
                               const SourceWaveform& source, SampleGrid grid) {
  fp.validate();
  if (!(velocity_m_s > 0.0)) throw ValidationError("sfap: velocity must be positive");
  if (!(grid.sample_rate_hz > 0.0)) throw ValidationError("sfap: sample rate must be positive");
  const double dz = fp.spatial_step_mm;
  const auto n = static_cast<std::size_t>(std::llround(fp.fiber_length_mm / dz)) + 1;
  std::vector<double> z(n);
  std::vector<double> inv_r(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = static_cast<double>(i) * dz;
    const double dx = z[i] - fp.observation_axial_mm;
    const double r = std::sqrt(dx * dx + fp.observation_radial_mm * fp.observation_radial_mm);
    if (!(r > 0.0)) throw ValidationError("sfap: observation point lies on the fibre (r = 0)");
    inv_r[i] = 1.0 / r;
  }
  // side: -1 left of the endplate, +1 right, 0 on it (split evenly)
  std::vector<int> side(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = z[i] - endplate_mm;
    side[i] = std::abs(d) < 1e-9 * dz ? 0 : (d < 0.0 ? -1 : 1);
  }

  SfapComponents out;
  out.left.assign(grid.samples, 0.0);
  out.right.assign(grid.samples, 0.0);
  if (n < 3) throw ValidationError("sfap: fibre needs at least three grid points");
  std::vector<double> e(n);
  for (std::size_t k = 0; k < grid.samples; ++k) {
    const double t_ms = 1000.0 * static_cast<double>(k) / grid.sample_rate_hz;
    for (std::size_t i = 0; i < n; ++i) e[i] = source.at(t_ms - std::abs(z[i] - endplate_mm) / velocity_m_s);
    double left = 0.0;
    double right = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
      const double d2 = (e[c + 1] - 2.0 * e[c] + e[c - 1]) / (dz * dz);
      const double w = (i == 0 || i == n - 1) ? 0.5 * dz : dz;
      const double term = d2 * inv_r[i] * w;
      if (side[i] < 0) {
        left += term;
      } else if (side[i] > 0) {
        right += term;
      } else {
        left += 0.5 * term;
        right += 0.5 * term;
      }
    }
    const double d_start = (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * dz);
    const double d_end = (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * dz);
    left += d_start * inv_r[0];
    right -= d_end * inv_r[n - 1];
    out.left[k] = fp.scale_K * left;
    out.right[k] = fp.scale_K * right;
  }
  return out;
}

std::vector<double> sfap(const FiberParams& fp, double endplate_mm, double velocity_m_s, const SourceWaveform& source,
                         SampleGrid grid) {
  auto c = sfap_components(fp, endplate_mm, velocity_m_s, source, grid);
  for (std::size_t k = 0; k < c.left.size(); ++k) c.left[k] += c.right[k];
  return std::move(c.left);
}

SampleGrid muap_grid(const FiberParams& fp, const SourceWaveform& source, double sample_rate_hz) {
  fp.validate();
  if (!(sample_rate_hz > 0.0)) throw ValidationError("muap: sample rate must be positive");
  const double reach = std::max(fp.endplate_mean_mm, fp.fiber_length_mm - fp.endplate_mean_mm) + 4.0 * fp.endplate_sd_mm;
  const double slowest = fp.velocity_mean_m_s - 3.0 * fp.velocity_sd;
  const double window_ms = reach / slowest + source.duration_ms();
  return {sample_rate_hz, static_cast<std::size_t>(std::ceil(window_ms * sample_rate_hz / 1000.0)) + 1};
}

Muap muap(const FiberParams& fp, std::size_t n_fibers, std::uint64_t seed, double sample_rate_hz,
          const SourceWaveform& source) {
  if (n_fibers < 1) throw ValidationError("muap: n_fibers must be at least 1");
  const SampleGrid grid = muap_grid(fp, source, sample_rate_hz);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Muap m;
  m.sample_rate_hz = sample_rate_hz;
  m.waveform.assign(grid.samples, 0.0);
  for (std::size_t f = 0; f < n_fibers; ++f) {
    FiberDraw d;
    do {
      d.endplate_mm = fp.endplate_mean_mm + fp.endplate_sd_mm * normal(rng);
    } while (!(d.endplate_mm > 0.0 && d.endplate_mm < fp.fiber_length_mm));
    d.velocity_m_s = fp.velocity_mean_m_s + fp.velocity_sd * normal(rng);
    while (!(d.velocity_m_s > 0.0)) {
      ++m.velocity_redraws;
      d.velocity_m_s = fp.velocity_mean_m_s + fp.velocity_sd * normal(rng);
    }
    const auto s = sfap(fp, d.endplate_mm, d.velocity_m_s, source, grid);
    for (std::size_t k = 0; k < s.size(); ++k) m.waveform[k] += s[k];
    m.fibers.push_back(d);
  }
  for (double& v : m.waveform) v /= static_cast<double>(n_fibers);
  return m;
}

Muap muap(const FiberParams& fp, std::size_t n_fibers, std::uint64_t seed, double sample_rate_hz) {
  static const SourceWaveform source = default_source();
  return muap(fp, n_fibers, seed, sample_rate_hz, source);
}

SpikeTrain poisson_spike_train(double rate_hz, double duration_s, std::uint64_t seed) {
  if (!(rate_hz >= 0.0) || !std::isfinite(rate_hz)) throw ValidationError("poisson: rate must be >= 0");
  if (!(duration_s >= 0.0)) throw ValidationError("poisson: duration must be >= 0");
  SpikeTrain train;
  if (rate_hz == 0.0) return train;
  Rng rng(seed);
  std::exponential_distribution<double> gap(rate_hz);
  for (double t = gap(rng); t < duration_s; t += gap(rng)) train.times_s.push_back(t);
  return train;
}

void MuscleSpec::validate(std::optional<double> sample_rate_hz) const {
  if (name.empty()) throw ValidationError("muscle: name must be nonempty");
  band.validate(sample_rate_hz);
  if (!(rate_idle_hz > 0.0) || !(rate_move_hz >= rate_idle_hz)) {
    throw ValidationError("muscle '" + name + "': need rate_move_hz >= rate_idle_hz > 0");
  }
  if (!(amplitude_uv_rms > 0.0)) throw ValidationError("muscle '" + name + "': amplitude must be positive");
}

MuscleSpec default_muscle_spec(const std::string& name) {
  struct Entry {
    const char* name;
    double lo, hi, x, y;
    double idle_hz = 8.0, move_hz = 20.0;
  };
  // Blinks fire sparsely so the low-passed train stays far from Gaussian. 2.5 Hz
  // still leaves a 6 s movement span without an event with p < 1e-6.
  static constexpr Entry table[] = {
      {"left_frontalis", 20, 150, -0.3, 0.9},   {"right_frontalis", 20, 150, 0.3, 0.9},
      {"left_temporalis", 20, 300, -0.9, 0.3},  {"right_temporalis", 20, 300, 0.9, 0.3},
      {"left_masseter", 20, 300, -0.9, -0.2},   {"right_masseter", 20, 300, 0.9, -0.2},
      {"left_trapezius", 20, 250, -0.5, -0.95}, {"right_trapezius", 20, 250, 0.5, -0.95},
      {"eye_blink", 1, 10, 0.0, 1.0, 1.0, 2.5},
  };
  for (const auto& e : table) {
    if (name == e.name) {
      MuscleSpec s;
      s.name = e.name;
      s.band = {e.lo, e.hi};
      s.topo_position = {e.x, e.y};
      s.rate_idle_hz = e.idle_hz;
      s.rate_move_hz = e.move_hz;
      return s;
    }
  }
  throw ValidationError("unknown muscle '" + name + "'");
}

std::vector<MuscleSpec> default_head_muscles() {
  std::vector<MuscleSpec> out;
  for (const char* n : {"left_frontalis", "right_frontalis", "left_temporalis", "right_temporalis", "left_masseter",
                        "right_masseter", "left_trapezius", "right_trapezius"}) {
    out.push_back(default_muscle_spec(n));
  }
  return out;
}

std::vector<double> simulate_muscle_emg(const MuscleSpec& spec, const TrialSchedule& schedule,
                                        const std::vector<double>& muap_wave, double sample_rate_hz,
                                        std::uint64_t seed, std::optional<double> duration_s) {
  if (!(sample_rate_hz > 0.0)) throw ValidationError("muscle emg: sample rate must be positive");
  spec.validate(sample_rate_hz);
  const double duration = duration_s.value_or(schedule.end_s());
  if (!(duration >= 0.0)) throw ValidationError("muscle emg: duration must be >= 0");
  schedule.check_bounds(duration);
  const std::size_t n = static_cast<std::size_t>(std::llround(duration * sample_rate_hz));
  if (n == 0) return {};
  if (muap_wave.empty() || muap_wave.size() >= n) {
    throw ValidationError("muscle emg: MUAP must be nonempty and shorter than the recording");
  }
  if (n < filtfilt_min_samples(kMuscleFilterOrder)) throw ValidationError("muscle emg: recording too short to filter");

  // Alternating phases; each window is its own Poisson process.
  struct Phase {
    double start, end;
    bool moving;
  };
  std::vector<Phase> phases;
  double cursor = 0.0;
  for (const auto& w : schedule.trials()) {
    if (w.move_start_s > cursor) phases.push_back({cursor, w.move_start_s, false});
    phases.push_back({w.move_start_s, w.move_start_s + w.move_len_s, true});
    cursor = w.move_start_s + w.move_len_s;
  }
  if (duration > cursor) phases.push_back({cursor, duration, false});

  Rng rng(seed);
  std::vector<double> x(n, 0.0);
  std::vector<bool> moving(n, false);
  for (const auto& p : phases) {
    const double rate = p.moving ? spec.rate_move_hz : spec.rate_idle_hz;
    std::exponential_distribution<double> gap(rate);
    for (double t = p.start + gap(rng); t < p.end; t += gap(rng)) {
      const std::size_t at = to_sample(t, sample_rate_hz);
      for (std::size_t k = 0; k < muap_wave.size() && at + k < n; ++k) x[at + k] += muap_wave[k];
    }
    if (p.moving) {
      const std::size_t a = std::min(n, to_sample(p.start, sample_rate_hz));
      const std::size_t b = std::min(n, to_sample(p.end, sample_rate_hz));
      for (std::size_t i = a; i < b; ++i) moving[i] = true;
    }
  }

  auto y = zero_phase_filter(butterworth_bandpass(kMuscleFilterOrder, spec.band, sample_rate_hz), x);
  double ss = 0.0;
  std::size_t count = 0;
  const bool any_moving = std::find(moving.begin(), moving.end(), true) != moving.end();
  for (std::size_t i = 0; i < n; ++i) {
    if (moving[i] || !any_moving) {
      ss += y[i] * y[i];
      ++count;
    }
  }
  const double rms = std::sqrt(ss / static_cast<double>(count));
  if (!(rms > 0.0)) throw ValidationError("muscle emg '" + spec.name + "': waveform is all zero, cannot scale");
  const double scale = spec.amplitude_uv_rms / rms;
  for (double& v : y) v *= scale;
  return y;
}

std::pair<std::uint64_t, std::uint64_t> head_channel_seeds(std::uint64_t seed, std::size_t channel) {
  const std::uint64_t sub = derive_seed(seed, channel);
  return {derive_seed(sub, 0), derive_seed(sub, 1)};
}

MultiChannelRecording simulate_head_emg_set(const std::vector<MuscleSpec>& specs, const TrialSchedule& schedule,
                                            double sample_rate_hz, std::uint64_t seed,
                                            std::optional<double> duration_s, const FiberParams& fp) {
  if (specs.empty()) throw ValidationError("head emg: need at least one muscle spec");
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second) throw ValidationError("head emg: duplicate muscle name '" + s.name + "'");
  }
  const double duration = duration_s.value_or(schedule.end_s());
  const auto n = static_cast<Eigen::Index>(std::llround(duration * sample_rate_hz));
  SignalMatrix data(static_cast<Eigen::Index>(specs.size()), n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto [muap_seed, fire_seed] = head_channel_seeds(seed, i);
    const Muap m = muap(fp, kFibersPerMuap, muap_seed, sample_rate_hz);
    const auto y = simulate_muscle_emg(specs[i], schedule, m.waveform, sample_rate_hz, fire_seed, duration);
    for (Eigen::Index k = 0; k < n; ++k) data(static_cast<Eigen::Index>(i), k) = y[static_cast<std::size_t>(k)];
    labels.push_back(specs[i].name);
  }
  return MultiChannelRecording(std::move(labels), std::vector<ChannelKind>(specs.size(), ChannelKind::EmgRef),
                               sample_rate_hz, std::move(data));
}

}  // namespace erase
