#pragma once

#include "erase/recording.hpp"
#include "erase/trials.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace erase {

// ---------------------------------------------------------------------------
// Membrane source

struct HhStimulus {
  double amplitude_ua_cm2 = 10.0;
  double start_ms = 1.0;
  double width_ms = 1.0;
};

struct HhTrace {
  double dt_ms = 0.01;
  std::vector<double> voltage_mv;
  /// Total ionic current (Na + K + leak), capacitive term excluded, uA/cm^2.
  std::vector<double> current_ua_cm2;
  double resting_voltage_mv = 0.0;
  double resting_current_ua_cm2 = 0.0;
};

/// Classic squid-axon Hodgkin-Huxley membrane, forward Euler from the resting state.
/// Throws IntegrationError if |V| exceeds 200 mV.
HhTrace hh_extracellular_current(double duration_ms, double dt_ms = 0.01, HhStimulus stim = {});

/// Temporal current waveform with the resting level removed; mapped to space as z = v t.
struct SourceWaveform {
  double dt_ms = 0.01;
  std::vector<double> current;

  double duration_ms() const noexcept { return dt_ms * static_cast<double>(current.size()); }
  /// Linear interpolation, zero outside the record.
  double at(double t_ms) const noexcept;
};

/// The default source: a 1 ms, 10 uA/cm^2 pulse at t = 0, 20 ms at dt = 0.01 ms.
SourceWaveform default_source();
SourceWaveform to_source(const HhTrace& trace);

// ---------------------------------------------------------------------------
// Fibres and action potentials

struct FiberParams {
  double fiber_length_mm = 120.0;
  double endplate_mean_mm = 60.0;
  double endplate_sd_mm = 2.5;
  double velocity_mean_m_s = 4.0;
  double velocity_sd = 0.125;
  double observation_axial_mm = 60.0;
  double observation_radial_mm = 10.0;
  double spatial_step_mm = 0.5;
  /// Volume-conductor gain; the default puts the default MUAP peak at about 50 uV.
  double scale_K = 90.9;

  void validate() const;
};

inline FiberParams default_fiber_params() { return {}; }

struct SampleGrid {
  double sample_rate_hz = 2000.0;
  std::size_t samples = 0;
};

/// Contributions of the fibre on either side of the endplate; their sum is the SFAP.
/// The endplate element is split evenly between the halves.
struct SfapComponents {
  std::vector<double> left;
  std::vector<double> right;
};

/// Discretized volume-conductor potential of one fibre with the given endplate
/// position and conduction velocity: end-section first-derivative terms plus the
/// second-derivative line integral, each weighted by 1/r, times K.
SfapComponents sfap_components(const FiberParams& fp, double endplate_mm, double velocity_m_s,
                               const SourceWaveform& source, SampleGrid grid);
std::vector<double> sfap(const FiberParams& fp, double endplate_mm, double velocity_m_s,
                         const SourceWaveform& source, SampleGrid grid);

/// Observation window long enough for both wavefronts to reach the fibre ends and decay.
SampleGrid muap_grid(const FiberParams& fp, const SourceWaveform& source, double sample_rate_hz);

struct FiberDraw {
  double endplate_mm = 0.0;
  double velocity_m_s = 0.0;
};

struct Muap {
  std::vector<double> waveform;
  double sample_rate_hz = 0.0;
  std::vector<FiberDraw> fibers;
  std::size_t velocity_redraws = 0;
};

/// Average of n_fibers SFAPs with endplates ~ N(mean, sd) and velocities ~ N(mean, sd);
/// non-positive velocity draws are redrawn and counted.
Muap muap(const FiberParams& fp, std::size_t n_fibers, std::uint64_t seed, double sample_rate_hz,
          const SourceWaveform& source);
Muap muap(const FiberParams& fp, std::size_t n_fibers, std::uint64_t seed, double sample_rate_hz = 2000.0);

// ---------------------------------------------------------------------------
// Firing and muscles

struct SpikeTrain {
  std::vector<double> times_s;
};

SpikeTrain poisson_spike_train(double rate_hz, double duration_s, std::uint64_t seed);

struct MuscleSpec {
  std::string name;
  FrequencyBand band;
  std::array<double, 2> topo_position{0.0, 0.0};
  double rate_idle_hz = 8.0;
  double rate_move_hz = 20.0;
  double amplitude_uv_rms = 20.0;

  void validate(std::optional<double> sample_rate_hz = std::nullopt) const;
};

/// Known muscle names: left_frontalis, right_frontalis, left_temporalis, right_temporalis,
/// left_masseter, right_masseter, left_trapezius, right_trapezius, eye_blink.
MuscleSpec default_muscle_spec(const std::string& name);
/// Bilateral frontalis, temporalis, masseter and trapezius.
std::vector<MuscleSpec> default_head_muscles();

/// Order of the spectral-shaping bandpass.
inline constexpr int kMuscleFilterOrder = 6;

/// Poisson firing at rate_idle outside movement windows and rate_move inside them, a
/// fresh process per window; MUAP superposed at each firing, bandpassed with spec.band
/// and scaled so the movement-phase RMS equals amplitude_uv_rms. The output spans
/// [0, duration_s), defaulting to the end of the schedule.
std::vector<double> simulate_muscle_emg(const MuscleSpec& spec, const TrialSchedule& schedule,
                                        const std::vector<double>& muap_wave, double sample_rate_hz,
                                        std::uint64_t seed, std::optional<double> duration_s = std::nullopt);

inline constexpr std::size_t kFibersPerMuap = 100;

/// Seeds used for channel i of a head set: (MUAP seed, firing seed).
std::pair<std::uint64_t, std::uint64_t> head_channel_seeds(std::uint64_t seed, std::size_t channel);

/// One EMG_REF channel per muscle, each from its own seeded substream.
MultiChannelRecording simulate_head_emg_set(const std::vector<MuscleSpec>& specs, const TrialSchedule& schedule,
                                            double sample_rate_hz, std::uint64_t seed,
                                            std::optional<double> duration_s = std::nullopt,
                                            const FiberParams& fp = default_fiber_params());

}  // namespace erase
