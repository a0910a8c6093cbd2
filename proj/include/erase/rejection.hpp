#pragma once

#include "erase/fastica.hpp"
#include "erase/recording.hpp"
#include "erase/spectral.hpp"
#include "erase/trials.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace erase {

enum class RejectionMode { Experimental, SimulatedGroundTruth };
enum class Provenance { ThresholdCriterion, HatBandCriterion, MaxRefCoefficient };

std::string_view to_string(RejectionMode mode) noexcept;
std::string_view to_string(Provenance p) noexcept;
RejectionMode parse_rejection_mode(std::string_view text);

inline constexpr double kGainMin = 0.4;
inline constexpr double kGainMax = 3.0;

/// 0.4, 0.5, ..., 3.0
std::vector<double> default_gain_grid();

/// Outermost ring of the 10-10 montage.
std::vector<std::string> default_hat_band_labels();
/// The default ring restricted to the labels present in a montage.
std::vector<std::string> hat_band_for(const std::vector<std::string>& eeg_labels);

struct RejectionCriteria {
  /// Unset means "select by sweep" in run_erase.
  std::optional<double> gain;
  std::vector<std::string> hat_band_labels;
  RejectionMode mode = RejectionMode::Experimental;
  bool use_threshold = true;
  bool use_hat_band = true;

  /// Gain range, hat band a nonempty subset of `eeg_labels` when it is used.
  void validate(const std::vector<std::string>& eeg_labels) const;
};

struct FlaggedIc {
  Eigen::Index index = 0;
  std::vector<Provenance> provenance;
  /// Reference rows (0-based within the reference block) whose maximum selected this IC.
  std::vector<std::size_t> reference_rows;
};

struct GainSweepPoint {
  double gain = 0.0;
  double hf_z = 0.0;  // mean movement-phase HF z over EEG channels
  double mu_z = 0.0;  // mean movement-phase mu z at the mu channel
  double objective = 0.0;
  std::size_t n_rejected = 0;
};

struct RejectionReport {
  RejectionMode mode = RejectionMode::Experimental;
  std::size_t t = 0;
  std::size_t tau = 0;
  double rms_value = 0.0;
  double threshold = 0.0;
  std::optional<double> gain;
  std::vector<FlaggedIc> artifact_ics;  // ascending index
  std::vector<GainSweepPoint> sweep;
  bool degenerate_sweep = false;

  std::set<Eigen::Index> indices() const;
  const FlaggedIc* find(Eigen::Index ic) const;
};

/// Mean over the last tau rows of A of each row's RMS.
double rms_of_reference_rows(const Eigen::MatrixXd& a, std::size_t t, std::size_t tau);

/// Applies the rejection criteria to a mixing matrix whose first t rows are EEG
/// (labelled by `eeg_labels`) and last tau rows are references.
RejectionReport identify_artifact_ics(const Eigen::MatrixXd& a, const RejectionCriteria& criteria,
                                      const std::vector<std::string>& eeg_labels, std::size_t t, std::size_t tau);
RejectionReport identify_artifact_ics(const IcaDecomposition& dec, const RejectionCriteria& criteria,
                                      const std::vector<std::string>& eeg_labels, std::size_t t, std::size_t tau);

/// Everything the gain sweep needs to turn a reconstruction into trial features.
struct GainSelectionContext {
  /// Splits the decomposed (concatenated) recording back into trials.
  const TrialEpochs* epochs = nullptr;
  std::string mu_channel = "C3";
  std::vector<double> grid = default_gain_grid();
  StftParams stft;
};

struct GainSelection {
  double gain = kGainMin;
  std::vector<GainSweepPoint> sweep;
  bool degenerate = false;
};

/// Objective for one rejection set: mean movement HF z over EEG channels plus mean
/// movement mu z at the mu channel, on the reconstruction without `rejected`.
GainSweepPoint gain_objective(const IcaDecomposition& dec, const std::set<Eigen::Index>& rejected,
                              const MultiChannelRecording& decomposed, std::size_t t,
                              const GainSelectionContext& ctx);

/// Sweeps the grid on one decomposition; ties go to the smaller gain.
GainSelection select_gain(const IcaDecomposition& dec, const MultiChannelRecording& decomposed,
                          const RejectionCriteria& criteria, std::size_t t, std::size_t tau,
                          const GainSelectionContext& ctx);

struct EraseResult {
  MultiChannelRecording cleaned;
  RejectionReport report;
  IcaDecomposition decomposition;
};

/// Reference-augmented ICA: append refs, decompose, reject, reconstruct, drop the refs.
/// A sweep context is required when criteria.gain is unset in experimental mode.
EraseResult run_erase(const MultiChannelRecording& eeg, const MultiChannelRecording& refs,
                      const RejectionCriteria& criteria, std::uint64_t seed, const FastIcaOptions& ica = {},
                      const GainSelectionContext* sweep = nullptr);

/// ICA on the EEG alone with the hat-band criterion only.
EraseResult run_conventional_ica(const MultiChannelRecording& eeg, const RejectionCriteria& criteria,
                                 std::uint64_t seed, const FastIcaOptions& ica = {});

nlohmann::json to_json(const RejectionReport& report);
std::string sweep_csv(const RejectionReport& report);

}  // namespace erase
