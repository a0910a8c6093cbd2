#include "helpers.hpp"
#include "ica_fixtures.hpp"

#include "erase/eeg_sim.hpp"
#include "erase/error.hpp"
#include "erase/features.hpp"
#include "erase/random.hpp"
#include "erase/rejection.hpp"
#include "erase/scenarios.hpp"
#include "erase/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace erase;
using namespace erase::test;

namespace {

RejectionCriteria threshold_only(double gain) {
  RejectionCriteria c;
  c.gain = gain;
  c.use_hat_band = false;
  return c;
}

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("E" + std::to_string(i + 1));
  return out;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  return a;
}

// Element-wise restatement of the reference-row RMS.
double rms_oracle(const Eigen::MatrixXd& a, std::size_t t, std::size_t tau) {
  double total = 0.0;
  for (std::size_t k = t; k < t + tau; ++k) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) sq += a(static_cast<Eigen::Index>(k), j) * a(static_cast<Eigen::Index>(k), j);
    total += std::sqrt(sq / static_cast<double>(a.cols()));
  }
  return total / static_cast<double>(tau);
}

// A hand-built decomposition: known mixing, known sources, zero means.
IcaDecomposition manual_decomposition(const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& sources) {
  IcaDecomposition d;
  d.mixing = mixing;
  d.unmixing = mixing.inverse();
  d.sources = sources;
  d.whitening.mean = Eigen::VectorXd::Zero(mixing.rows());
  return d;
}

// Mean over channels and trials of the movement z-score, computed from raw segment
// powers with the idle statistics of each channel. NaN channels are skipped.
double movement_z_mean(const std::vector<TrialSegments>& trials, FrequencyBand band, const std::vector<std::size_t>& rows) {
  const std::size_t n = trials.size();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r : rows) {
    std::vector<double> idle, move;
    for (const auto& tr : trials) {
      idle.push_back(band_power(tr.idle, band)(static_cast<Eigen::Index>(r)));
      move.push_back(band_power(tr.movement, band)(static_cast<Eigen::Index>(r)));
    }
    const double m = mean(idle), sd = stddev(idle);
    if (!(sd > 0.0)) continue;
    for (std::size_t k = 0; k < n; ++k) {
      total += (move[k] - m) / sd;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// A session whose objective is minimized only at gain 1.5. Reference row: IC 0
// carries movement-locked HF bursts and crosses the threshold for gain <= 1.5; IC 1
// carries idle-locked HF bursts (removing it hurts) and crosses for gain <= 1.4.
struct GainFixture {
  MultiChannelRecording recording;  // 10 EEG + 1 reference channel, concatenated trials
  TrialEpochs epochs;
  IcaDecomposition dec;
  std::size_t t = 10;
  std::size_t tau = 1;
};

GainFixture gain_fixture() {
  const double fs = 500.0;
  const auto sched = TrialSchedule::regular(10, 1.0, 2.0, 3.0);
  const Eigen::Index n = static_cast<Eigen::Index>(30.0 * fs);
  Rng rng(123);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd s(11, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / fs;
    const bool moving = std::fmod(time, 3.0) >= 1.0;
    for (Eigen::Index r = 0; r < 11; ++r) s(r, i) = nd(rng);
    s(0, i) *= moving ? 5.0 : 0.2;
    s(1, i) *= moving ? 0.2 : 3.0;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(11, 11);
  for (Eigen::Index r = 2; r < 10; ++r) {
    a(r, 0) = 0.5;
    a(r, 1) = 0.5;
  }
  // R = 1 with p = 1.55, q = 1.45 and the self term filling the rest.
  const double p = 1.55, q = 1.45;
  a(10, 0) = p;
  a(10, 1) = q;
  a(10, 10) = std::sqrt(11.0 - p * p - q * q);

  GainFixture f;
  auto names = labels(10);
  names[4] = "C3";
  names.push_back("ref");
  std::vector<ChannelKind> kinds(10, ChannelKind::Eeg);
  kinds.push_back(ChannelKind::EmgRef);
  const SignalMatrix x = a * s;
  const MultiChannelRecording raw(names, kinds, fs, x);
  f.epochs = concatenate_trials(raw, sched);
  f.recording = f.epochs.concatenated;
  // Sources in the concatenated time base.
  const Eigen::MatrixXd sc = a.inverse() * f.recording.data();
  f.dec = manual_decomposition(a, sc);
  return f;
}

}  // namespace

TEST_SUITE("erase") {
  TEST_CASE("reference-row RMS examples") {
    CHECK(rms_of_reference_rows(Eigen::MatrixXd::Identity(5, 5), 3, 2) == doctest::Approx(std::sqrt(0.2)).epsilon(1e-15));
    CHECK(rms_of_reference_rows(Eigen::MatrixXd::Constant(4, 4, -0.7), 2, 2) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_THROWS_AS(rms_of_reference_rows(Eigen::MatrixXd::Identity(3, 3), 3, 0), ValidationError);
  }

  TEST_CASE("reference-row RMS matches an element-wise oracle") {
    const auto a = random_matrix(6, 6, 606);
    for (std::size_t tau = 1; tau <= 3; ++tau) {
      CHECK(std::abs(rms_of_reference_rows(a, 6 - tau, tau) - rms_oracle(a, 6 - tau, tau)) < 1e-12);
    }
  }

  TEST_CASE("criterion 1 on the identity") {
    const auto r = identify_artifact_ics(Eigen::MatrixXd::Identity(5, 5), threshold_only(1.0), labels(3), 3, 2);
    CHECK(r.rms_value == doctest::Approx(std::sqrt(0.2)));
    CHECK(r.threshold == doctest::Approx(std::sqrt(0.2)));
    CHECK(r.indices() == std::set<Eigen::Index>{3, 4});
    for (const auto& f : r.artifact_ics) {
      CHECK(f.provenance == std::vector<Provenance>{Provenance::ThresholdCriterion});
    }
  }

  TEST_CASE("criterion 2 flags a hat-band argmax at every gain") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(5, 5) * 0.1;
    a(0, 1) = 0.9;  // column 1 peaks on row 0, a hat-band channel
    RejectionCriteria c;
    c.hat_band_labels = {"Fp1"};
    const std::vector<std::string> eeg{"Fp1", "Cz", "Pz"};
    for (double g : default_gain_grid()) {
      c.gain = g;
      const auto r = identify_artifact_ics(a, c, eeg, 3, 2);
      const auto* f = r.find(1);
      REQUIRE(f != nullptr);
      CHECK(std::find(f->provenance.begin(), f->provenance.end(), Provenance::HatBandCriterion) != f->provenance.end());
    }
  }

  TEST_CASE("ground-truth mode flags each reference row's argmax") {
    Eigen::MatrixXd a = random_matrix(8, 8, 31) * 0.1;
    a(5, 2) = 3.0;
    a(6, 0) = -2.5;
    a(7, 6) = 4.0;
    RejectionCriteria c;
    c.mode = RejectionMode::SimulatedGroundTruth;
    const auto r = identify_artifact_ics(a, c, labels(5), 5, 3);
    std::set<Eigen::Index> oracle;
    for (Eigen::Index k = 5; k < 8; ++k) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < 8; ++j) {
        if (std::abs(a(k, j)) > std::abs(a(k, best))) best = j;
      }
      oracle.insert(best);
    }
    CHECK(oracle.size() == 3);
    CHECK(r.indices() == oracle);

    a(6, 0) = 0.0;
    a(6, 2) = 2.0;  // rows 5 and 6 now share column 2
    const auto dup = identify_artifact_ics(a, c, labels(5), 5, 3);
    CHECK(dup.indices().size() == 2);
    CHECK(dup.find(2)->reference_rows == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("criterion invariants") {
    const auto a = random_matrix(12, 12, 71);
    const auto eeg = labels(9);
    RejectionCriteria both;
    both.gain = 1.0;
    both.hat_band_labels = {"E1", "E2", "E3", "E9"};

    const auto base = identify_artifact_ics(a, both, eeg, 9, 3).indices();
    CHECK(identify_artifact_ics(a * 3.7, both, eeg, 9, 3).indices() == base);

    RejectionCriteria hat = both;
    hat.use_threshold = false;
    Eigen::MatrixXd scaled = a;
    for (Eigen::Index j = 0; j < a.cols(); ++j) scaled.col(j) *= 0.1 + static_cast<double>(j);
    CHECK(identify_artifact_ics(scaled, hat, eeg, 9, 3).indices() == identify_artifact_ics(a, hat, eeg, 9, 3).indices());

    std::set<Eigen::Index> previous;
    bool first = true;
    for (double g : default_gain_grid()) {
      const auto s = identify_artifact_ics(a, threshold_only(g), eeg, 9, 3).indices();
      if (!first) CHECK(std::includes(previous.begin(), previous.end(), s.begin(), s.end()));
      previous = s;
      first = false;
    }

    RejectionCriteria empty;
    empty.gain = 1.0;
    CHECK_THROWS_AS(identify_artifact_ics(a, empty, eeg, 9, 3), ValidationError);
    RejectionCriteria far = both;
    far.gain = 3.5;
    CHECK_THROWS_AS(identify_artifact_ics(a, far, eeg, 9, 3), ValidationError);
  }

  TEST_CASE("gain sweep picks 1.5 and matches a per-gain recomputation") {
    const auto f = gain_fixture();
    GainSelectionContext ctx;
    ctx.epochs = &f.epochs;
    ctx.mu_channel = "C3";
    RejectionCriteria c;
    c.use_hat_band = false;
    const auto sel = select_gain(f.dec, f.recording, c, f.t, f.tau, ctx);
    CHECK(sel.gain == doctest::Approx(1.5));
    CHECK_FALSE(sel.degenerate);
    REQUIRE(sel.sweep.size() == default_gain_grid().size());

    std::vector<std::size_t> all(f.t);
    std::iota(all.begin(), all.end(), 0);
    const double r_ms = rms_oracle(f.dec.mixing, f.t, f.tau);
    for (const auto& p : sel.sweep) {
      Eigen::MatrixXd a = f.dec.mixing;
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (std::abs(a(10, j)) > p.gain * r_ms) a.col(j).setZero();
      }
      const SignalMatrix eeg = (a * f.dec.sources).topRows(10);
      const auto trials = f.epochs.split(f.recording.slice_channels(0, 10).with_data(eeg));
      const double hf = movement_z_mean(trials, kHighFrequencyBand, all);
      const double mu = movement_z_mean(trials, kMuBand, {4});
      CAPTURE(p.gain);
      CHECK(std::abs(p.hf_z - hf) < 1e-9);
      CHECK(std::abs(p.mu_z - mu) < 1e-9);
      CHECK(std::abs(p.objective - (hf + mu)) < 1e-9);
    }
  }

  TEST_CASE("constant objective resolves to the smallest gain") {
    // Identity mixing over 12 channels: each reference row's unit entry exceeds
    // 3 * sqrt(1/12), so the same IC is rejected at every gain.
    const double fs = 500.0;
    Rng rng(9);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd s(12, 15000);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = nd(rng);
    auto names = labels(11);
    names[0] = "C3";
    names.push_back("ref");
    std::vector<ChannelKind> kinds(11, ChannelKind::Eeg);
    kinds.push_back(ChannelKind::EmgRef);
    const MultiChannelRecording rec(names, kinds, fs, s);
    const auto epochs = concatenate_trials(rec, TrialSchedule::regular(10, 1.0, 2.0, 3.0));
    const auto dec = manual_decomposition(Eigen::MatrixXd::Identity(12, 12), epochs.concatenated.data());
    GainSelectionContext ctx;
    ctx.epochs = &epochs;
    RejectionCriteria c;
    c.use_hat_band = false;
    const auto sel = select_gain(dec, epochs.concatenated, c, 11, 1, ctx);
    CHECK(sel.gain == kGainMin);
    CHECK_FALSE(sel.degenerate);
    for (const auto& p : sel.sweep) CHECK(p.objective == sel.sweep.front().objective);
  }

  TEST_CASE("run_erase contracts") {
    const auto eeg = simulate_eeg(8, 4.0, 500.0, 1);
    RejectionCriteria c;
    c.gain = 1.0;
    c.hat_band_labels = {"E1"};
    SignalMatrix zeros = SignalMatrix::Zero(1, static_cast<Eigen::Index>(eeg.samples()));
    const MultiChannelRecording zero_ref({"ref"}, {ChannelKind::EmgRef}, 500.0, zeros);
    CHECK_THROWS_AS(run_erase(eeg, zero_ref, c, 1), RankDeficiencyError);

    Rng rng(4);
    std::normal_distribution<double> nd;
    SignalMatrix noise(2, static_cast<Eigen::Index>(eeg.samples()));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = nd(rng);
    const MultiChannelRecording refs({"r1", "r2"}, {ChannelKind::EmgRef, ChannelKind::EmgRef}, 500.0, noise);
    const auto r = run_erase(eeg, refs, c, 2);
    CHECK(r.cleaned.labels() == eeg.labels());
    CHECK(r.cleaned.kinds() == eeg.kinds());
    CHECK(r.cleaned.samples() == eeg.samples());
    CHECK(r.decomposition.channels() == 10);
    c.gain.reset();
    CHECK_THROWS_AS(run_erase(eeg, refs, c, 2), ValidationError);
  }

  TEST_CASE("conventional ICA rejects nothing when no column peaks on the hat band") {
    const auto s = independent_sources(4, 20000, 5);
    SignalMatrix x(4, 20000);
    x.row(0) = s.row(0);
    x.row(1) = s.row(1) + 0.5 * s.row(3);
    x.row(2) = s.row(2);
    x.row(3) = 0.1 * s.row(0) + 0.01 * s.row(3);
    const MultiChannelRecording rec({"C3", "Cz", "C4", "Fp1"}, std::vector<ChannelKind>(4, ChannelKind::Eeg), 500.0, x);
    RejectionCriteria c;
    c.hat_band_labels = {"Fp1"};
    const auto r = run_conventional_ica(rec, c, 3);
    CHECK(r.report.artifact_ics.empty());
    CHECK(relative_frobenius(r.cleaned.data(), x) < 1e-6);
  }

  TEST_CASE("conventional ICA provenance is hat band only") {
    const auto eeg = simulate_eeg(32, 4.0, 500.0, 6);
    RejectionCriteria c;
    c.gain = 0.4;
    c.hat_band_labels = hat_band_for(eeg.labels());
    FastIcaOptions opt;
    opt.max_iter = 50;
    opt.max_restarts = 0;
    const auto r = run_conventional_ica(eeg, c, 8, opt);
    CHECK_FALSE(r.report.artifact_ics.empty());
    CHECK(r.report.tau == 0);
    for (const auto& f : r.report.artifact_ics) {
      CHECK(f.provenance == std::vector<Provenance>{Provenance::HatBandCriterion});
    }
  }

  TEST_CASE("synthetic fixture: ERASE removes HF contamination and beats conventional ICA") {
    // One EMG type on 6 random channels of 32, strong enough to dominate the
    // contaminated channels, with the same EMG appended as the reference.
    ScenarioConfig cfg;
    cfg.duration_s = 30.0;
    cfg.sample_rate_hz = 1000.0;
    for (auto& m : cfg.emg_specs) m.amplitude_uv_rms = 200.0;
    const auto sched = cfg.schedule();
    int erase_ok = 0, erase_better = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto ds = make_dataset(cfg, 1, 6, Contaminant::Emg, derive_seed(42, s));
      const auto epochs = concatenate_trials(ds.eeg, sched);
      const auto ref_epochs = concatenate_trials(ds.references, sched);
      GainSelectionContext ctx;
      ctx.epochs = &epochs;
      RejectionCriteria crit;
      crit.hat_band_labels = hat_band_for(ds.eeg.labels());
      const auto er = run_erase(epochs.concatenated, ref_epochs.concatenated, crit, derive_seed(42, {s, 1}), cfg.ica, &ctx);
      const auto cv = run_conventional_ica(epochs.concatenated, crit, derive_seed(42, {s, 1}), cfg.ica);
      auto movement_hf = [&](const MultiChannelRecording& r) {
        return trial_band_powers(epochs.split(r), {kHfNamedBand})[0].movement.sum();
      };
      const double before = movement_hf(epochs.concatenated);
      const double erase_ratio = movement_hf(er.cleaned) / before;
      const double conv_ratio = movement_hf(cv.cleaned) / before;
      CAPTURE(s);
      CAPTURE(erase_ratio);
      CAPTURE(conv_ratio);
      erase_ok += erase_ratio <= 0.4 ? 1 : 0;
      erase_better += conv_ratio > erase_ratio ? 1 : 0;
    }
    CHECK(erase_ok == 10);
    CHECK(erase_better >= 8);
  }
}
