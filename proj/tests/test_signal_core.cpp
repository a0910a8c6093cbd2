#include "helpers.hpp"

#include "erase/error.hpp"
#include "erase/filter.hpp"
#include "erase/random.hpp"
#include "erase/recording_io.hpp"
#include "erase/spectral.hpp"
#include "erase/stats.hpp"
#include "erase/trials.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace erase;
using namespace erase::test;

namespace {

// Squared magnitude of an order-n prewarped Butterworth bandpass, from the analog
// prototype: x = |W^2 - W0^2| / (W * BW), |H|^2 = 1 / (1 + x^(2n)).
double butterworth_bandpass_power(double f, double f1, double f2, double fs, int n) {
  const double w = std::tan(std::numbers::pi * f / fs);
  const double w1 = std::tan(std::numbers::pi * f1 / fs);
  const double w2 = std::tan(std::numbers::pi * f2 / fs);
  const double x = std::abs(w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / (1.0 + std::pow(x, 2 * n));
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("erase_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

BandPowerSeries series(const std::vector<std::vector<double>>& idle, const std::vector<std::vector<double>>& move) {
  BandPowerSeries s;
  s.band_name = "x";
  s.band = kMuBand;
  const auto rows = static_cast<Eigen::Index>(idle.size());
  const auto cols = static_cast<Eigen::Index>(idle.front().size());
  s.idle.resize(rows, cols);
  s.movement.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    s.channels.push_back("c" + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c) {
      s.idle(r, c) = idle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      s.movement(r, c) = move[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  s.flagged.assign(idle.size(), false);
  return s;
}

// |W - E[W]| for the rank sum of `a` within the pooled sample.
double rank_sum_distance(const std::vector<double>& ranks, const std::vector<std::size_t>& take, double expected) {
  double w = 0.0;
  for (auto i : take) w += ranks[i];
  return std::abs(w - expected);
}

}  // namespace

TEST_SUITE("signal_core") {
  TEST_CASE("recording rejects inconsistent construction") {
    SignalMatrix d = SignalMatrix::Zero(2, 4);
    CHECK_THROWS_AS(MultiChannelRecording({"a"}, {ChannelKind::Eeg, ChannelKind::Eeg}, 100.0, d), ValidationError);
    CHECK_THROWS_AS(MultiChannelRecording({"a", "a"}, {ChannelKind::Eeg, ChannelKind::Eeg}, 100.0, d), ValidationError);
    CHECK_THROWS_AS(MultiChannelRecording({"a", "b"}, {ChannelKind::Eeg, ChannelKind::Eeg}, 0.0, d), ValidationError);
    d(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(MultiChannelRecording({"a", "b"}, {ChannelKind::Eeg, ChannelKind::Eeg}, 100.0, d), ValidationError);
  }

  TEST_CASE("recording selection keeps order and kinds") {
    SignalMatrix d(3, 2);
    d << 1, 2, 3, 4, 5, 6;
    MultiChannelRecording rec({"a", "r", "b"}, {ChannelKind::Eeg, ChannelKind::EmgRef, ChannelKind::Eeg}, 10.0, d);
    const auto eeg = rec.select(ChannelKind::Eeg);
    CHECK(eeg.labels() == std::vector<std::string>{"a", "b"});
    CHECK(eeg.data()(1, 1) == 6.0);
    CHECK(rec.count(ChannelKind::EmgRef) == 1);
    CHECK(rec.index_of("b") == 2);
    CHECK_FALSE(rec.index_of("z").has_value());
  }

  TEST_CASE("recording round-trips through both payload formats") {
    const auto dir = scratch_dir("io");
    Rng rng(5);
    std::normal_distribution<double> nd(0.0, 20.0);
    SignalMatrix d(3, 257);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = nd(rng);
    MultiChannelRecording rec({"Fp1", "Cz", "REF"}, {ChannelKind::Eeg, ChannelKind::Eeg, ChannelKind::EmgRef}, 512.0,
                              d);

    write_recording(dir / "a.json", rec, PayloadFormat::Csv);
    const auto csv = read_recording(dir / "a.json");
    CHECK(csv.labels() == rec.labels());
    CHECK(csv.kinds() == rec.kinds());
    CHECK(csv.sample_rate_hz() == 512.0);
    CHECK((csv.data() - d).cwiseAbs().maxCoeff() == 0.0);

    write_recording(dir / "b.json", rec, PayloadFormat::Raw);
    const auto raw = read_recording(dir / "b.json");
    CHECK(raw.samples() == 257);
    CHECK((raw.data() - d).cwiseAbs().maxCoeff() <= 1e-5 * d.cwiseAbs().maxCoeff());
  }

  TEST_CASE("reader rejects a sample-count mismatch") {
    const auto dir = scratch_dir("io_bad");
    SignalMatrix d = SignalMatrix::Ones(1, 10);
    MultiChannelRecording rec({"Cz"}, {ChannelKind::Eeg}, 100.0, d);
    write_recording(dir / "a.json", rec);
    auto doc = read_json_file(dir / "a.json");
    doc["samples"] = 11;
    write_json_file(dir / "a.json", doc);
    CHECK_THROWS_AS(read_recording(dir / "a.json"), ValidationError);

    write_recording(dir / "b.json", rec, PayloadFormat::Raw);
    doc = read_json_file(dir / "b.json");
    doc["samples"] = 9;
    write_json_file(dir / "b.json", doc);
    CHECK_THROWS_AS(read_recording(dir / "b.json"), ValidationError);
  }

  TEST_CASE("bandpass removes DC") {
    const auto rec = single_channel(std::vector<double>(20000, 10.0), 2000.0);
    const auto out = row(bandpass_filter(rec, {3.0, 100.0}), 0);
    double worst = 0.0;
    for (std::size_t i = 4000; i < 16000; ++i) worst = std::max(worst, std::abs(out[i]));
    CHECK(worst < 0.1);
  }

  TEST_CASE("bandpass passes 20 Hz at the analytic squared gain") {
    const double fs = 2000.0;
    const auto x = sine(20.0, fs, 20000);
    const auto y = row(bandpass_filter(single_channel(x, fs), {3.0, 100.0}, 3), 0);
    const auto tone = fit_tone(y, 20.0, fs, 4000, 16000);
    const double oracle = butterworth_bandpass_power(20.0, 3.0, 100.0, fs, 3);
    CHECK(tone.amplitude == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(std::abs(tone.amplitude - 1.0) < 0.02);
    CHECK(std::abs(tone.phase) < 1e-3);
  }

  TEST_CASE("cascade response matches the analog prototype") {
    const double fs = 1024.0;
    const auto f = butterworth_bandpass(3, {3.0, 100.0}, fs);
    for (double hz : {1.0, 3.0, 10.0, 17.3, 55.0, 100.0, 180.0, 400.0}) {
      const double got = std::norm(f.response(hz, fs));
      CHECK(got == doctest::Approx(butterworth_bandpass_power(hz, 3.0, 100.0, fs, 3)).epsilon(1e-9));
    }
  }

  TEST_CASE("zero-phase: cross-correlation peaks at lag 0") {
    const double fs = 2000.0;
    const auto x = sine(20.0, fs, 8000);
    const auto y = row(bandpass_filter(single_channel(x, fs), {3.0, 100.0}), 0);
    int best_lag = 99;
    double best = -1e300;
    for (int lag = -40; lag <= 40; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 1000; i < 7000; ++i) acc += x[i] * y[static_cast<std::size_t>(static_cast<int>(i) + lag)];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }

  TEST_CASE("filtering is linear") {
    Rng rng(11);
    std::normal_distribution<double> nd;
    std::vector<double> a(5000), b(5000), mix(5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = nd(rng);
      b[i] = nd(rng);
      mix[i] = 2.5 * a[i] - 0.75 * b[i];
    }
    const FrequencyBand band{3.0, 100.0};
    const auto fa = row(bandpass_filter(single_channel(a, 1000.0), band), 0);
    const auto fb = row(bandpass_filter(single_channel(b, 1000.0), band), 0);
    const auto fm = row(bandpass_filter(single_channel(mix, 1000.0), band), 0);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < fm.size(); ++i) {
      err += std::pow(fm[i] - (2.5 * fa[i] - 0.75 * fb[i]), 2);
      norm += fm[i] * fm[i];
    }
    CHECK(std::sqrt(err / norm) < 1e-9);
  }

  TEST_CASE("bandpass validates its inputs") {
    const auto rec = single_channel(std::vector<double>(100, 1.0), 200.0);
    CHECK_THROWS_AS(bandpass_filter(rec, {3.0, 150.0}), ValidationError);
    const auto tiny = single_channel(std::vector<double>(filtfilt_min_samples(3) - 1, 1.0), 2000.0);
    CHECK_THROWS_AS(bandpass_filter(tiny, {3.0, 100.0}), ValidationError);
  }

  TEST_CASE("resample keeps a constant") {
    const auto out = resample(single_channel(std::vector<double>(40000, 5.0), 4000.0), 2048.0);
    CHECK(out.sample_rate_hz() == 2048.0);
    CHECK(std::abs(static_cast<double>(out.samples()) - 20480.0) <= 1.0);
    const auto y = row(out, 0);
    for (std::size_t i = 200; i + 200 < y.size(); ++i) REQUIRE(std::abs(y[i] - 5.0) < 1e-6);
  }

  TEST_CASE("resample preserves a 10 Hz sinusoid") {
    const auto y = row(resample(single_channel(sine(10.0, 4000.0, 40000), 4000.0), 2048.0), 0);
    double worst = 0.0;
    for (std::size_t i = 2048; i + 2048 < y.size(); ++i) {
      const double truth = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / 2048.0);
      worst = std::max(worst, std::abs(y[i] - truth));
    }
    CHECK(worst < 0.02);
    CHECK(fit_tone(y, 10.0, 2048.0, 2048, y.size() - 2048).amplitude == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("resample to the same rate is near-identity") {
    Rng rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> x(4000);
    for (auto& v : x) v = nd(rng);
    const auto base = row(bandpass_filter(single_channel(x, 1000.0), {1.0, 50.0}), 0);
    const auto y = row(resample(single_channel(base, 1000.0), 1000.0), 0);
    REQUIRE(y.size() == base.size());
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      err += std::pow(y[i] - base[i], 2);
      norm += base[i] * base[i];
    }
    CHECK(std::sqrt(err / norm) < 0.01);
  }

  TEST_CASE("extract_trials index arithmetic") {
    const auto rec = single_channel(std::vector<double>(200000, 1.0), 2000.0);
    const auto one = extract_trials(rec, TrialSchedule({{0.0, 1.0, 1.0, 2.0}}));
    REQUIRE(one.size() == 1);
    CHECK(one[0].idle.samples() == 2000);
    CHECK(one[0].movement.samples() == 4000);

    const auto ten = extract_trials(rec, TrialSchedule::regular(10, 1.0, 2.0, 10.0));
    CHECK(ten.size() == 10);
    CHECK(extract_trials(rec, TrialSchedule{}).empty());
    CHECK_THROWS_AS(extract_trials(rec, TrialSchedule::regular(11, 1.0, 2.0, 10.0)), ValidationError);
  }

  TEST_CASE("concatenated trials round-trip through split") {
    std::vector<double> x(30000);
    std::iota(x.begin(), x.end(), 0.0);
    const auto rec = single_channel(x, 1000.0);
    const auto sched = TrialSchedule::regular(5, 1.0, 2.0, 5.0, 0.5);
    const auto epochs = concatenate_trials(rec, sched);
    CHECK(epochs.concatenated.samples() == 5 * 3000);
    const auto direct = extract_trials(rec, sched);
    const auto split = epochs.split(epochs.concatenated);
    REQUIRE(split.size() == direct.size());
    for (std::size_t k = 0; k < split.size(); ++k) {
      CHECK(split[k].idle.data() == direct[k].idle.data());
      CHECK(split[k].movement.data() == direct[k].movement.data());
    }
  }

  TEST_CASE("band_power of a 10 Hz sinusoid concentrates in mu") {
    const auto rec = single_channel(sine(10.0, 1024.0, 2048), 1024.0);
    const double mu = band_power(rec, kMuBand)(0);
    const double hf = band_power(rec, kHighFrequencyBand)(0);
    CHECK(mu >= 50.0 * hf);
    // Hann-windowed unit sine: power sums to about 1/2 across the main lobe.
    CHECK(mu == doctest::Approx(0.5).epsilon(0.05));
  }

  TEST_CASE("band_power of zeros is zero") {
    const auto rec = single_channel(std::vector<double>(2048, 0.0), 1024.0);
    CHECK(band_power(rec, kMuBand)(0) == 0.0);
    CHECK(band_power(rec, kHighFrequencyBand)(0) == 0.0);
  }

  TEST_CASE("band_power of white noise scales with bandwidth") {
    std::vector<double> ratios;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng(derive_seed(77, s));
      std::normal_distribution<double> nd;
      std::vector<double> x(2048);
      for (auto& v : x) v = nd(rng);
      const auto rec = single_channel(x, 1024.0);
      ratios.push_back(band_power(rec, kHighFrequencyBand)(0) / band_power(rec, kMuBand)(0));
    }
    const double m = mean(ratios);
    CHECK(m > 15.0 / 2.0);
    CHECK(m < 15.0 * 2.0);
  }

  TEST_CASE("band_power rejects a window longer than the segment") {
    const auto rec = single_channel(std::vector<double>(100, 1.0), 1000.0);
    CHECK_THROWS_AS(band_power(rec, kMuBand), ValidationError);
  }

  TEST_CASE("zscore_to_idle hand examples") {
    const auto z = zscore_to_idle(series({{1, 2, 3}}, {{4, 2, 2}}));
    CHECK(z.zscored);
    CHECK(z.movement(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(z.movement(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(std::abs(z.idle.row(0).mean()) < 1e-9);
  }

  TEST_CASE("zscore_to_idle flags zero idle variance") {
    const auto z = zscore_to_idle(series({{2, 2, 2}, {1, 2, 3}}, {{1, 1, 1}, {1, 1, 1}}));
    CHECK(z.flagged[0]);
    CHECK_FALSE(z.flagged[1]);
    CHECK(std::isnan(z.movement(0, 0)));
    CHECK(std::isfinite(z.movement(1, 0)));
  }

  TEST_CASE("zscore_to_idle is invariant to affine rescaling") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    std::vector<std::vector<double>> idle(3, std::vector<double>(6)), move = idle, idle2 = idle, move2 = idle;
    const double c[] = {3.0, 0.01, 250.0};
    const double d[] = {-1.0, 7.0, 0.0};
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t k = 0; k < 6; ++k) {
        idle[r][k] = u(rng);
        move[r][k] = u(rng);
        idle2[r][k] = c[r] * idle[r][k] + d[r];
        move2[r][k] = c[r] * move[r][k] + d[r];
      }
    }
    const auto a = zscore_to_idle(series(idle, move));
    const auto b = zscore_to_idle(series(idle2, move2));
    CHECK((a.movement - b.movement).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a.idle - b.idle).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("rank-sum: identical samples") {
    const std::vector<double> a{1, 2, 3};
    CHECK(wilcoxon_rank_sum(a, a).p_value >= 0.99);
    const std::vector<double> same(5, 4.0);
    CHECK(wilcoxon_rank_sum(same, same).p_value == 1.0);
  }

  TEST_CASE("rank-sum: exact p over C(8,4) assignments") {
    const std::vector<double> a{1, 2, 3, 4}, b{10, 11, 12, 13};
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK(r.exact);
    CHECK(r.statistic == 10.0);
    // Enumerate every 4-subset of ranks 1..8.
    std::vector<double> ranks{1, 2, 3, 4, 5, 6, 7, 8};
    const double expected = 4.0 * 9.0 / 2.0;
    const double observed = std::abs(10.0 - expected);
    int extreme = 0, total = 0;
    for (unsigned mask = 0; mask < 256; ++mask) {
      if (std::popcount(mask) != 4) continue;
      std::vector<std::size_t> take;
      for (std::size_t i = 0; i < 8; ++i) {
        if (mask & (1u << i)) take.push_back(i);
      }
      ++total;
      if (rank_sum_distance(ranks, take, expected) >= observed) ++extreme;
    }
    CHECK(total == 70);
    CHECK(r.p_value == doctest::Approx(static_cast<double>(extreme) / 70.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(2.0 / 70.0).epsilon(1e-12));
  }

  TEST_CASE("rank-sum is symmetric") {
    Rng rng(21);
    std::normal_distribution<double> nd;
    for (std::size_t n : {3u, 5u, 20u}) {
      std::vector<double> a(n), b(n + 2);
      for (auto& v : a) v = nd(rng);
      for (auto& v : b) v = nd(rng) + 0.4;
      CHECK(std::abs(wilcoxon_rank_sum(a, b).p_value - wilcoxon_rank_sum(b, a).p_value) < 1e-12);
    }
  }

  TEST_CASE("rank-sum: normal approximation against a permutation oracle") {
    Rng rng(2024);
    std::normal_distribution<double> nd;
    std::vector<double> pooled(120);
    for (std::size_t i = 0; i < 120; ++i) pooled[i] = nd(rng) + (i < 60 ? 0.0 : 0.35);
    const std::vector<double> a(pooled.begin(), pooled.begin() + 60), b(pooled.begin() + 60, pooled.end());
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK_FALSE(r.exact);

    const auto ranks = midranks(pooled);
    const double expected = 60.0 * 121.0 / 2.0;
    std::vector<std::size_t> first(60);
    std::iota(first.begin(), first.end(), 0);
    const double observed = rank_sum_distance(ranks, first, expected);
    std::vector<std::size_t> idx(120);
    std::iota(idx.begin(), idx.end(), 0);
    Rng perm(99);
    int extreme = 0;
    const int n_resamples = 100000;
    for (int k = 0; k < n_resamples; ++k) {
      std::shuffle(idx.begin(), idx.end(), perm);
      std::vector<std::size_t> take(idx.begin(), idx.begin() + 60);
      if (rank_sum_distance(ranks, take, expected) >= observed - 1e-9) ++extreme;
    }
    const double oracle = static_cast<double>(extreme) / n_resamples;
    CHECK(std::abs(r.p_value - oracle) < 0.02);
  }

  TEST_CASE("midranks average ties") {
    const std::vector<double> x{3, 1, 3, 2};
    CHECK(midranks(x) == std::vector<double>{3.5, 1, 3.5, 2});
  }

  TEST_CASE("summary statistics") {
    const std::vector<double> x{1, 2, 3, 4};
    CHECK(mean(x) == 2.5);
    CHECK(stddev(x) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
    CHECK(median({5, 1, 3}) == 3.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
  }
}
