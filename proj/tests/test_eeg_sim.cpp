#include "helpers.hpp"

#include "erase/eeg_sim.hpp"
#include "erase/error.hpp"
#include "erase/random.hpp"
#include "erase/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace erase;
using namespace erase::test;

namespace {

MultiChannelRecording refs(std::size_t n, std::size_t samples, double fs, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 10.0);
  SignalMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(samples));
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = nd(rng);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("emg" + std::to_string(i));
  return MultiChannelRecording(labels, std::vector<ChannelKind>(n, ChannelKind::EmgRef), fs, std::move(d));
}

}  // namespace

TEST_SUITE("eeg_sim") {
  TEST_CASE("default simulation peaks at exactly 60 uV") {
    const auto eeg = simulate_eeg(32, 300.0, 2000.0, 1);
    CHECK(eeg.channels() == 32);
    CHECK(eeg.samples() == 600000);
    CHECK(eeg.labels() == default_eeg_labels(32));
    CHECK(std::abs(eeg.data().cwiseAbs().maxCoeff() - 60.0) < 1e-6);
  }

  TEST_CASE("spatial correlation decays with distance and wraps around") {
    std::vector<double> near(32, 0.0), far(32, 0.0);
    double wrap = 0.0, across = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto eeg = simulate_eeg(32, 5.0, 1000.0, derive_seed(12, s));
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < 32; ++i) rows.push_back(row(eeg, i));
      for (std::size_t i = 0; i < 32; ++i) {
        near[i] += correlation(rows[i], rows[(i + 1) % 32]);
        far[i] += correlation(rows[i], rows[(i + 8) % 32]);
      }
      wrap += correlation(rows[0], rows[31]);
      across += correlation(rows[0], rows[15]);
    }
    int ok = 0;
    for (std::size_t i = 0; i < 32; ++i) ok += near[i] > far[i] ? 1 : 0;
    CHECK(ok >= 29);
    CHECK(wrap > across);
  }

  TEST_CASE("simulation is deterministic per seed") {
    const auto a = simulate_eeg(8, 2.0, 500.0, 3);
    const auto b = simulate_eeg(8, 2.0, 500.0, 3);
    const auto c = simulate_eeg(8, 2.0, 500.0, 4);
    CHECK(a.data() == b.data());
    CHECK(a.data() != c.data());
  }

  TEST_CASE("simulation validates its inputs") {
    CHECK_THROWS_AS(simulate_eeg(32, 1.0, 399.0, 1), ValidationError);
    CHECK_THROWS_AS(simulate_eeg(7, 1.0, 1000.0, 1), ValidationError);
    CHECK_THROWS_AS(simulate_eeg(8, 0.0, 1000.0, 1), ValidationError);
  }

  TEST_CASE("smoothing kernel rows sum to one and are circulant") {
    const auto k = circular_smoothing_kernel(32, 4.0);
    for (Eigen::Index i = 0; i < 32; ++i) {
      CHECK(std::abs(k.row(i).sum() - 1.0) < 1e-12);
      CHECK(k(i, (i + 3) % 32) == doctest::Approx(k(0, 3)).epsilon(1e-12));
    }
    CHECK(k(0, 1) == doctest::Approx(k(0, 31)).epsilon(1e-12));
  }

  TEST_CASE("contamination weights are L1-normalized and symmetric") {
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto w = draw_contamination_weights(1 + s % 7, s);
      double l1 = 0.0;
      for (double v : w) l1 += std::abs(v);
      REQUIRE(std::abs(l1 - 1.0) < 1e-12);
    }
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto w = draw_contamination_weights(1, s);
      CHECK(std::abs(w[0]) == 1.0);
    }
    std::vector<double> first;
    for (std::uint64_t s = 0; s < 10000; ++s) first.push_back(draw_contamination_weights(3, derive_seed(1, s))[0]);
    CHECK(std::abs(mean(first)) < 3.0 * stddev(first) / std::sqrt(10000.0));
  }

  TEST_CASE("contamination is linear and local") {
    const auto eeg = simulate_eeg(8, 2.0, 500.0, 5);
    const auto emg = refs(2, eeg.samples(), 500.0, 6);

    CHECK(contaminate(eeg, emg, {}).data() == eeg.data());

    ContaminationGroundTruth plan;
    plan.assignments.push_back({"emg0", {1, 4}, {0.25, -0.75}});
    plan.assignments.push_back({"emg1", {6}, {0.0}});
    const auto out = contaminate(eeg, emg, plan);
    for (std::size_t c : {0u, 2u, 3u, 5u, 6u, 7u}) CHECK(row(out, c) == row(eeg, c));
    const auto e0 = row(emg, 0);
    const auto c1 = row(out, 1), c4 = row(out, 4), o1 = row(eeg, 1), o4 = row(eeg, 4);
    for (std::size_t i = 0; i < e0.size(); ++i) {
      REQUIRE(std::abs((c1[i] - o1[i]) - 0.25 * e0[i]) < 1e-12);
      REQUIRE(std::abs((c4[i] - o4[i]) + 0.75 * e0[i]) < 1e-12);
    }

    ContaminationGroundTruth clash;
    clash.assignments.push_back({"emg0", {1}, {0.5}});
    clash.assignments.push_back({"emg1", {1}, {0.5}});
    CHECK_THROWS_AS(contaminate(eeg, emg, clash), ValidationError);
    CHECK_THROWS_AS(contaminate(eeg, refs(2, eeg.samples() - 1, 500.0, 1), plan), ValidationError);
  }

  TEST_CASE("ground truth round-trips through JSON") {
    ContaminationGroundTruth plan;
    plan.rng_seed = 99;
    plan.assignments.push_back({"left_frontalis", {3, 0}, {0.6, -0.4}});
    const auto back = ground_truth_from_json(to_json(plan));
    CHECK(back.rng_seed == 99);
    REQUIRE(back.assignments.size() == 1);
    CHECK(back.assignments[0].channels == plan.assignments[0].channels);
    CHECK(back.assignments[0].weights == plan.assignments[0].weights);
    CHECK(back.contaminated_channels() == std::vector<std::size_t>{3, 0});
  }

  TEST_CASE("reference channels are appended after the EEG block") {
    const auto eeg = simulate_eeg(32, 1.0, 1000.0, 2);
    const auto r = refs(4, eeg.samples(), 1000.0, 3);
    const auto both = append_reference_channels(eeg, r);
    CHECK(both.channels() == 36);
    CHECK(both.count(ChannelKind::Eeg) == 32);
    for (std::size_t i = 0; i < 36; ++i) CHECK(both.kinds()[i] == (i < 32 ? ChannelKind::Eeg : ChannelKind::EmgRef));
    const auto back = both.slice_channels(0, 32);
    CHECK(back.data() == eeg.data());
    CHECK(back.labels() == eeg.labels());

    const auto none = append_reference_channels(eeg, refs(0, eeg.samples(), 1000.0, 1));
    CHECK(none.data() == eeg.data());

    auto clash = refs(1, eeg.samples(), 1000.0, 4);
    clash = MultiChannelRecording({eeg.labels()[0]}, {ChannelKind::EmgRef}, 1000.0, clash.data());
    CHECK_THROWS_AS(append_reference_channels(eeg, clash), ValidationError);
  }
}
