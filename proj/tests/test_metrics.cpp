#include "erase/error.hpp"
#include "erase/metrics.hpp"
#include "erase/random.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace erase;

namespace {

ArtifactColumnView view(std::vector<double> contaminated, std::vector<double> uncontaminated,
                        std::vector<double> reference = {1.0}) {
  ArtifactColumnView v;
  v.contaminated = std::move(contaminated);
  v.uncontaminated = std::move(uncontaminated);
  v.reference = std::move(reference);
  return v;
}

BandPowerSeries series(const Eigen::MatrixXd& movement) {
  BandPowerSeries s;
  s.channels.resize(static_cast<std::size_t>(movement.rows()), "c");
  s.idle = Eigen::MatrixXd::Zero(movement.rows(), movement.cols());
  s.movement = movement;
  s.zscored = true;
  s.flagged.assign(s.channels.size(), false);
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("artifact index examples") {
    const auto flat = artifact_index(view({0.5, -0.5}, std::vector<double>(30, 0.5)));
    CHECK(flat.value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(flat.infinite);
    CHECK(artifact_index(view({0.8, -0.6}, std::vector<double>(30, 0.1))).value == doctest::Approx(7.0).epsilon(1e-12));

    const auto inf = artifact_index(view({0.3}, {0.0, 0.0}));
    CHECK(inf.infinite);
    CHECK(std::isinf(inf.value));
    CHECK_THROWS_AS(artifact_index(view({}, {1.0})), ValidationError);
  }

  TEST_CASE("artifact index on a 36 x 36 mixing matrix matches a row loop") {
    Rng rng(36);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd a(36, 36);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    const std::vector<std::size_t> rows{0, 5, 9, 17, 22, 31};
    const std::set<std::size_t> hit(rows.begin(), rows.end());
    for (Eigen::Index col : {0, 11, 35}) {
      double num = 0.0, den = 0.0;
      for (std::size_t r = 0; r < 32; ++r) {
        (hit.count(r) ? num : den) += std::abs(a(static_cast<Eigen::Index>(r), col));
      }
      const double oracle = (num / 6.0) / (den / 26.0);
      const auto v = make_column_view(a, col, rows, 32, 4);
      CHECK(v.contaminated.size() == 6);
      CHECK(v.uncontaminated.size() == 26);
      CHECK(v.reference.size() == 4);
      CHECK(std::abs(artifact_index(v).value - oracle) < 1e-12 * oracle);
    }
  }

  TEST_CASE("column view validation") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Ones(6, 6);
    const std::vector<std::size_t> ref_row{4};
    CHECK_THROWS_AS(make_column_view(a, 0, ref_row, 4, 2), ValidationError);
    CHECK_THROWS_AS(make_column_view(a, 6, std::vector<std::size_t>{0}, 4, 2), ValidationError);
    CHECK_THROWS_AS(make_column_view(a, 0, std::vector<std::size_t>{0}, 4, 1), ValidationError);
  }

  TEST_CASE("artifact events") {
    CHECK_FALSE(artifact_event(view({0.4, 0.4}, {0.4, -0.4, 0.4})));
    CHECK(artifact_event(view({0.9}, {0.1}, {1.0})));
    // Difference exactly 0.05 * max |ref|: the inequality is strict.
    CHECK_FALSE(artifact_event(view({0.25}, {0.0}, {-5.0})));
    CHECK(artifact_event(view({0.2500001}, {0.0}, {-5.0})));
    CHECK_THROWS_AS(artifact_event(view({0.5}, {0.1}, {})), ValidationError);
  }

  TEST_CASE("event rates") {
    CHECK(rate_over_datasets({false, false, false}) == 0.0);
    CHECK(rate_over_datasets({true, true}) == 1.0);
    CHECK(rate_over_datasets({true, false, true, false}) == 0.5);
    CHECK_THROWS_AS(rate_over_datasets({}), ValidationError);
  }

  TEST_CASE("percent reduction") {
    CHECK(percent_reduction(4.0, 4.0) == 0.0);
    CHECK(percent_reduction(10.0, 2.5) == doctest::Approx(75.0).epsilon(1e-15));
    CHECK_THROWS_AS(percent_reduction(0.0, 1.0), NumericalError);

    Eigen::MatrixXd before(3, 4), after(3, 4);
    before << 1, 2, 3, 4, 0.5, 0.5, 0.5, 0.5, 2, 2, 2, 2;
    after << 0.25, 0.5, 0.75, 1, 0.5, 0, 0, 0, 1, 1, 1, 1;
    const double sb = before.sum(), sa = after.sum();
    CHECK(std::abs(percent_reduction(series(before), series(after)) - std::abs(sb - sa) / sb * 100.0) < 1e-12);

    auto b = series(before);
    auto a = series(after);
    a.flagged[2] = true;
    const double sb2 = before.topRows(2).sum(), sa2 = after.topRows(2).sum();
    CHECK(std::abs(percent_reduction(b, a) - std::abs(sb2 - sa2) / sb2 * 100.0) < 1e-12);

    CHECK_THROWS_AS(percent_reduction(series(before), series(after.leftCols(3))), ValidationError);
  }
}
