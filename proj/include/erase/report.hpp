#pragma once

#include "erase/session.hpp"
#include "erase/stats.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace erase {

struct ConditionAggregate {
  std::string condition;
  std::size_t n_sessions = 0;
  double hf_z_mean = 0.0;
  double hf_z_sd = 0.0;
  double mu_z_mean = 0.0;  // at each session's mu channel
  double mu_z_sd = 0.0;
  double reduction_mean = 0.0;
  double reduction_sd = 0.0;
};

struct PairwiseTest {
  std::string band;  // hf | mu
  std::string condition_a;
  std::string condition_b;
  RankSumResult test;
};

struct TopographyRow {
  std::string condition;
  std::string channel;
  double mu_z = 0.0;
  double hf_z = 0.0;
  double mu_z_nulled = 0.0;
  double hf_z_nulled = 0.0;
};

struct AggregateReport {
  std::vector<ConditionAggregate> conditions;  // order of first appearance
  std::vector<PairwiseTest> pairs;
  std::vector<TopographyRow> topography;  // empty when sessions disagree on channels
};

/// Per-condition mean and sample SD over sessions, pairwise rank-sum tests on the
/// per-session values, and channel means across sessions.
AggregateReport aggregate_report(const std::vector<SessionSummary>& sessions);

std::string condition_table_csv(const AggregateReport& report);
std::string pairwise_csv(const AggregateReport& report);
std::string topography_csv(const AggregateReport& report);

/// table.csv, pairwise.csv and topography.csv under `dir`.
void write_report_outputs(const std::filesystem::path& dir, const AggregateReport& report);

}  // namespace erase
