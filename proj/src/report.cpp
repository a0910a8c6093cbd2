#include "erase/report.hpp"

#include "erase/error.hpp"
#include "erase/recording_io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace erase {

namespace {

struct Samples {
  std::vector<double> hf;
  std::vector<double> mu;
  std::vector<double> reduction;
};

}  // namespace

AggregateReport aggregate_report(const std::vector<SessionSummary>& sessions) {
  if (sessions.empty()) throw ValidationError("report: no sessions");
  std::vector<std::string> order;
  std::map<std::string, Samples> by_condition;
  for (const auto& s : sessions) {
    for (const auto& c : s.conditions) {
      if (!by_condition.count(c.condition)) order.push_back(c.condition);
      auto& v = by_condition[c.condition];
      v.hf.push_back(c.hf_mean_z);
      v.mu.push_back(c.mu_mean_z_at_mu_channel);
      v.reduction.push_back(c.hf_percent_reduction);
    }
  }

  AggregateReport out;
  for (const auto& name : order) {
    const auto& v = by_condition.at(name);
    ConditionAggregate a;
    a.condition = name;
    a.n_sessions = v.hf.size();
    a.hf_z_mean = mean(v.hf);
    a.hf_z_sd = stddev(v.hf);
    a.mu_z_mean = mean(v.mu);
    a.mu_z_sd = stddev(v.mu);
    a.reduction_mean = mean(v.reduction);
    a.reduction_sd = stddev(v.reduction);
    out.conditions.push_back(a);
  }

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& a = by_condition.at(order[i]);
      const auto& b = by_condition.at(order[j]);
      out.pairs.push_back({"hf", order[i], order[j], wilcoxon_rank_sum(a.hf, b.hf)});
      out.pairs.push_back({"mu", order[i], order[j], wilcoxon_rank_sum(a.mu, b.mu)});
    }
  }

  // Topography only when every session shares one channel list.
  const auto& channels = sessions.front().conditions.empty() ? std::vector<std::string>{}
                                                             : sessions.front().conditions.front().channels;
  bool consistent = !channels.empty();
  for (const auto& s : sessions) {
    for (const auto& c : s.conditions) consistent = consistent && c.channels == channels;
  }
  if (!consistent) return out;
  for (const auto& name : order) {
    std::vector<TopographyRow> rows(channels.size());
    std::size_t n = 0;
    for (const auto& s : sessions) {
      const auto* c = s.find(name);
      if (!c) continue;
      ++n;
      for (std::size_t k = 0; k < channels.size(); ++k) {
        rows[k].mu_z += c->mu_z[k];
        rows[k].hf_z += c->hf_z[k];
        rows[k].mu_z_nulled += c->mu_z_nulled[k];
        rows[k].hf_z_nulled += c->hf_z_nulled[k];
      }
    }
    for (std::size_t k = 0; k < channels.size(); ++k) {
      auto& r = rows[k];
      r.condition = name;
      r.channel = channels[k];
      const auto d = static_cast<double>(n);
      r.mu_z /= d;
      r.hf_z /= d;
      r.mu_z_nulled /= d;
      r.hf_z_nulled /= d;
      out.topography.push_back(r);
    }
  }
  return out;
}

std::string condition_table_csv(const AggregateReport& report) {
  std::ostringstream os;
  os << "condition,n_sessions,hf_z_mean,hf_z_sd,mu_z_mean,mu_z_sd,reduction_pct_mean,reduction_pct_sd\n";
  for (const auto& a : report.conditions) {
    os << a.condition << ',' << a.n_sessions << ',' << format_double(a.hf_z_mean) << ',' << format_double(a.hf_z_sd)
       << ',' << format_double(a.mu_z_mean) << ',' << format_double(a.mu_z_sd) << ','
       << format_double(a.reduction_mean) << ',' << format_double(a.reduction_sd) << '\n';
  }
  return os.str();
}

std::string pairwise_csv(const AggregateReport& report) {
  std::ostringstream os;
  os << "band,condition_a,condition_b,rank_sum,z,p_value,exact\n";
  for (const auto& p : report.pairs) {
    os << p.band << ',' << p.condition_a << ',' << p.condition_b << ',' << format_double(p.test.statistic) << ','
       << format_double(p.test.z) << ',' << format_double(p.test.p_value) << ',' << (p.test.exact ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string topography_csv(const AggregateReport& report) {
  std::ostringstream os;
  os << "condition,channel,mu_z,hf_z,mu_z_nulled,hf_z_nulled\n";
  for (const auto& r : report.topography) {
    os << r.condition << ',' << r.channel << ',' << format_double(r.mu_z) << ',' << format_double(r.hf_z) << ','
       << format_double(r.mu_z_nulled) << ',' << format_double(r.hf_z_nulled) << '\n';
  }
  return os.str();
}

void write_report_outputs(const std::filesystem::path& dir, const AggregateReport& report) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "table.csv", condition_table_csv(report));
  write_text_file(dir / "pairwise.csv", pairwise_csv(report));
  write_text_file(dir / "topography.csv", topography_csv(report));
}

}  // namespace erase
