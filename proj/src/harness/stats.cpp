#include "rtsac/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "rtsac/core/error.hpp"
#include "rtsac/pipeline/pipeline.hpp"

namespace rtsac::harness {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

Ordering order_from_interval(double low, double high) {
  if (low > 0.0) return Ordering::Greater;
  if (high < 0.0) return Ordering::Less;
  return Ordering::Indistinguishable;
}

}  // namespace

double t_critical_975(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::Aggregation, "a confidence interval needs at least two runs");
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.975);
}

MeanInterval mean_ci95(std::span<const double> values) {
  const std::size_t n = values.size();
  const double m = mean_of(values);
  const double s = std::sqrt(sample_variance(values, m));
  return {m, t_critical_975(n) * s / std::sqrt(static_cast<double>(n))};
}

CurveTable aggregate(std::span<const RunSummary> runs, std::size_t window, bool truncate) {
  if (runs.size() < 2) throw Error(ErrorKind::Aggregation, "aggregation needs at least two runs");
  if (window == 0) throw Error(ErrorKind::Aggregation, "window must be positive");
  std::size_t episodes = runs[0].episode_returns.size();
  for (const auto& r : runs) {
    if (r.episode_returns.size() != episodes) {
      if (!truncate) {
        throw Error(ErrorKind::Aggregation, "runs have different episode counts (" + std::to_string(episodes) +
                                                " vs " + std::to_string(r.episode_returns.size()) + ")");
      }
      episodes = std::min(episodes, r.episode_returns.size());
    }
  }
  CurveTable table;
  table.label = runs[0].setting;
  std::vector<double> per_run(runs.size());
  for (std::size_t start = 0; start < episodes; start += window) {
    const std::size_t end = std::min(episodes, start + window);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto& ret = runs[r].episode_returns;
      per_run[r] = std::accumulate(ret.begin() + static_cast<std::ptrdiff_t>(start),
                                   ret.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
                   static_cast<double>(end - start);
    }
    const MeanInterval ci = mean_ci95(per_run);
    table.rows.push_back({static_cast<std::int64_t>(start), ci.mean, ci.mean - ci.half_width,
                          ci.mean + ci.half_width, runs.size()});
  }
  return table;
}

void write_curve_csv(const CurveTable& table, std::ostream& out) {
  out << "episode,mean,ci_low,ci_high,n\n";
  for (const auto& r : table.rows) {
    out << r.episode << ',' << pipeline::format_number(r.mean) << ',' << pipeline::format_number(r.ci_low) << ','
        << pipeline::format_number(r.ci_high) << ',' << r.n << '\n';
  }
}

CurveTable read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "episode,mean,ci_low,ci_high,n") {
    throw Error(ErrorKind::Io, path.string() + ": not an aggregate table");
  }
  CurveTable table;
  table.label = path.stem().string();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    CurveRow r;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(row >> r.episode >> c1 >> r.mean >> c2 >> r.ci_low >> c3 >> r.ci_high >> c4 >> r.n) || c1 != ',' ||
        c2 != ',' || c3 != ',' || c4 != ',') {
      throw Error(ErrorKind::Io, path.string() + ": malformed row '" + line + "'");
    }
    table.rows.push_back(r);
  }
  return table;
}

double final_return(std::span<const double> episode_returns) {
  if (episode_returns.empty()) return 0.0;
  const std::size_t k = std::max<std::size_t>(1, episode_returns.size() / 10);
  return mean_of(episode_returns.subspan(episode_returns.size() - k));
}

std::string_view to_string(Ordering o) noexcept {
  switch (o) {
    case Ordering::Greater:
      return ">";
    case Ordering::Less:
      return "<";
    case Ordering::Indistinguishable:
      return "~";
  }
  return "?";
}

const SettingStats* ComparisonReport::find(std::string_view setting) const noexcept {
  for (const auto& s : settings) {
    if (s.setting == setting) return &s;
  }
  return nullptr;
}

const Relation* ComparisonReport::relation(std::string_view a, std::string_view b) const noexcept {
  for (const auto& r : relations) {
    if (r.a == a && r.b == b) return &r;
  }
  return nullptr;
}

std::string ComparisonReport::to_text() const {
  std::ostringstream out;
  out << "setting,runs,mean_final_return,mean_updates,mean_samples\n";
  for (const auto& s : settings) {
    out << s.setting << ',' << s.runs << ',' << pipeline::format_number(s.mean_final_return) << ','
        << pipeline::format_number(s.mean_updates) << ',' << pipeline::format_number(s.mean_samples) << '\n';
  }
  out << '\n';
  for (const auto& r : relations) {
    out << r.a << ' ' << to_string(r.order) << ' ' << r.b << "  (paired seeds " << r.paired << ", wins " << r.a_wins
        << ':' << r.b_wins << ", samples ratio " << pipeline::format_number(r.samples_ratio) << ", updates ratio "
        << pipeline::format_number(r.updates_ratio) << ")\n";
  }
  return out.str();
}

ComparisonReport compare_settings(const std::map<std::string, std::vector<RunSummary>>& by_setting) {
  if (by_setting.size() < 2) throw Error(ErrorKind::Aggregation, "comparison needs at least two settings");
  ComparisonReport report;
  for (const auto& [name, runs] : by_setting) {
    if (runs.empty()) throw Error(ErrorKind::Aggregation, "setting " + name + " has no runs");
    SettingStats s;
    s.setting = name;
    s.runs = runs.size();
    double finals = 0.0, updates = 0.0, samples = 0.0;
    for (const auto& r : runs) {
      const double f = final_return(r.episode_returns);
      s.final_by_seed[r.seed] = f;
      finals += f;
      updates += static_cast<double>(r.total_updates);
      samples += static_cast<double>(r.total_steps);
    }
    const double n = static_cast<double>(runs.size());
    s.mean_final_return = finals / n;
    s.mean_updates = updates / n;
    s.mean_samples = samples / n;
    report.settings.push_back(std::move(s));
  }

  for (std::size_t i = 0; i < report.settings.size(); ++i) {
    for (std::size_t j = i + 1; j < report.settings.size(); ++j) {
      const SettingStats& a = report.settings[i];
      const SettingStats& b = report.settings[j];
      Relation rel;
      rel.a = a.setting;
      rel.b = b.setting;
      rel.samples_ratio = b.mean_samples > 0 ? a.mean_samples / b.mean_samples : 0.0;
      rel.updates_ratio = b.mean_updates > 0 ? a.mean_updates / b.mean_updates : 0.0;
      std::vector<double> diffs;
      for (const auto& [seed, fa] : a.final_by_seed) {
        const auto it = b.final_by_seed.find(seed);
        if (it == b.final_by_seed.end()) continue;
        const double d = fa - it->second;
        diffs.push_back(d);
        rel.a_wins += d > 0.0 ? 1 : 0;
        rel.b_wins += d < 0.0 ? 1 : 0;
      }
      rel.paired = diffs.size();
      if (diffs.size() >= 2) {
        const MeanInterval ci = mean_ci95(diffs);
        rel.order = order_from_interval(ci.mean - ci.half_width, ci.mean + ci.half_width);
      } else if (diffs.size() == 1) {
        rel.order = order_from_interval(diffs[0], diffs[0]);
      } else {
        std::vector<double> va, vb;
        for (const auto& kv : a.final_by_seed) va.push_back(kv.second);
        for (const auto& kv : b.final_by_seed) vb.push_back(kv.second);
        if (va.size() >= 2 && vb.size() >= 2) {
          // Welch interval on the difference of means.
          const double ma = mean_of(va), mb = mean_of(vb);
          const double qa = sample_variance(va, ma) / static_cast<double>(va.size());
          const double qb = sample_variance(vb, mb) / static_cast<double>(vb.size());
          const double se = std::sqrt(qa + qb);
          if (se == 0.0) {
            rel.order = order_from_interval(ma - mb, ma - mb);
          } else {
            const double dof = (qa + qb) * (qa + qb) /
                               (qa * qa / static_cast<double>(va.size() - 1) + qb * qb / static_cast<double>(vb.size() - 1));
            const double t = boost::math::quantile(boost::math::students_t(dof), 0.975);
            rel.order = order_from_interval(ma - mb - t * se, ma - mb + t * se);
          }
        } else {
          rel.order = order_from_interval(a.mean_final_return - b.mean_final_return,
                                          a.mean_final_return - b.mean_final_return);
        }
      }
      report.relations.push_back(std::move(rel));
    }
  }
  return report;
}

}  // namespace rtsac::harness
