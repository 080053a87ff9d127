#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rtsac/harness/experiment.hpp"

namespace rtsac::harness {

struct CurveRow {
  std::int64_t episode = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

struct CurveTable {
  std::string label;
  std::vector<CurveRow> rows;
};

// Two-sided 95% Student-t half-width factor t_{0.975, n-1}.
double t_critical_975(std::size_t n);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;
};
// mean +- t_{0.975,n-1} s / sqrt(n); needs n >= 2.
MeanInterval mean_ci95(std::span<const double> values);

// One row per window of `window` episodes: each run's mean over the window,
// then mean and 95% interval across runs. Needs at least two runs with equal
// episode counts (ErrorKind::Aggregation otherwise). With `truncate` the runs
// are cut to the shortest instead.
CurveTable aggregate(std::span<const RunSummary> runs, std::size_t window = 1, bool truncate = false);

void write_curve_csv(const CurveTable& table, std::ostream& out);
CurveTable read_curve_csv(const std::filesystem::path& path);

// Mean return over the last 10% of episodes (at least one).
double final_return(std::span<const double> episode_returns);

enum class Ordering { Greater, Less, Indistinguishable };
std::string_view to_string(Ordering o) noexcept;

struct SettingStats {
  std::string setting;
  std::size_t runs = 0;
  double mean_final_return = 0.0;
  double mean_updates = 0.0;
  double mean_samples = 0.0;
  std::map<std::uint64_t, double> final_by_seed;
};

struct Relation {
  std::string a;
  std::string b;
  Ordering order = Ordering::Indistinguishable;
  // Seeds present in both settings, and how many favour each side.
  std::size_t paired = 0;
  std::size_t a_wins = 0;
  std::size_t b_wins = 0;
  double samples_ratio = 0.0;
  double updates_ratio = 0.0;
};

struct ComparisonReport {
  std::vector<SettingStats> settings;
  std::vector<Relation> relations;

  const SettingStats* find(std::string_view setting) const noexcept;
  const Relation* relation(std::string_view a, std::string_view b) const noexcept;
  std::string to_text() const;
};

// Relations come from a 95% interval on the paired per-seed differences of
// final return (Welch interval when no seeds pair up): an interval above zero
// means Greater, below zero Less, anything else Indistinguishable.
ComparisonReport compare_settings(const std::map<std::string, std::vector<RunSummary>>& by_setting);

}  // namespace rtsac::harness
