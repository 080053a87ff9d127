#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rtsac/harness/stats.hpp"

namespace rtsac::harness {

inline constexpr const char* kSummaryHeader =
    "setting,runs,mean_final_return,mean_updates,mean_samples,t_observe_ms,t_act_ms,t_store_ms,t_sample_ms,"
    "t_grad_ms,mean_cycle_ms";

struct SummaryRow {
  std::string setting;
  std::size_t runs = 0;
  double mean_final_return = 0.0;
  double mean_updates = 0.0;
  double mean_samples = 0.0;
  ComponentTimes times;
};

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

// Curve table per setting (<out_dir>/<setting>.csv) and summary.csv. Failed
// runs are left out. Returns the settings written.
std::vector<std::string> aggregate_runs(const std::filesystem::path& runs_dir, const std::filesystem::path& out_dir,
                                        std::size_t window = 1, bool truncate = false);

// Curves go to out_path; with a summary.csv present, <stem>_components.svg
// and <stem>_updates.svg are written beside it.
std::vector<std::filesystem::path> plot_tables(const std::filesystem::path& tables_dir,
                                               const std::filesystem::path& out_path);

ComparisonReport compare_runs(const std::filesystem::path& runs_dir);

}  // namespace rtsac::harness
