#include "rtsac/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "rtsac/core/error.hpp"
#include "rtsac/harness/plot.hpp"
#include "rtsac/pipeline/pipeline.hpp"

namespace rtsac::harness {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double number(const std::string& text, const std::filesystem::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, path.string() + ": bad number '" + text + "'");
  }
  return v;
}

std::map<std::string, std::vector<RunSummary>> successful_runs(const std::filesystem::path& runs_dir) {
  auto all = read_runs(runs_dir);
  for (auto it = all.begin(); it != all.end();) {
    auto& runs = it->second;
    runs.erase(std::remove_if(runs.begin(), runs.end(), [](const RunSummary& r) { return r.failure.has_value(); }),
               runs.end());
    it = runs.empty() ? all.erase(it) : std::next(it);
  }
  if (all.empty()) throw Error(ErrorKind::Aggregation, "no completed runs under " + runs_dir.string());
  return all;
}

}  // namespace

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  using pipeline::format_number;
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.setting << ',' << r.runs << ',' << format_number(r.mean_final_return) << ','
        << format_number(r.mean_updates) << ',' << format_number(r.mean_samples) << ','
        << format_number(r.times.observe) << ',' << format_number(r.times.act) << ','
        << format_number(r.times.store) << ',' << format_number(r.times.sample) << ','
        << format_number(r.times.grad) << ',' << format_number(r.times.cycle) << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw Error(ErrorKind::Io, path.string() + ": unexpected header");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw Error(ErrorKind::Io, path.string() + ": wrong field count");
    SummaryRow r;
    r.setting = f[0];
    r.runs = static_cast<std::size_t>(number(f[1], path));
    r.mean_final_return = number(f[2], path);
    r.mean_updates = number(f[3], path);
    r.mean_samples = number(f[4], path);
    r.times.observe = number(f[5], path);
    r.times.act = number(f[6], path);
    r.times.store = number(f[7], path);
    r.times.sample = number(f[8], path);
    r.times.grad = number(f[9], path);
    r.times.cycle = number(f[10], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> aggregate_runs(const std::filesystem::path& runs_dir, const std::filesystem::path& out_dir,
                                        std::size_t window, bool truncate) {
  const auto by_setting = successful_runs(runs_dir);
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  std::vector<SummaryRow> summary;
  for (const auto& [setting, runs] : by_setting) {
    CurveTable table = aggregate(runs, window, truncate);
    const auto path = out_dir / (setting + ".csv");
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    write_curve_csv(table, out);
    if (!out.flush()) throw Error(ErrorKind::Io, "write failed for " + path.string());

    SummaryRow row;
    row.setting = setting;
    row.runs = runs.size();
    for (const auto& r : runs) {
      row.mean_final_return += final_return(r.episode_returns);
      row.mean_updates += static_cast<double>(r.total_updates);
      row.mean_samples += static_cast<double>(r.total_steps);
    }
    const double n = static_cast<double>(runs.size());
    row.mean_final_return /= n;
    row.mean_updates /= n;
    row.mean_samples /= n;
    row.times = read_component_times(runs_dir / setting);
    summary.push_back(std::move(row));
    written.push_back(setting);
  }
  const auto path = out_dir / "summary.csv";
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_summary_csv(summary, out);
  if (!out.flush()) throw Error(ErrorKind::Io, "write failed for " + path.string());
  return written;
}

std::vector<std::filesystem::path> plot_tables(const std::filesystem::path& tables_dir,
                                               const std::filesystem::path& out_path) {
  if (!std::filesystem::is_directory(tables_dir)) {
    throw Error(ErrorKind::Io, "not a directory: " + tables_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(tables_dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".csv" && p.filename() != "summary.csv") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::Usage, "no curve tables in " + tables_dir.string());
  std::vector<CurveTable> tables;
  for (const auto& f : files) tables.push_back(read_curve_csv(f));

  std::vector<std::filesystem::path> out{out_path};
  emit_plot(tables, out_path);

  const auto summary_path = tables_dir / "summary.csv";
  if (std::filesystem::exists(summary_path)) {
    const auto rows = read_summary_csv(summary_path);
    std::vector<BarGroup> components;
    std::vector<BarGroup> updates{{"gradient updates per run", {}}};
    for (const auto& r : rows) {
      components.push_back({r.setting,
                            {{"observe", r.times.observe},
                             {"act", r.times.act},
                             {"store", r.times.store},
                             {"sample", r.times.sample},
                             {"grad", r.times.grad}}});
      updates[0].bars.push_back({r.setting, r.mean_updates});
    }
    const auto stem = out_path.stem().string();
    const auto dir = out_path.parent_path();
    out.push_back(dir / (stem + "_components.svg"));
    emit_bars(components, out.back(), "Mean time per step by component", "ms");
    out.push_back(dir / (stem + "_updates.svg"));
    emit_bars(updates, out.back(), "Average number of gradient updates per run", "updates");
  }
  return out;
}

ComparisonReport compare_runs(const std::filesystem::path& runs_dir) {
  return compare_settings(successful_runs(runs_dir));
}

}  // namespace rtsac::harness
