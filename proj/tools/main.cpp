#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtsac/rtsac.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int exit_code(rtsac_status status) {
  switch (status) {
    case RTSAC_OK:
      return kExitOk;
    case RTSAC_ERR_CONFIG:
    case RTSAC_ERR_INVALID_ARGUMENT:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int report(rtsac_status status, const char* what) {
  std::fprintf(stderr, "rtsac %s: %s: %s\n", what, rtsac_status_name(status), rtsac_last_error());
  return exit_code(status);
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string out;
};

int cmd_run(const RunArgs& a) {
  std::vector<const char*> overrides;
  for (const auto& o : a.overrides) overrides.push_back(o.c_str());
  rtsac_config* config = nullptr;
  if (auto s = rtsac_config_load(a.config.c_str(), overrides.data(), overrides.size(), &config); s != RTSAC_OK) {
    return report(s, "run");
  }
  rtsac_status s = RTSAC_OK;
  if (a.seed) s = rtsac_config_set_seeds(config, &*a.seed, 1);
  if (s == RTSAC_OK && !a.out.empty()) s = rtsac_config_set_output_dir(config, a.out.c_str());
  rtsac_results* results = nullptr;
  if (s == RTSAC_OK) s = rtsac_run(config, &results);
  rtsac_config_free(config);
  if (s != RTSAC_OK) return report(s, "run");

  int code = kExitOk;
  for (size_t i = 0; i < rtsac_results_count(results); ++i) {
    rtsac_run_info info{};
    rtsac_results_get(results, i, &info);
    if (info.failed) {
      char* why = nullptr;
      rtsac_results_failure(results, i, &why);
      std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(info.seed), why);
      rtsac_string_free(why);
      code = kExitRuntime;
      continue;
    }
    std::printf("seed %llu: steps %lld, updates %lld, episodes %lld, final return %.4f, mean cycle %.2f ms, "
                "missed %lld, drops %llu\n",
                static_cast<unsigned long long>(info.seed), static_cast<long long>(info.total_steps),
                static_cast<long long>(info.total_updates), static_cast<long long>(info.episodes), info.final_return,
                info.mean_cycle_ms, static_cast<long long>(info.missed_deadlines),
                static_cast<unsigned long long>(info.drops));
  }
  rtsac_results_free(results);
  return code;
}

int cmd_aggregate(const std::string& runs, std::string out, std::size_t window) {
  if (out.empty()) out = runs + "/tables";
  size_t tables = 0;
  if (auto s = rtsac_aggregate(runs.c_str(), out.c_str(), window, &tables); s != RTSAC_OK) {
    return report(s, "aggregate");
  }
  std::printf("wrote %zu curve tables and summary.csv to %s\n", tables, out.c_str());
  return kExitOk;
}

int cmd_plot(const std::string& tables, const std::string& out) {
  if (auto s = rtsac_plot(tables.c_str(), out.c_str()); s != RTSAC_OK) return report(s, "plot");
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_compare(const std::string& runs, const std::string& out) {
  char* text = nullptr;
  if (auto s = rtsac_compare(runs.c_str(), &text); s != RTSAC_OK) return report(s, "compare");
  std::fputs(text, stdout);
  int code = kExitOk;
  if (!out.empty()) {
    std::ofstream f(out);
    f << text;
    if (!f.flush()) {
      std::fprintf(stderr, "rtsac compare: cannot write %s\n", out.c_str());
      code = kExitRuntime;
    }
  }
  rtsac_string_free(text);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time SAC experiments on a simulated visual reacher"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rtsac_version());

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run every seed of one configuration");
  run_cmd->add_option("--config", run.config, "Configuration file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Run only this seed");
  run_cmd->add_option("--override", run.overrides, "key=value replacing a configuration entry")
      ->allow_extra_args(false);
  run_cmd->add_option("--out", run.out, "Output directory (overrides output_dir)");

  std::string runs_dir;
  std::string agg_out;
  std::size_t window = 1;
  auto* agg_cmd = app.add_subcommand("aggregate", "Per-setting learning curves with 95% intervals");
  agg_cmd->add_option("--runs", runs_dir, "Directory written by run")->required();
  agg_cmd->add_option("--out", agg_out, "Table directory (default <runs>/tables)");
  agg_cmd->add_option("--window", window, "Episodes per curve point")->check(CLI::PositiveNumber);

  std::string tables_dir;
  std::string plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "SVG learning curves and bar charts");
  plot_cmd->add_option("--tables", tables_dir, "Directory written by aggregate")->required();
  plot_cmd->add_option("--out", plot_out, "SVG file")->required();

  std::string compare_runs;
  std::string compare_out;
  auto* cmp_cmd = app.add_subcommand("compare", "Ordinal comparison of the settings");
  cmp_cmd->add_option("--runs", compare_runs, "Directory written by run")->required();
  cmp_cmd->add_option("--out", compare_out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*run_cmd) return cmd_run(run);
  if (*agg_cmd) return cmd_aggregate(runs_dir, agg_out, window);
  if (*plot_cmd) return cmd_plot(tables_dir, plot_out);
  return cmd_compare(compare_runs, compare_out);
}
