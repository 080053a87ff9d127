#include "rtsac/rtsac.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "rtsac/core/error.hpp"
#include "rtsac/harness/config.hpp"
#include "rtsac/harness/experiment.hpp"
#include "rtsac/harness/report.hpp"
#include "rtsac/harness/stats.hpp"

struct rtsac_config {
  rtsac::harness::ExperimentConfig value;
};

struct rtsac_results {
  std::vector<rtsac::harness::RunSummary> runs;
};

namespace {

thread_local std::string g_last_error;

rtsac_status status_of(rtsac::ErrorKind kind) {
  using rtsac::ErrorKind;
  switch (kind) {
    case ErrorKind::Configuration:
      return RTSAC_ERR_CONFIG;
    case ErrorKind::InvalidInput:
    case ErrorKind::Usage:
      return RTSAC_ERR_INVALID_ARGUMENT;
    case ErrorKind::Io:
      return RTSAC_ERR_IO;
    case ErrorKind::Aggregation:
      return RTSAC_ERR_AGGREGATION;
    case ErrorKind::Scheduling:
      return RTSAC_ERR_SCHEDULING;
    case ErrorKind::Corruption:
      return RTSAC_ERR_CORRUPTION;
    case ErrorKind::NonFinite:
      return RTSAC_ERR_NON_FINITE;
    default:
      return RTSAC_ERR_RUNTIME;
  }
}

rtsac_status fail(rtsac_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
rtsac_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RTSAC_OK;
  } catch (const rtsac::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RTSAC_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(RTSAC_ERR_RUNTIME, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> collect(const char* const* items, size_t count) {
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i) {
    if (items[i] == nullptr) throw rtsac::Error(rtsac::ErrorKind::Usage, "null override");
    out.emplace_back(items[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* rtsac_last_error(void) { return g_last_error.c_str(); }

const char* rtsac_status_name(rtsac_status status) {
  switch (status) {
    case RTSAC_OK:
      return "ok";
    case RTSAC_ERR_CONFIG:
      return "configuration error";
    case RTSAC_ERR_RUNTIME:
      return "runtime failure";
    case RTSAC_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case RTSAC_ERR_IO:
      return "i/o error";
    case RTSAC_ERR_AGGREGATION:
      return "aggregation error";
    case RTSAC_ERR_SCHEDULING:
      return "scheduling error";
    case RTSAC_ERR_CORRUPTION:
      return "corruption";
    case RTSAC_ERR_NON_FINITE:
      return "non-finite value";
  }
  return "unknown status";
}

const char* rtsac_version(void) { return "1.0.0"; }

void rtsac_string_free(char* text) { delete[] text; }

rtsac_status rtsac_config_load(const char* path, const char* const* overrides, size_t count, rtsac_config** out) {
  if (path == nullptr || out == nullptr || (count > 0 && overrides == nullptr)) {
    return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  }
  *out = nullptr;
  return guarded([&] {
    const auto o = collect(overrides, count);
    *out = new rtsac_config{rtsac::harness::load_config(path, o)};
  });
}

rtsac_status rtsac_config_parse(const char* text, const char* const* overrides, size_t count, rtsac_config** out) {
  if (text == nullptr || out == nullptr || (count > 0 && overrides == nullptr)) {
    return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  }
  *out = nullptr;
  return guarded([&] {
    const auto o = collect(overrides, count);
    *out = new rtsac_config{rtsac::harness::parse_config(text, o)};
  });
}

void rtsac_config_free(rtsac_config* config) { delete config; }

rtsac_status rtsac_config_set_seeds(rtsac_config* config, const uint64_t* seeds, size_t count) {
  if (config == nullptr || (count > 0 && seeds == nullptr)) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto copy = config->value;
    copy.seeds.assign(seeds, seeds + count);
    copy.validate();
    config->value = std::move(copy);
  });
}

rtsac_status rtsac_config_set_output_dir(rtsac_config* config, const char* dir) {
  if (config == nullptr || dir == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { config->value.output_dir = dir; });
}

rtsac_status rtsac_config_format(const rtsac_config* config, char** out) {
  if (config == nullptr || out == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = copy_string(rtsac::harness::format_config(config->value)); });
}

rtsac_status rtsac_config_setting(const rtsac_config* config, char** out) {
  if (config == nullptr || out == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = copy_string(std::string(rtsac::harness::to_string(config->value.setting))); });
}

rtsac_status rtsac_run(const rtsac_config* config, rtsac_results** out) {
  if (config == nullptr || out == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new rtsac_results{rtsac::harness::run_experiment(config->value)}; });
}

size_t rtsac_results_count(const rtsac_results* results) { return results == nullptr ? 0 : results->runs.size(); }

rtsac_status rtsac_results_get(const rtsac_results* results, size_t index, rtsac_run_info* out) {
  if (results == nullptr || out == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  if (index >= results->runs.size()) return fail(RTSAC_ERR_INVALID_ARGUMENT, "result index out of range");
  return guarded([&] {
    const auto& r = results->runs[index];
    out->seed = r.seed;
    out->total_steps = r.total_steps;
    out->total_updates = r.total_updates;
    out->episodes = static_cast<int64_t>(r.episode_returns.size());
    out->missed_deadlines = r.missed_deadlines;
    out->drops = r.drops;
    out->mean_cycle_ms = r.mean_cycle_ms;
    out->final_return = r.episode_returns.empty() ? 0.0 : rtsac::harness::final_return(r.episode_returns);
    out->failed = r.failure.has_value() ? 1 : 0;
  });
}

rtsac_status rtsac_results_failure(const rtsac_results* results, size_t index, char** out) {
  if (results == nullptr || out == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  if (index >= results->runs.size()) return fail(RTSAC_ERR_INVALID_ARGUMENT, "result index out of range");
  return guarded([&] { *out = copy_string(results->runs[index].failure.value_or("")); });
}

void rtsac_results_free(rtsac_results* results) { delete results; }

rtsac_status rtsac_aggregate(const char* runs_dir, const char* out_dir, size_t window, size_t* tables) {
  if (runs_dir == nullptr || out_dir == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto written = rtsac::harness::aggregate_runs(runs_dir, out_dir, window);
    if (tables != nullptr) *tables = written.size();
  });
}

rtsac_status rtsac_plot(const char* tables_dir, const char* out_path) {
  if (tables_dir == nullptr || out_path == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { rtsac::harness::plot_tables(tables_dir, out_path); });
}

rtsac_status rtsac_compare(const char* runs_dir, char** report) {
  if (runs_dir == nullptr || report == nullptr) return fail(RTSAC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *report = copy_string(rtsac::harness::compare_runs(runs_dir).to_text()); });
}

}  // extern "C"
