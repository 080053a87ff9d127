#ifndef RTSAC_RTSAC_H
#define RTSAC_RTSAC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RTSAC_API __declspec(dllexport)
#else
#define RTSAC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtsac_status {
  RTSAC_OK = 0,
  RTSAC_ERR_CONFIG = 1,
  RTSAC_ERR_RUNTIME = 2,
  RTSAC_ERR_INVALID_ARGUMENT = 3,
  RTSAC_ERR_IO = 4,
  RTSAC_ERR_AGGREGATION = 5,
  RTSAC_ERR_SCHEDULING = 6,
  RTSAC_ERR_CORRUPTION = 7,
  RTSAC_ERR_NON_FINITE = 8,
} rtsac_status;

typedef struct rtsac_config rtsac_config;
typedef struct rtsac_results rtsac_results;

typedef struct rtsac_run_info {
  uint64_t seed;
  int64_t total_steps;
  int64_t total_updates;
  int64_t episodes;
  int64_t missed_deadlines;
  uint64_t drops;
  double mean_cycle_ms;
  double final_return;
  int failed;
} rtsac_run_info;

/* Message of the last failing call on this thread; never NULL. */
RTSAC_API const char* rtsac_last_error(void);
RTSAC_API const char* rtsac_status_name(rtsac_status status);
RTSAC_API const char* rtsac_version(void);

/* Strings returned through char** are owned by the caller. */
RTSAC_API void rtsac_string_free(char* text);

/* `overrides` holds `count` strings of the form key=value. */
RTSAC_API rtsac_status rtsac_config_load(const char* path, const char* const* overrides, size_t count,
                                         rtsac_config** out);
RTSAC_API rtsac_status rtsac_config_parse(const char* text, const char* const* overrides, size_t count,
                                          rtsac_config** out);
RTSAC_API void rtsac_config_free(rtsac_config* config);
RTSAC_API rtsac_status rtsac_config_set_seeds(rtsac_config* config, const uint64_t* seeds, size_t count);
RTSAC_API rtsac_status rtsac_config_set_output_dir(rtsac_config* config, const char* dir);
RTSAC_API rtsac_status rtsac_config_format(const rtsac_config* config, char** out);
RTSAC_API rtsac_status rtsac_config_setting(const rtsac_config* config, char** out);

/* Runs every seed and writes the per-run CSVs. A failing seed does not stop
   the others; it is reported through rtsac_run_info.failed. */
RTSAC_API rtsac_status rtsac_run(const rtsac_config* config, rtsac_results** out);
RTSAC_API size_t rtsac_results_count(const rtsac_results* results);
RTSAC_API rtsac_status rtsac_results_get(const rtsac_results* results, size_t index, rtsac_run_info* out);
RTSAC_API rtsac_status rtsac_results_failure(const rtsac_results* results, size_t index, char** out);
RTSAC_API void rtsac_results_free(rtsac_results* results);

/* Reads <runs_dir>/<setting>/seed_N_*.csv and writes one curve table per
   setting plus summary.csv into out_dir. Returns the number of tables. */
RTSAC_API rtsac_status rtsac_aggregate(const char* runs_dir, const char* out_dir, size_t window, size_t* tables);

/* Curves from every <tables_dir>/<setting>.csv into out_path. When the
   directory also holds summary.csv, bar charts of component times and update
   counts are written next to out_path. */
RTSAC_API rtsac_status rtsac_plot(const char* tables_dir, const char* out_path);

/* Text report of the ordinal relations between the settings under runs_dir. */
RTSAC_API rtsac_status rtsac_compare(const char* runs_dir, char** report);

#ifdef __cplusplus
}
#endif

#endif
