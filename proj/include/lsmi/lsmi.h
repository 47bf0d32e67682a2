/* C interface to the sample-wise interaction estimator. Every function
 * returns an lsmi_status; on failure lsmi_last_error() describes the cause
 * (per thread). Strings returned through char** are released with
 * lsmi_string_free. */
#ifndef LSMI_H
#define LSMI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(LSMI_BUILDING_LIBRARY)
#define LSMI_API __attribute__((visibility("default")))
#else
#define LSMI_API
#endif

typedef enum {
  LSMI_OK = 0,
  LSMI_ERR_IO = 1,
  LSMI_ERR_CONFIG = 2, /* invalid configuration or input data */
  LSMI_ERR_NUMERIC = 3
} lsmi_status;

typedef struct lsmi_config lsmi_config;
typedef struct lsmi_dataset lsmi_dataset;
typedef struct lsmi_report lsmi_report;

typedef struct {
  double r, u1, u2, s;
} lsmi_profile;

typedef struct {
  int64_t id;
  int y;
  double r, u1, u2, s;
  double i1, i2, i12;
  double h1, h2, h1y, h2y;
} lsmi_record;

/* Command-line overrides; NULL members and has_seed == 0 leave the document
 * value in place. */
typedef struct {
  int has_seed;
  uint64_t seed;
  const char* units;
  const char* out;
  const char* dataset;
  const char* a;
  const char* b;
} lsmi_overrides;

LSMI_API const char* lsmi_version(void);
LSMI_API const char* lsmi_last_error(void);
LSMI_API void lsmi_string_free(char* s);

LSMI_API lsmi_status lsmi_config_load(const char* path,
                                      const lsmi_overrides* overrides,
                                      lsmi_config** out);
LSMI_API lsmi_status lsmi_config_parse(const char* json_text,
                                       const char* base_dir,
                                       const lsmi_overrides* overrides,
                                       lsmi_config** out);
LSMI_API void lsmi_config_free(lsmi_config* cfg);
/* Empty string when unset. */
LSMI_API const char* lsmi_config_out(const lsmi_config* cfg);
LSMI_API const char* lsmi_config_dataset(const lsmi_config* cfg);
LSMI_API const char* lsmi_config_units(const lsmi_config* cfg);
/* Report paths of the compare section; empty strings when absent. */
LSMI_API const char* lsmi_config_compare_a(const lsmi_config* cfg);
LSMI_API const char* lsmi_config_compare_b(const lsmi_config* cfg);

LSMI_API lsmi_status lsmi_generate(const lsmi_config* cfg, lsmi_dataset** out);
LSMI_API lsmi_status lsmi_dataset_read(const char* path, lsmi_dataset** out);
LSMI_API lsmi_status lsmi_dataset_write(const lsmi_dataset* ds,
                                        const char* path);
LSMI_API lsmi_status lsmi_dataset_corrupt(const lsmi_dataset* ds,
                                          double p_flip, uint64_t seed,
                                          lsmi_dataset** out);
LSMI_API size_t lsmi_dataset_size(const lsmi_dataset* ds);
LSMI_API size_t lsmi_dataset_modalities(const lsmi_dataset* ds);
LSMI_API int lsmi_dataset_classes(const lsmi_dataset* ds);
LSMI_API void lsmi_dataset_free(lsmi_dataset* ds);

/* One report per modality pair (a < b, one-based); a bimodal dataset gives
 * exactly one. */
LSMI_API lsmi_status lsmi_estimate(const lsmi_config* cfg,
                                   const lsmi_dataset* ds, lsmi_report** out);
/* ds may be NULL: gates then report per event, models draw samples. */
LSMI_API lsmi_status lsmi_oracle(const lsmi_config* cfg,
                                 const lsmi_dataset* ds, lsmi_report** out);
LSMI_API void lsmi_report_free(lsmi_report* rep);

LSMI_API size_t lsmi_report_count(const lsmi_report* rep);
LSMI_API lsmi_status lsmi_report_pair(const lsmi_report* rep, size_t index,
                                      size_t* a, size_t* b);
LSMI_API lsmi_status lsmi_report_average(const lsmi_report* rep, size_t index,
                                         const char* units, lsmi_profile* out);
LSMI_API size_t lsmi_report_size(const lsmi_report* rep, size_t index);
/* Values in nats. */
LSMI_API lsmi_status lsmi_report_record(const lsmi_report* rep, size_t index,
                                        size_t row, lsmi_record* out);
/* Writes report.csv, summary.json and timings.json into dir. */
LSMI_API lsmi_status lsmi_report_write(const lsmi_report* rep, size_t index,
                                       const char* dir, const char* units);
LSMI_API lsmi_status lsmi_report_summary_json(const lsmi_report* rep,
                                              size_t index, const char* units,
                                              char** out);
LSMI_API lsmi_status lsmi_report_table(const lsmi_report* rep, size_t index,
                                       const char* units, char** out);

LSMI_API lsmi_status lsmi_compare_csv(const char* a, const char* b,
                                      const char* units, char** summary_json,
                                      char** table);

LSMI_API lsmi_status lsmi_bench(const lsmi_config* cfg, char** csv,
                                double* ratio);

#ifdef __cplusplus
}
#endif

#endif
