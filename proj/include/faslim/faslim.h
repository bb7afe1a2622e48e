/*
 * faslim — fluid-antenna / liquid-metasurface downlink simulator.
 *
 * C API over the optimization core: opaque handles, integer status codes,
 * thread-local error messages. All returned objects are owned by the caller
 * and released with the matching _free function.
 */

#ifndef FASLIM_H
#define FASLIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FASLIM_API __declspec(dllexport)
#else
#define FASLIM_API __attribute__((visibility("default")))
#endif

typedef enum faslim_status {
    FASLIM_OK = 0,
    FASLIM_ERR_CONFIG = 1,   /* bad config/plan input */
    FASLIM_ERR_RUNTIME = 2,  /* model or solver failure */
    FASLIM_ERR_IO = 3,       /* file system problem */
    FASLIM_ERR_ARG = 4       /* null handle / bad argument */
} faslim_status;

typedef struct faslim_config faslim_config;
typedef struct faslim_plan faslim_plan;
typedef struct faslim_result faslim_result;

/* Message describing the most recent failure on this thread. */
FASLIM_API const char* faslim_last_error(void);

FASLIM_API const char* faslim_version(void);

/* --- configuration ------------------------------------------------------ */

/* Paper-scale defaults (16 antennas/elements, 8 users). */
FASLIM_API faslim_status faslim_config_default(faslim_config** out);
/* Parse a TOML-like document; unknown keys are rejected. */
FASLIM_API faslim_status faslim_config_parse(const char* text, faslim_config** out);
FASLIM_API faslim_status faslim_config_load_file(const char* path, faslim_config** out);
/* Serialized form; valid until the next call on this config. */
FASLIM_API const char* faslim_config_serialize(faslim_config* cfg);
/* Override one key with a TOML-style value string (e.g. "8" or "[1, 1]"). */
FASLIM_API faslim_status faslim_config_set(faslim_config* cfg, const char* key,
                                           const char* value);
FASLIM_API void faslim_config_free(faslim_config* cfg);

/* --- experiment plans ----------------------------------------------------- */

/* kind: convergence | sweep-nm | sweep-k | sweep-power */
FASLIM_API faslim_status faslim_plan_create(const char* kind, int drops, uint64_t seed,
                                            faslim_plan** out);
/* comma-separated scheme list, e.g. "proposed,wo_lim,zf" */
FASLIM_API faslim_status faslim_plan_set_schemes(faslim_plan* plan, const char* schemes);
FASLIM_API faslim_status faslim_plan_set_correlation(faslim_plan* plan, int enabled);
FASLIM_API faslim_status faslim_plan_set_partial(faslim_plan* plan, double rho_fa,
                                                 double rho_lm);
FASLIM_API faslim_status faslim_plan_set_workers(faslim_plan* plan, int workers);
/* wall-clock millis in CSVs; off by default so identical runs emit identical bytes */
FASLIM_API faslim_status faslim_plan_set_timing(faslim_plan* plan, int enabled);
FASLIM_API faslim_status faslim_plan_set_ga_budget(faslim_plan* plan, int budget);
FASLIM_API void faslim_plan_free(faslim_plan* plan);

/* --- runs ----------------------------------------------------------------- */

FASLIM_API faslim_status faslim_run_experiment(const faslim_config* cfg,
                                               const faslim_plan* plan,
                                               faslim_result** out);

/* CSV views; valid while the result lives. Trace CSV is empty unless the
 * plan was a convergence run. */
FASLIM_API const char* faslim_result_summary_csv(const faslim_result* result);
FASLIM_API const char* faslim_result_trace_csv(const faslim_result* result);
/* Writes summary.csv (and trace.csv when present) under out_dir. */
FASLIM_API faslim_status faslim_result_write(const faslim_result* result,
                                             const char* out_dir);
FASLIM_API void faslim_result_free(faslim_result* result);

#ifdef __cplusplus
}
#endif

#endif /* FASLIM_H */
