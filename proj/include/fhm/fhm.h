/* Functional history matching pipeline - C API.
 *
 * The library is driven through an opaque run handle created from a JSON
 * run configuration. Every stage call returns a status code; on failure the
 * handle stores a human-readable message retrievable until the next call.
 * Handles are not thread-safe; use one handle per thread.
 */
#ifndef FHM_H
#define FHM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fhm_status {
    FHM_OK = 0,
    FHM_ERR_INVALID_ARGUMENT = 1,
    FHM_ERR_IO = 2,
    FHM_ERR_CONFIG = 3,
    FHM_ERR_MISSING_DEPENDENCY = 4,
    FHM_ERR_NUMERIC = 5,
    FHM_ERR_INTERNAL = 6
} fhm_status;

typedef struct fhm_run fhm_run;

const char* fhm_version(void);
const char* fhm_status_name(fhm_status status);

/* Creates a run handle from a config file. `out_dir` overrides the config's
 * output directory when non-NULL. `seed` overrides the config seed when
 * `has_seed` is nonzero. `workers` overrides the worker count when positive.
 * On failure returns the error status and, if `error` is non-NULL, points it
 * at a static message buffer. */
fhm_status fhm_run_open(const char* config_path, const char* out_dir, uint64_t seed, int has_seed,
                        int workers, fhm_run** out_run);

/* Creates a run handle for the bundled twin experiment (no config file). */
fhm_status fhm_run_open_bundled(const char* out_dir, uint64_t seed, int has_seed, int workers,
                                fhm_run** out_run);

void fhm_run_close(fhm_run* run);

/* Message for the most recent failing call on this handle ("" if none). */
const char* fhm_run_last_error(const fhm_run* run);

/* Pipeline stages. Wave indices are 1-based. */
fhm_status fhm_run_simulate(fhm_run* run, int wave_index);
fhm_status fhm_run_train(fhm_run* run, int wave_index);
fhm_status fhm_run_wave(fhm_run* run, int wave_index);
fhm_status fhm_run_forecast(fhm_run* run, const char* gauge_name);
fhm_status fhm_run_compare(fhm_run* run);

/* Full twin experiment; `out_all_passed` (optional) receives 1/0. The
 * human-readable per-check summary is retrievable via fhm_run_summary. */
fhm_status fhm_run_twin(fhm_run* run, int* out_all_passed);

/* Summary text of the last twin run on this handle ("" before any). */
const char* fhm_run_summary(const fhm_run* run);

/* Number of configured waves. */
int fhm_run_wave_count(const fhm_run* run);

#ifdef __cplusplus
}
#endif

#endif /* FHM_H */
