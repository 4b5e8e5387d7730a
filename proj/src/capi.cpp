#include "fhm/fhm.h"

#include <exception>
#include <new>
#include <string>

#include "errors.hpp"
#include "pipeline.hpp"
#include "run_config.hpp"

struct fhm_run {
    fhm::Pipeline pipeline;
    std::string last_error;
    std::string summary;

    explicit fhm_run(fhm::RunConfig cfg) : pipeline(std::move(cfg)) {}
};

namespace {

thread_local std::string g_open_error;

fhm_status status_of(const std::exception& e) {
    if (dynamic_cast<const fhm::InvalidArgument*>(&e)) return FHM_ERR_INVALID_ARGUMENT;
    if (dynamic_cast<const fhm::IoError*>(&e)) return FHM_ERR_IO;
    if (dynamic_cast<const fhm::ConfigError*>(&e)) return FHM_ERR_CONFIG;
    if (dynamic_cast<const fhm::MissingDependency*>(&e)) return FHM_ERR_MISSING_DEPENDENCY;
    if (dynamic_cast<const fhm::NumericError*>(&e)) return FHM_ERR_NUMERIC;
    return FHM_ERR_INTERNAL;
}

template <typename Fn>
fhm_status guarded(fhm_run* run, Fn&& fn) {
    if (run == nullptr) return FHM_ERR_INVALID_ARGUMENT;
    run->last_error.clear();
    try {
        fn();
        return FHM_OK;
    } catch (const std::exception& e) {
        run->last_error = e.what();
        return status_of(e);
    } catch (...) {
        run->last_error = "unknown error";
        return FHM_ERR_INTERNAL;
    }
}

fhm_status open_with(fhm::RunConfig cfg, const char* out_dir, uint64_t seed, int has_seed,
                     int workers, fhm_run** out_run) {
    if (out_dir != nullptr) cfg.out_dir = out_dir;
    if (has_seed != 0) cfg.seed = seed;
    if (workers > 0) cfg.workers = workers;
    *out_run = new (std::nothrow) fhm_run(std::move(cfg));
    if (*out_run == nullptr) {
        g_open_error = "out of memory";
        return FHM_ERR_INTERNAL;
    }
    return FHM_OK;
}

} // namespace

extern "C" {

const char* fhm_version(void) { return "0.1.0"; }

const char* fhm_status_name(fhm_status status) {
    switch (status) {
        case FHM_OK: return "ok";
        case FHM_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case FHM_ERR_IO: return "io_error";
        case FHM_ERR_CONFIG: return "config_error";
        case FHM_ERR_MISSING_DEPENDENCY: return "missing_dependency";
        case FHM_ERR_NUMERIC: return "numeric_error";
        case FHM_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

fhm_status fhm_run_open(const char* config_path, const char* out_dir, uint64_t seed, int has_seed,
                        int workers, fhm_run** out_run) {
    if (config_path == nullptr || out_run == nullptr) return FHM_ERR_INVALID_ARGUMENT;
    *out_run = nullptr;
    try {
        return open_with(fhm::RunConfig::load(config_path), out_dir, seed, has_seed, workers,
                         out_run);
    } catch (const std::exception& e) {
        g_open_error = e.what();
        return status_of(e);
    }
}

fhm_status fhm_run_open_bundled(const char* out_dir, uint64_t seed, int has_seed, int workers,
                                fhm_run** out_run) {
    if (out_run == nullptr) return FHM_ERR_INVALID_ARGUMENT;
    *out_run = nullptr;
    try {
        return open_with(fhm::RunConfig::bundled_twin(), out_dir, seed, has_seed, workers,
                         out_run);
    } catch (const std::exception& e) {
        g_open_error = e.what();
        return status_of(e);
    }
}

void fhm_run_close(fhm_run* run) { delete run; }

const char* fhm_run_last_error(const fhm_run* run) {
    if (run == nullptr) return g_open_error.c_str();
    return run->last_error.c_str();
}

fhm_status fhm_run_simulate(fhm_run* run, int wave_index) {
    return guarded(run, [&] { run->pipeline.simulate(wave_index); });
}

fhm_status fhm_run_train(fhm_run* run, int wave_index) {
    return guarded(run, [&] { run->pipeline.train(wave_index); });
}

fhm_status fhm_run_wave(fhm_run* run, int wave_index) {
    return guarded(run, [&] { run->pipeline.wave(wave_index); });
}

fhm_status fhm_run_forecast(fhm_run* run, const char* gauge_name) {
    if (gauge_name == nullptr) return FHM_ERR_INVALID_ARGUMENT;
    return guarded(run, [&] { run->pipeline.forecast(gauge_name); });
}

fhm_status fhm_run_compare(fhm_run* run) {
    return guarded(run, [&] { run->pipeline.compare(); });
}

fhm_status fhm_run_twin(fhm_run* run, int* out_all_passed) {
    return guarded(run, [&] {
        const fhm::TwinReport report = run->pipeline.twin();
        run->summary = report.summary_lines();
        if (out_all_passed != nullptr) *out_all_passed = report.pass ? 1 : 0;
    });
}

const char* fhm_run_summary(const fhm_run* run) {
    return run == nullptr ? "" : run->summary.c_str();
}

int fhm_run_wave_count(const fhm_run* run) {
    return run == nullptr ? 0 : run->pipeline.config().wave_count();
}

} // extern "C"
