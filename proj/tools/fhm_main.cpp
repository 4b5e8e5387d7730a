// Command-line front end for the functional history matching pipeline.
// Links only the shared library's C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "fhm/fhm.h"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int workers = 0;
    bool bundled = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "Run configuration JSON");
    cmd->add_flag("--bundled", opts.bundled, "Use the bundled twin configuration");
    cmd->add_option("--out", opts.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", opts.seed, "Global seed (overrides the config)")
        ->each([&](const std::string&) { opts.has_seed = true; });
    cmd->add_option("--workers", opts.workers, "Worker threads (0 = all cores)");
}

int fail(fhm_run* run, fhm_status status) {
    const char* message = fhm_run_last_error(run);
    std::fprintf(stderr, "{\"error\": \"%s\", \"status\": \"%s\"}\n", message,
                 fhm_status_name(status));
    if (run != nullptr) fhm_run_close(run);
    return static_cast<int>(status);
}

fhm_run* open_run(const CommonOpts& opts, fhm_status& status) {
    fhm_run* run = nullptr;
    if (opts.bundled || opts.config.empty()) {
        status = fhm_run_open_bundled(opts.out.empty() ? nullptr : opts.out.c_str(), opts.seed,
                                      opts.has_seed ? 1 : 0, opts.workers, &run);
    } else {
        status = fhm_run_open(opts.config.c_str(), opts.out.empty() ? nullptr : opts.out.c_str(),
                              opts.seed, opts.has_seed ? 1 : 0, opts.workers, &run);
    }
    return run;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional history matching: emulate, project, screen, forecast"};
    app.require_subcommand(1);

    CommonOpts opts;
    int wave_index = 1;
    std::string gauge;

    auto* cmd_simulate = app.add_subcommand("simulate", "LHS design + toy-simulator ensemble");
    add_common(cmd_simulate, opts);
    cmd_simulate->add_option("--wave", wave_index, "Wave index (1-based)");

    auto* cmd_train = app.add_subcommand("train", "Train per-gauge emulators from the ensemble");
    add_common(cmd_train, opts);
    cmd_train->add_option("--wave", wave_index, "Wave index (1-based)");

    auto* cmd_wave = app.add_subcommand("wave", "Screen candidates and compute the NROY set");
    add_common(cmd_wave, opts);
    cmd_wave->add_option("--wave", wave_index, "Wave index (1-based)");

    auto* cmd_forecast = app.add_subcommand("forecast", "Forecast an unobserved gauge");
    add_common(cmd_forecast, opts);
    cmd_forecast->add_option("--gauge", gauge, "Target gauge name")->required();

    auto* cmd_compare = app.add_subcommand("compare", "Landmark-baseline comparison");
    add_common(cmd_compare, opts);

    auto* cmd_twin = app.add_subcommand("twin", "End-to-end twin experiment with pass/fail summary");
    add_common(cmd_twin, opts);

    CLI11_PARSE(app, argc, argv);

    fhm_status status = FHM_OK;
    fhm_run* run = open_run(opts, status);
    if (run == nullptr) return fail(nullptr, status);

    if (cmd_simulate->parsed()) {
        status = fhm_run_simulate(run, wave_index);
    } else if (cmd_train->parsed()) {
        status = fhm_run_train(run, wave_index);
    } else if (cmd_wave->parsed()) {
        status = fhm_run_wave(run, wave_index);
    } else if (cmd_forecast->parsed()) {
        status = fhm_run_forecast(run, gauge.c_str());
    } else if (cmd_compare->parsed()) {
        status = fhm_run_compare(run);
    } else if (cmd_twin->parsed()) {
        int passed = 0;
        status = fhm_run_twin(run, &passed);
        if (status == FHM_OK) {
            std::fputs(fhm_run_summary(run), stdout);
            if (passed == 0) {
                fhm_run_close(run);
                return 10; // twin ran but a recovery check failed
            }
        }
    }

    if (status != FHM_OK) return fail(run, status);
    fhm_run_close(run);
    return 0;
}
