// Command-line front end for the fluid-antenna / liquid-metasurface
// simulator. Talks to the core exclusively through the C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "faslim/faslim.h"

namespace {

int status_to_exit(faslim_status st)
{
    switch (st) {
        case FASLIM_OK: return 0;
        case FASLIM_ERR_CONFIG: return 2;
        case FASLIM_ERR_ARG: return 2;
        default: return 3;
    }
}

int fail(faslim_status st)
{
    std::fprintf(stderr, "error: %s\n", faslim_last_error());
    return status_to_exit(st);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"faslim — batch experiments for a fluid-antenna base station with a "
                 "liquid metasurface"};
    app.footer("Without --config, a reduced desk-scale scenario is used "
               "(8 antennas/elements, 4 users).");

    std::string config_path;
    std::string experiment = "convergence";
    int drops = 20;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    std::string schemes = "proposed";
    std::string correlation = "on";
    std::string partial;
    int workers = 0;
    int ga_budget = 2000;
    bool timing = false;

    app.add_option("--config", config_path, "scenario config file (TOML-like)");
    app.add_option("--experiment", experiment,
                   "convergence | sweep-nm | sweep-k | sweep-power")
        ->capture_default_str();
    app.add_option("--drops", drops, "Monte Carlo drops per sweep point")
        ->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory for CSV files")
        ->capture_default_str();
    app.add_option("--schemes", schemes, "comma-separated scheme list")
        ->capture_default_str();
    app.add_option("--correlation", correlation, "on | off (identity correlation)")
        ->capture_default_str();
    app.add_option("--partial", partial,
                   "rho_fa,rho_lm adjustable fractions for the 'partial' scheme");
    app.add_option("--workers", workers, "worker threads (0 = auto)")
        ->capture_default_str();
    app.add_option("--ga-budget", ga_budget, "fitness evaluations for the 'ga' scheme")
        ->capture_default_str();
    app.add_flag("--timing", timing,
                 "emit wall-clock millis in CSVs (off keeps outputs byte-deterministic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (correlation != "on" && correlation != "off") {
        std::fprintf(stderr, "error: --correlation expects on|off\n");
        return 2;
    }

    faslim_config* cfg = nullptr;
    faslim_status st;
    if (!config_path.empty()) {
        st = faslim_config_load_file(config_path.c_str(), &cfg);
        if (st != FASLIM_OK)
            return fail(st);
    } else {
        st = faslim_config_default(&cfg);
        if (st == FASLIM_OK)
            st = faslim_config_set(cfg, "n_antennas", "8");
        if (st == FASLIM_OK)
            st = faslim_config_set(cfg, "n_elements", "8");
        if (st == FASLIM_OK)
            st = faslim_config_set(cfg, "n_users", "4");
        if (st != FASLIM_OK) {
            faslim_config_free(cfg);
            return fail(st);
        }
    }

    faslim_plan* plan = nullptr;
    st = faslim_plan_create(experiment.c_str(), drops, seed, &plan);
    if (st == FASLIM_OK)
        st = faslim_plan_set_schemes(plan, schemes.c_str());
    if (st == FASLIM_OK)
        st = faslim_plan_set_correlation(plan, correlation == "on" ? 1 : 0);
    if (st == FASLIM_OK)
        st = faslim_plan_set_workers(plan, workers);
    if (st == FASLIM_OK)
        st = faslim_plan_set_timing(plan, timing ? 1 : 0);
    if (st == FASLIM_OK)
        st = faslim_plan_set_ga_budget(plan, ga_budget);
    if (st == FASLIM_OK && !partial.empty()) {
        double rho_fa = 0.5, rho_lm = 0.5;
        if (std::sscanf(partial.c_str(), "%lf,%lf", &rho_fa, &rho_lm) != 2) {
            std::fprintf(stderr, "error: --partial expects rho_fa,rho_lm\n");
            faslim_plan_free(plan);
            faslim_config_free(cfg);
            return 2;
        }
        st = faslim_plan_set_partial(plan, rho_fa, rho_lm);
    }
    if (st != FASLIM_OK) {
        faslim_plan_free(plan);
        faslim_config_free(cfg);
        return fail(st);
    }

    faslim_result* result = nullptr;
    st = faslim_run_experiment(cfg, plan, &result);
    if (st != FASLIM_OK) {
        faslim_plan_free(plan);
        faslim_config_free(cfg);
        return fail(st);
    }
    st = faslim_result_write(result, out_dir.c_str());
    if (st != FASLIM_OK) {
        faslim_result_free(result);
        faslim_plan_free(plan);
        faslim_config_free(cfg);
        return fail(st);
    }

    std::fputs(faslim_result_summary_csv(result), stdout);
    std::fprintf(stderr, "wrote %s/summary.csv\n", out_dir.c_str());
    if (faslim_result_trace_csv(result)[0] != '\0')
        std::fprintf(stderr, "wrote %s/trace.csv\n", out_dir.c_str());

    faslim_result_free(result);
    faslim_plan_free(plan);
    faslim_config_free(cfg);
    return 0;
}
