#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "faslim/baselines.hpp"
#include "faslim/config.hpp"

namespace faslim {

enum class ExperimentKind { convergence, sweep_nm, sweep_k, sweep_power };

ExperimentKind experiment_kind_from_string(const std::string& name);

/// Batch description: which sweep, how many paired Monte Carlo drops per
/// point, which schemes see each drop.
struct ExperimentPlan {
    ExperimentKind kind = ExperimentKind::convergence;
    int drops = 20;
    std::uint64_t seed = 1;
    std::vector<std::string> schemes = {"proposed"};
    bool correlation = true;       ///< identity correlation when false
    double rho_fa = 0.5, rho_lm = 0.5;  ///< partial-configurability fractions
    int ga_budget = 2000;
    std::vector<int> nm_values = {4, 8, 12};
    std::vector<int> k_values = {2, 4, 6, 8};
    std::vector<double> power_dbm_values = {10.0, 20.0, 30.0, 40.0};
    int workers = 0;               ///< 0 = pick from hardware
    bool timing = false;           ///< emit wall millis (breaks byte determinism)
};

struct ResultRow {
    double sweep = 0.0;
    std::string scheme;
    double mean_rate = 0.0;
    double std_rate = 0.0;
    int drops = 0;
    double mean_iters = 0.0;
    double mean_ms = 0.0;
    bool any_failure = false;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<TraceRow> trace;   ///< proposed scheme, first drop (convergence runs)
};

/// Runs every scheme on identical channel draws per drop (paired design).
/// Per-drop substreams are derived from the master seed by counters, so the
/// result is deterministic and independent of worker scheduling.
ExperimentResult run_experiment(const ExperimentPlan& plan, const SystemConfig& cfg);

std::string summary_csv(const ExperimentResult& result);
std::string trace_csv(const ExperimentResult& result);

/// Writes summary.csv (and trace.csv when a trace is present) under out_dir.
void emit_results(const ExperimentResult& result, const std::string& out_dir);

}  // namespace faslim
