#include "faslim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "faslim/errors.hpp"
#include "faslim/geometry.hpp"

namespace faslim {

ExperimentKind experiment_kind_from_string(const std::string& name)
{
    if (name == "convergence") return ExperimentKind::convergence;
    if (name == "sweep-nm" || name == "sweep_nm") return ExperimentKind::sweep_nm;
    if (name == "sweep-k" || name == "sweep_k") return ExperimentKind::sweep_k;
    if (name == "sweep-power" || name == "sweep_power") return ExperimentKind::sweep_power;
    throw ConfigError("unknown experiment: '" + name + "'");
}

namespace {

struct SchemeOutcome {
    double rate = 0.0;
    double iters = 0.0;
    double ms = 0.0;
    bool failed = false;
    AOTrace trace;
};

// fixed registry index keeps substreams paired across scheme subsets
std::uint64_t scheme_salt(const std::string& scheme)
{
    return 100 + static_cast<std::uint64_t>(baseline_kind_from_string(scheme));
}

SystemConfig config_for_point(const ExperimentPlan& plan, const SystemConfig& base,
                              double sweep_value)
{
    SystemConfig cfg = base;
    switch (plan.kind) {
        case ExperimentKind::convergence:
            break;
        case ExperimentKind::sweep_nm:
            cfg.n_antennas = static_cast<int>(sweep_value);
            cfg.n_elements = static_cast<int>(sweep_value);
            break;
        case ExperimentKind::sweep_k:
            cfg.n_users = static_cast<int>(sweep_value);
            break;
        case ExperimentKind::sweep_power:
            cfg.pmax_dbm = sweep_value;
            break;
    }
    return cfg;
}

std::vector<double> sweep_values(const ExperimentPlan& plan, const SystemConfig& base)
{
    switch (plan.kind) {
        case ExperimentKind::convergence:
            return {static_cast<double>(base.n_antennas)};
        case ExperimentKind::sweep_nm: {
            std::vector<double> v(plan.nm_values.begin(), plan.nm_values.end());
            return v;
        }
        case ExperimentKind::sweep_k: {
            std::vector<double> v(plan.k_values.begin(), plan.k_values.end());
            return v;
        }
        case ExperimentKind::sweep_power:
            return plan.power_dbm_values;
    }
    return {};
}

std::vector<SchemeOutcome> run_drop(const ExperimentPlan& plan, const SystemConfig& cfg,
                                    std::uint64_t point_index, int drop)
{
    const std::uint64_t drop_key = point_index * 1000003ULL + static_cast<std::uint64_t>(drop);

    RngStream user_rng = RngStream::substream(plan.seed, drop_key, 1);
    std::vector<Vec2> users;
    users.reserve(static_cast<size_t>(cfg.n_users));
    for (int k = 0; k < cfg.n_users; ++k)
        users.push_back(user_rng.in_disk(cfg.user_center, cfg.user_radius));
    const LinkGeometry geo = derive_link_geometry(cfg, users);

    RngStream fade_rng = RngStream::substream(plan.seed, drop_key, 2);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade_rng);
    const std::vector<Vec2> p0 = initial_grid(cfg.n_antennas, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r0 = initial_grid(cfg.n_elements, cfg.aperture_lm, cfg.dth_lm);
    const ChannelRealization chan =
        assemble_channels(cfg, geo, p0, r0, draw, plan.correlation);

    std::vector<SchemeOutcome> outcomes;
    outcomes.reserve(plan.schemes.size());
    for (const std::string& scheme : plan.schemes) {
        SchemeOutcome oc;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            BaselineSpec spec;
            spec.kind = baseline_kind_from_string(scheme);
            spec.rho_fa = plan.rho_fa;
            spec.rho_lm = plan.rho_lm;
            spec.ga_budget = plan.ga_budget;
            RngStream scheme_rng = RngStream::substream(plan.seed, drop_key, scheme_salt(scheme));
            AOOptions opts;
            opts.i_outer = cfg.i_outer;
            opts.record_trace =
                plan.kind == ExperimentKind::convergence && drop == 0 && scheme == "proposed";
            const BaselineResult res = run_baseline(spec, cfg, geo, chan, scheme_rng, opts);
            oc.rate = res.sum_rate;
            oc.iters = res.iters;
            oc.trace = res.trace;
        } catch (const std::exception&) {
            oc.failed = true;  // recorded per row, not fatal
        }
        oc.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
        outcomes.push_back(std::move(oc));
    }
    return outcomes;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan, const SystemConfig& base_cfg)
{
    if (plan.drops < 1)
        throw ConfigError("experiment needs drops >= 1");
    const std::vector<double> values = sweep_values(plan, base_cfg);
    if (values.empty())
        throw ConfigError("experiment sweep has no points");
    for (const std::string& scheme : plan.schemes)
        baseline_kind_from_string(scheme);  // validate names up front

    struct Job {
        size_t point;
        int drop;
    };
    std::vector<Job> jobs;
    for (size_t pt = 0; pt < values.size(); ++pt)
        for (int d = 0; d < plan.drops; ++d)
            jobs.push_back({pt, d});

    // outcomes[point][drop][scheme]
    std::vector<std::vector<std::vector<SchemeOutcome>>> outcomes(values.size());
    for (auto& per_point : outcomes)
        per_point.resize(static_cast<size_t>(plan.drops));

    int workers = plan.workers;
    if (workers <= 0)
        workers = std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min<int>(workers, static_cast<int>(jobs.size()));

    std::atomic<size_t> next_job{0};
    auto worker_fn = [&]() {
        for (;;) {
            const size_t idx = next_job.fetch_add(1);
            if (idx >= jobs.size())
                return;
            const Job& job = jobs[idx];
            const SystemConfig cfg = config_for_point(plan, base_cfg, values[job.point]);
            outcomes[job.point][static_cast<size_t>(job.drop)] =
                run_drop(plan, cfg, job.point, job.drop);
        }
    };
    if (workers <= 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int i = 0; i < workers; ++i)
            pool.emplace_back(worker_fn);
        for (auto& th : pool)
            th.join();
    }

    ExperimentResult result;
    for (size_t pt = 0; pt < values.size(); ++pt) {
        for (size_t s = 0; s < plan.schemes.size(); ++s) {
            ResultRow row;
            row.sweep = values[pt];
            row.scheme = plan.schemes[s];
            double sum = 0.0, sum_sq = 0.0, iters = 0.0, ms = 0.0;
            int count = 0;
            for (int d = 0; d < plan.drops; ++d) {
                const SchemeOutcome& oc = outcomes[pt][static_cast<size_t>(d)][s];
                if (oc.failed) {
                    row.any_failure = true;
                    continue;
                }
                sum += oc.rate;
                sum_sq += oc.rate * oc.rate;
                iters += oc.iters;
                ms += oc.ms;
                ++count;
            }
            row.drops = count;
            if (count > 0) {
                row.mean_rate = sum / count;
                const double var =
                    count > 1 ? std::max(0.0, (sum_sq - sum * sum / count) / (count - 1)) : 0.0;
                row.std_rate = std::sqrt(var);
                row.mean_iters = iters / count;
                row.mean_ms = plan.timing ? ms / count : 0.0;
            }
            result.rows.push_back(std::move(row));
        }
    }
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const ResultRow& a, const ResultRow& b) {
                         if (a.sweep != b.sweep)
                             return a.sweep < b.sweep;
                         return a.scheme < b.scheme;
                     });

    if (plan.kind == ExperimentKind::convergence) {
        for (size_t s = 0; s < plan.schemes.size(); ++s) {
            if (plan.schemes[s] == "proposed" && !outcomes[0][0][s].failed) {
                result.trace = outcomes[0][0][s].trace.rows;
                if (!plan.timing)
                    for (TraceRow& row : result.trace)
                        row.ms = 0.0;
                break;
            }
        }
    }
    return result;
}

namespace {

std::string format_sig6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string summary_csv(const ExperimentResult& result)
{
    std::string out = "sweep,scheme,mean_rate_bps_hz,std_rate,drops,mean_iters,mean_ms\n";
    for (const ResultRow& row : result.rows) {
        out += format_sig6(row.sweep);
        out += ',';
        out += row.scheme;
        out += ',';
        out += format_sig6(row.mean_rate);
        out += ',';
        out += format_sig6(row.std_rate);
        out += ',';
        out += std::to_string(row.drops);
        out += ',';
        out += format_sig6(row.mean_iters);
        out += ',';
        out += format_sig6(row.mean_ms);
        out += '\n';
    }
    return out;
}

std::string trace_csv(const ExperimentResult& result)
{
    std::string out = "iter,stage,sum_rate,penalty,violation,ms\n";
    for (const TraceRow& row : result.trace) {
        out += std::to_string(row.iter);
        out += ',';
        out += row.stage;
        out += ',';
        out += format_sig6(row.sum_rate);
        out += ',';
        out += format_sig6(row.penalty);
        out += ',';
        out += format_sig6(row.violation);
        out += ',';
        out += format_sig6(row.ms);
        out += '\n';
    }
    return out;
}

void emit_results(const ExperimentResult& result, const std::string& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    const auto write = [](const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot write '" + path + "'");
        out << content;
        if (!out)
            throw IoError("write failed for '" + path + "'");
    };
    write(out_dir + "/summary.csv", summary_csv(result));
    if (!result.trace.empty())
        write(out_dir + "/trace.csv", trace_csv(result));
}

}  // namespace faslim
