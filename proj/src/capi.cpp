#include "faslim/faslim.h"

#include <string>

#include "faslim/config.hpp"
#include "faslim/errors.hpp"
#include "faslim/experiment.hpp"

namespace {

thread_local std::string g_last_error;

faslim_status record_error(const std::exception& e, faslim_status code)
{
    try {
        g_last_error = e.what();
    } catch (...) {
        g_last_error.clear();
    }
    return code;
}

faslim_status bad_arg(const char* what)
{
    g_last_error = what;
    return FASLIM_ERR_ARG;
}

template <typename Fn>
faslim_status guarded(Fn&& fn)
{
    try {
        fn();
        return FASLIM_OK;
    } catch (const faslim::ConfigError& e) {
        return record_error(e, FASLIM_ERR_CONFIG);
    } catch (const faslim::IoError& e) {
        return record_error(e, FASLIM_ERR_IO);
    } catch (const std::exception& e) {
        return record_error(e, FASLIM_ERR_RUNTIME);
    }
}

}  // namespace

struct faslim_config {
    faslim::SystemConfig cfg;
    std::string serialized;  // storage for faslim_config_serialize
};

struct faslim_plan {
    faslim::ExperimentPlan plan;
};

struct faslim_result {
    faslim::ExperimentResult result;
    std::string summary;
    std::string trace;
};

extern "C" {

const char* faslim_last_error(void) { return g_last_error.c_str(); }

const char* faslim_version(void) { return "0.1.0"; }

faslim_status faslim_config_default(faslim_config** out)
{
    if (!out)
        return bad_arg("null output pointer");
    return guarded([&] { *out = new faslim_config{faslim::SystemConfig{}, {}}; });
}

faslim_status faslim_config_parse(const char* text, faslim_config** out)
{
    if (!out || !text)
        return bad_arg("null argument");
    return guarded([&] { *out = new faslim_config{faslim::load_config(text), {}}; });
}

faslim_status faslim_config_load_file(const char* path, faslim_config** out)
{
    if (!out || !path)
        return bad_arg("null argument");
    return guarded([&] { *out = new faslim_config{faslim::load_config_file(path), {}}; });
}

const char* faslim_config_serialize(faslim_config* cfg)
{
    if (!cfg)
        return "";
    try {
        cfg->serialized = faslim::serialize_config(cfg->cfg);
    } catch (...) {
        return "";
    }
    return cfg->serialized.c_str();
}

faslim_status faslim_config_set(faslim_config* cfg, const char* key, const char* value)
{
    if (!cfg || !key || !value)
        return bad_arg("null argument");
    return guarded([&] {
        // reuse the parser/validator by rewriting the serialized document
        faslim::SystemConfig base = cfg->cfg;
        std::string doc = faslim::serialize_config(base);
        const std::string needle = std::string(key) + " = ";
        const size_t at = doc.find(needle);
        if (at == std::string::npos)
            throw faslim::ConfigError(std::string("config: unknown key '") + key + "'");
        const size_t eol = doc.find('\n', at);
        doc = doc.substr(0, at) + needle + value + doc.substr(eol);
        cfg->cfg = faslim::load_config(doc);
    });
}

void faslim_config_free(faslim_config* cfg) { delete cfg; }

faslim_status faslim_plan_create(const char* kind, int drops, uint64_t seed, faslim_plan** out)
{
    if (!out || !kind)
        return bad_arg("null argument");
    return guarded([&] {
        faslim::ExperimentPlan plan;
        plan.kind = faslim::experiment_kind_from_string(kind);
        if (drops < 1)
            throw faslim::ConfigError("plan needs drops >= 1");
        plan.drops = drops;
        plan.seed = seed;
        *out = new faslim_plan{std::move(plan)};
    });
}

faslim_status faslim_plan_set_schemes(faslim_plan* plan, const char* schemes)
{
    if (!plan || !schemes)
        return bad_arg("null argument");
    return guarded([&] {
        std::vector<std::string> list;
        std::string token;
        for (const char* c = schemes;; ++c) {
            if (*c == ',' || *c == '\0') {
                if (!token.empty())
                    list.push_back(token);
                token.clear();
                if (*c == '\0')
                    break;
            } else if (*c != ' ') {
                token += *c;
            }
        }
        if (list.empty())
            throw faslim::ConfigError("scheme list is empty");
        for (const auto& name : list)
            faslim::baseline_kind_from_string(name);
        plan->plan.schemes = std::move(list);
    });
}

faslim_status faslim_plan_set_correlation(faslim_plan* plan, int enabled)
{
    if (!plan)
        return bad_arg("null plan");
    plan->plan.correlation = enabled != 0;
    return FASLIM_OK;
}

faslim_status faslim_plan_set_partial(faslim_plan* plan, double rho_fa, double rho_lm)
{
    if (!plan)
        return bad_arg("null plan");
    if (rho_fa < 0.0 || rho_fa > 1.0 || rho_lm < 0.0 || rho_lm > 1.0) {
        g_last_error = "partial fractions must lie in [0, 1]";
        return FASLIM_ERR_CONFIG;
    }
    plan->plan.rho_fa = rho_fa;
    plan->plan.rho_lm = rho_lm;
    return FASLIM_OK;
}

faslim_status faslim_plan_set_workers(faslim_plan* plan, int workers)
{
    if (!plan)
        return bad_arg("null plan");
    plan->plan.workers = workers;
    return FASLIM_OK;
}

faslim_status faslim_plan_set_timing(faslim_plan* plan, int enabled)
{
    if (!plan)
        return bad_arg("null plan");
    plan->plan.timing = enabled != 0;
    return FASLIM_OK;
}

faslim_status faslim_plan_set_ga_budget(faslim_plan* plan, int budget)
{
    if (!plan)
        return bad_arg("null plan");
    if (budget < 0) {
        g_last_error = "GA budget must be >= 0";
        return FASLIM_ERR_CONFIG;
    }
    plan->plan.ga_budget = budget;
    return FASLIM_OK;
}

void faslim_plan_free(faslim_plan* plan) { delete plan; }

faslim_status faslim_run_experiment(const faslim_config* cfg, const faslim_plan* plan,
                                    faslim_result** out)
{
    if (!cfg || !plan || !out)
        return bad_arg("null argument");
    return guarded([&] {
        auto* res = new faslim_result;
        try {
            res->result = faslim::run_experiment(plan->plan, cfg->cfg);
            res->summary = faslim::summary_csv(res->result);
            res->trace = res->result.trace.empty() ? std::string()
                                                   : faslim::trace_csv(res->result);
        } catch (...) {
            delete res;
            throw;
        }
        *out = res;
    });
}

const char* faslim_result_summary_csv(const faslim_result* result)
{
    return result ? result->summary.c_str() : "";
}

const char* faslim_result_trace_csv(const faslim_result* result)
{
    return result ? result->trace.c_str() : "";
}

faslim_status faslim_result_write(const faslim_result* result, const char* out_dir)
{
    if (!result || !out_dir)
        return bad_arg("null argument");
    return guarded([&] { faslim::emit_results(result->result, out_dir); });
}

void faslim_result_free(faslim_result* result) { delete result; }

}  // extern "C"
