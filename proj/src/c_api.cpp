#include "sndiff.h"

#include "harness.hpp"
#include "rate.hpp"
#include "simulator.hpp"

#include <cstring>
#include <new>
#include <string>

using namespace sndiff;

struct sn_model {
    ModelSpec spec;
};

struct sn_path {
    Path path;
};

namespace {

thread_local std::string g_last_error;

sn_status fail(sn_status st, const char* what) {
    g_last_error = what;
    return st;
}

template <typename F>
sn_status guarded(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        return fail(SN_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(SN_ERR_RUNTIME, e.what());
    }
}

} // namespace

extern "C" {

const char* sn_version(void) { return "1.0.0"; }

const char* sn_rng_id(void) { return kRngId; }

const char* sn_last_error(void) { return g_last_error.c_str(); }

sn_status sn_model_create(const char* model_json, sn_model** out) {
    if (!model_json || !out) return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* m = new sn_model{model_from_json(model_json)};
        const std::string diag = validate_model(m->spec);
        if (!diag.empty()) {
            delete m;
            return fail(SN_ERR_INVALID_ARGUMENT, diag.c_str());
        }
        *out = m;
        return SN_OK;
    });
}

void sn_model_free(sn_model* model) { delete model; }

int sn_model_state_size(const sn_model* model) {
    return model ? model->spec.state_size() : 0;
}

sn_status sn_simulate(const sn_model* model, const double* x0, size_t x0_len,
                      const char* sim_json, sn_path** out) {
    if (!model || !x0 || !sim_json || !out)
        return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const SimConfig cfg = SimConfig::from_json(sim_json);
        Vec v = Eigen::Map<const Vec>(x0, static_cast<long>(x0_len));
        *out = new sn_path{simulate_path(model->spec, v, cfg)};
        return SN_OK;
    });
}

void sn_path_free(sn_path* path) { delete path; }

int sn_path_nodes(const sn_path* path) {
    return path ? static_cast<int>(path->path.states.size()) : 0;
}

int sn_path_state_size(const sn_path* path) {
    return path && !path->path.states.empty() ? static_cast<int>(path->path.states[0].size())
                                              : 0;
}

double sn_path_dt(const sn_path* path) { return path ? path->path.dt : 0.0; }

sn_status sn_path_state(const sn_path* path, int node, double* out, size_t out_len) {
    if (!path || !out) return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    if (node < 0 || node >= static_cast<int>(path->path.states.size()))
        return fail(SN_ERR_INVALID_ARGUMENT, "node index out of range");
    const Vec& s = path->path.states[node];
    if (out_len < static_cast<size_t>(s.size()))
        return fail(SN_ERR_INVALID_ARGUMENT, "output buffer too small");
    std::memcpy(out, s.data(), sizeof(double) * s.size());
    return SN_OK;
}

sn_status sn_action(const sn_model* model, const sn_path* path, double* out) {
    if (!model || !path || !out) return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = action(path->path, model->spec).total;
        return SN_OK;
    });
}

sn_status sn_minimize_action(const sn_model* model, const double* x0, const double* x1,
                             size_t len, double horizon, int slices, sn_path** path_out,
                             double* action_out) {
    if (!model || !x0 || !x1) return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const Vec a = Eigen::Map<const Vec>(x0, static_cast<long>(len));
        const Vec b = Eigen::Map<const Vec>(x1, static_cast<long>(len));
        MapResult r = minimize_action(model->spec, a, b, horizon, slices);
        if (action_out) *action_out = r.report.total;
        if (path_out) *path_out = new sn_path{std::move(r.path)};
        return SN_OK;
    });
}

sn_status sn_run_experiment(const char* config_json, int* exit_status, char** summary_json) {
    if (!config_json || !exit_status) return fail(SN_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const ExperimentConfig cfg = config_from_json(config_json);
        std::string summary;
        *exit_status = run_experiment(cfg, summary_json ? &summary : nullptr);
        if (summary_json) {
            *summary_json = static_cast<char*>(::operator new(summary.size() + 1));
            std::memcpy(*summary_json, summary.c_str(), summary.size() + 1);
        }
        return SN_OK;
    });
}

void sn_string_free(char* s) { ::operator delete(s); }

} // extern "C"
