#include "simulator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace sndiff {

using nlohmann::json;

std::string scheme_name(Scheme s) {
    return s == Scheme::EulerMaruyama ? "euler-maruyama" : "semi-implicit-linear";
}

Scheme scheme_from_name(const std::string& s) {
    if (s == "euler-maruyama") return Scheme::EulerMaruyama;
    if (s == "semi-implicit-linear") return Scheme::SemiImplicitLinear;
    throw std::invalid_argument("unknown scheme: " + s);
}

int SimConfig::steps() const {
    if (dt <= 0 || T < dt) throw std::invalid_argument("SimConfig: need dt > 0 and T >= dt");
    return static_cast<int>(std::llround(T / dt));
}

std::string SimConfig::to_json() const {
    json j;
    j["dt"] = dt;
    j["T"] = T;
    j["scheme"] = scheme_name(scheme);
    j["seed"] = seed;
    j["ensemble"] = ensemble;
    j["noise_off"] = noise_off;
    return j.dump();
}

SimConfig SimConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    SimConfig c;
    c.dt = j.value("dt", 1e-3);
    c.T = j.value("T", 1.0);
    c.scheme = scheme_from_name(j.value("scheme", std::string("semi-implicit-linear")));
    c.seed = j.value("seed", 0ULL);
    c.ensemble = j.value("ensemble", 1);
    c.noise_off = j.value("noise_off", false);
    return c;
}

double stiffness_number(const ModelSpec& spec, double dt) {
    const Vec rates = linear_decay_rates(spec);
    return rates.size() ? dt * rates.maxCoeff() : 0.0;
}

Vec step(const ModelSpec& spec, const Vec& x, double dt, const Vec& noise, Scheme scheme) {
    Vec next;
    const double amp = 1.0 / std::sqrt(spec.n);
    if (scheme == Scheme::EulerMaruyama) {
        next = x + dt * drift(spec, x) + amp * diffusion_apply(spec, x, noise);
    } else {
        if (spec.is_spde()) {
            const Vec rates = linear_decay_rates(spec);
            next = ((-dt * rates.array()).exp() * x.array()).matrix();
            next += dt * nonstiff_drift(spec, x) + amp * diffusion_apply(spec, x, noise);
        } else {
            // no stiff linear split for finite-dim models
            next = x + dt * drift(spec, x) + amp * diffusion_apply(spec, x, noise);
        }
    }
    if (!next.allFinite()) throw std::runtime_error("integration aborted: non-finite state");
    return next;
}

Path simulate_member(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg,
                     std::uint64_t index) {
    if (static_cast<int>(x0.size()) != spec.state_size())
        throw std::invalid_argument("simulate: initial state has wrong size");
    const int nsteps = cfg.steps();
    const double sqrt_dt = std::sqrt(cfg.dt);
    GaussianStream gs(substream_seed(cfg.seed, index));

    Path path;
    path.dt = cfg.dt;
    path.states.reserve(nsteps + 1);
    path.states.push_back(x0);

    Vec noise = Vec::Zero(spec.state_size());
    Vec x = x0;
    for (int s = 0; s < nsteps; ++s) {
        if (!cfg.noise_off)
            for (int i = 0; i < noise.size(); ++i) noise[i] = sqrt_dt * gs.normal();
        x = step(spec, x, cfg.dt, noise, cfg.scheme);
        path.states.push_back(x);
    }
    return path;
}

Path simulate_path(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg) {
    return simulate_member(spec, x0, cfg, 0);
}

EnsembleResult simulate_ensemble(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg,
                                 const std::function<double(const Path&)>& functional,
                                 int threads) {
    const int count = cfg.ensemble;
    EnsembleResult res;
    res.samples.assign(count, std::numeric_limits<double>::quiet_NaN());
    res.seeds.resize(count);
    std::vector<char> ok(count, 0);
    for (int i = 0; i < count; ++i) res.seeds[i] = substream_seed(cfg.seed, i);

    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));

    auto worker = [&](int first, int stride) {
        for (int i = first; i < count; i += stride) {
            try {
                const Path p = simulate_member(spec, x0, cfg, i);
                res.samples[i] = functional(p);
                ok[i] = 1;
            } catch (const std::exception&) {
                ok[i] = 0;
            }
        }
    };
    if (threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (auto& th : pool) th.join();
    }

    for (int i = 0; i < count; ++i) {
        if (!ok[i]) {
            res.samples[i] = std::numeric_limits<double>::quiet_NaN();
            res.aborted.push_back(i);
        }
    }
    return res;
}

std::vector<double> EnsembleResult::completed() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (double v : samples)
        if (std::isfinite(v)) out.push_back(v);
    return out;
}

} // namespace sndiff
