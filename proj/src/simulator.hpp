#ifndef SNDIFF_SIMULATOR_HPP
#define SNDIFF_SIMULATOR_HPP

#include "models.hpp"
#include "rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sndiff {

enum class Scheme { EulerMaruyama, SemiImplicitLinear };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& s);

struct SimConfig {
    double dt = 1e-3;
    double T = 1.0;
    Scheme scheme = Scheme::SemiImplicitLinear;
    std::uint64_t seed = 0;
    int ensemble = 1;
    bool noise_off = false;   // deterministic flow

    int steps() const;
    std::string to_json() const;
    static SimConfig from_json(const std::string& text);
};

struct Path {
    double dt = 0.0;
    std::vector<Vec> states;     // N+1 nodes, uniform grid t_i = i dt

    int intervals() const { return static_cast<int>(states.size()) - 1; }
    double time(int i) const { return dt * i; }
    double horizon() const { return dt * intervals(); }
};

// One scheme step. `noise` holds one N(0, dt) increment per retained mode
// (already scaled by sqrt(dt)); pass a zero vector for the deterministic map.
// Throws on non-finite output.
Vec step(const ModelSpec& spec, const Vec& x, double dt, const Vec& noise, Scheme scheme);

// Deterministic given cfg.seed; states stay in the truncated space.
Path simulate_path(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg);

// Path with the noise stream of ensemble member `index` under cfg.seed.
Path simulate_member(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg,
                     std::uint64_t index);

struct EnsembleResult {
    std::vector<double> samples;          // one per member; NaN marks an abort
    std::vector<std::uint64_t> aborted;   // members that hit a non-finite state
    std::vector<std::uint64_t> seeds;     // per-member derived stream seeds

    std::vector<double> completed() const;
};

// Applies `functional` to each member path. Members run concurrently; the
// per-member stream depends only on (seed, index), so results are
// independent of thread count.
EnsembleResult simulate_ensemble(const ModelSpec& spec, const Vec& x0, const SimConfig& cfg,
                                 const std::function<double(const Path&)>& functional,
                                 int threads = 0);

// Explicit-scheme stability indicator: dt * (stiffest linear rate).
double stiffness_number(const ModelSpec& spec, double dt);

} // namespace sndiff

#endif
