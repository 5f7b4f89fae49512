#ifndef SNDIFF_HARNESS_HPP
#define SNDIFF_HARNESS_HPP

#include "models.hpp"
#include "simulator.hpp"

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace sndiff {

inline constexpr const char* kSchemaVersion = "sndiff-config-v1";

// One experiment invocation: which experiment, the model, simulation
// settings, experiment-specific parameters, and where to write results.
struct ExperimentConfig {
    std::string experiment;   // simulate | ldp-slope | map | semigroup-compare |
                              // resolvent-iterate | containment | tataru-suite |
                              // dissipativity-suite
    ModelSpec model;
    SimConfig sim;
    nlohmann::json params;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// FNV-1a over the canonical JSON form; embedded in every output file.
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int points = 0;
};

SlopeFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

struct LdpSlopeResult {
    std::vector<double> n_values;
    std::vector<int> trials;
    std::vector<int> hits;
    std::vector<bool> censored;
    SlopeFit fit;              // log freq against n; -slope estimates the cost
    double action_infimum = 0.0;   // delta-net infimum of the minimized action
    double rel_error = 0.0;        // |(-slope) - inf| / inf
    bool conclusive = false;
};

// Rare-event slope experiment: frequency of ||X(T) - x1|| <= delta per noise
// level, fitted against the action infimum over a 9-point segment net of
// the target ball. `ensembles` has one entry per noise level (rarer cells
// need more samples) or a single broadcast entry.
LdpSlopeResult ldp_slope(const ModelSpec& model, const Vec& x0, const Vec& x1, double delta,
                         double T, const std::vector<double>& n_list,
                         const std::vector<int>& ensembles, const SimConfig& sim_template,
                         int slices);

// Runs the configured experiment, writes summary.json plus CSV tables under
// cfg.out_dir, and returns a process exit status (0 = all checks passed).
int run_experiment(const ExperimentConfig& cfg, std::string* summary_out = nullptr);

} // namespace sndiff

#endif
