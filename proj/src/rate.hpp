#ifndef SNDIFF_RATE_HPP
#define SNDIFF_RATE_HPP

#include "simulator.hpp"

#include <string>
#include <vector>

namespace sndiff {

// Control reconstructed from a discrete path: B(x(t_i)) u(t_i) matches the
// finite-difference time derivative minus the drift at every node.
struct ControlPath {
    bool on_grid = false;        // multiplicative noise: nodes hold grid values
    std::vector<Vec> u;          // one control per path node
    std::vector<double> cost;    // squared L2 norm of u per node
};

ControlPath control_residual(const Path& path, const ModelSpec& spec);

struct ActionReport {
    double total = 0.0;
    std::vector<double> per_interval;   // trapezoid contribution per interval
    bool converged = true;
    int iterations = 0;
    std::string to_json() const;
};

// I0 is the initial cost of x(0); the integral part is the time-trapezoid of
// (1/2) ||u||^2 along the reconstructed control.
ActionReport action(const Path& path, const ModelSpec& spec, double i0 = 0.0);

struct OptimOptions {
    int max_iters = 5000;
    double grad_tol = 1e-6;     // on ||g|| / max(1, ||z||)
    int history = 8;            // nonmonotone backtracking window
};

struct MapResult {
    Path path;
    ActionReport report;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
};

// Endpoint-pinned minimizer of the discretized action over interior nodes,
// Barzilai-Borwein steps with nonmonotone backtracking. Requires noise with
// state-independent sigma. Initial path: linear interpolation unless a warm
// start is supplied.
MapResult minimize_action(const ModelSpec& spec, const Vec& x0, const Vec& x1, double T,
                          int slices, const OptimOptions& opts = {},
                          const Path* warm_start = nullptr);

// Discretized action and its analytic gradient with respect to the nodes
// (all nodes; callers pin what they need). Exposed for the mandatory
// finite-difference pre-flight check.
double action_value(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt);
std::vector<Vec> action_gradient(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt);

// max relative disagreement between the analytic gradient and central finite
// differences at `probes` random coordinate perturbations of the path.
double gradient_check(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt,
                      int probes, std::uint64_t seed);

} // namespace sndiff

#endif
