#ifndef SNDIFF_SEMIGROUP_HPP
#define SNDIFF_SEMIGROUP_HPP

#include "rate.hpp"

#include <string>
#include <vector>

namespace sndiff {

// Bounded test functionals entering exponents scaled by n; clipping keeps
// exp(n f) finite. Subgradient is zero where the clip is active.
struct TestFunctional {
    enum class Kind { LinearClip, QuadClip, RadialBump };
    Kind kind = Kind::LinearClip;
    Vec p;           // linear direction
    Vec center;      // quadratic / radial center
    double c = 1.0;      // quadratic curvature
    double clip = 1.0;   // sup-norm bound
    double width = 1.0;  // radial bump width
    double amp = 1.0;    // radial bump amplitude

    double eval(const Vec& x) const;
    Vec grad(const Vec& x) const;
    double bound() const;

    static TestFunctional linear_clip(Vec p, double clip);
    static TestFunctional quad_clip(Vec center, double c, double clip);
    static TestFunctional radial_bump(Vec center, double amp, double width);
};

struct VnResult {
    double value = 0.0;        // (1/n) log mean exp(n f(X(T)))
    double std_error = 0.0;    // jackknife proxy over blocks
    int completed = 0;
    int aborted = 0;
};

// Monte Carlo log-moment estimate, log-sum-exp in the exponent scale.
VnResult vn_estimate(const ModelSpec& spec, const Vec& x0, double T, const TestFunctional& f,
                     const SimConfig& sim, int jackknife_blocks = 10);

struct VControlResult {
    double value = 0.0;        // certified lower bound on the control supremum
    Path path;
    bool converged = false;
    int iterations = 0;
};

// sup over controlled paths from x0 of f(x(T)) - (1/2) integral ||u||^2,
// free terminal point, same discretization machinery as minimize_action.
VControlResult v_control(const ModelSpec& spec, const Vec& x0, double T, const TestFunctional& f,
                         int slices, const OptimOptions& opts = {});

struct Grid1D {
    double a = -1.0, b = 1.0;
    int points = 65;

    double spacing() const { return (b - a) / (points - 1); }
    double x(int i) const { return a + spacing() * i; }
    // piecewise-linear interpolation with constant extrapolation
    double interp(const Vec& values, double xq) const;
};

struct ResolventParams {
    double ds_over_alpha = 0.125;   // semi-Lagrangian substep / alpha
    double u_max = 8.0;
    int control_samples = 129;
    double tol = 1e-8;              // sup-norm fixed point tolerance
    int max_sweeps = 20000;
};

struct ResolventResult {
    Vec values;
    int sweeps = 0;
    bool control_box_hit = false;   // optimal control on the widened box boundary
    bool converged = false;
};

// Discounted deterministic control problem (I - alpha H)^{-1} h on a 1-D
// grid by semi-Lagrangian value iteration. Widens the control box once if
// the maximizer lands on its boundary.
ResolventResult resolvent_1d(const Vec& h, double alpha, const ModelSpec& spec,
                             const Grid1D& grid, const ResolventParams& params = {});

struct IterateResult {
    Vec values;
    std::vector<double> step_diffs;   // sup-norm change per resolvent application
    bool converged = false;
};

// k-fold resolvent iteration with alpha = t/k.
IterateResult semigroup_iterate(const Vec& h, double t, int k, const ModelSpec& spec,
                                const Grid1D& grid, const ResolventParams& params = {});

struct RateBoundResult {
    double bound = 0.0;          // max over the family of f(y) - V(t)f(x)
    std::string best_family;
    double best_param = 0.0;
    std::vector<double> family_values;
};

// Lower bound on the transition cost from x to y in time t obtained by
// sweeping a parametric family of clipped test functions; a larger sweep
// never decreases the bound.
RateBoundResult rate_from_semigroup(double t, double y, double x, const ModelSpec& spec,
                                    const Grid1D& grid, int resolvent_steps = 32,
                                    int sweep_size = 17, double p_max = 4.0,
                                    double clip = 16.0,
                                    const ResolventParams& params = {});

} // namespace sndiff

#endif
