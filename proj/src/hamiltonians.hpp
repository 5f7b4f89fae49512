#ifndef SNDIFF_HAMILTONIANS_HPP
#define SNDIFF_HAMILTONIANS_HPP

#include "simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sndiff {

// Free energy of a truncated field: half the Dirichlet form plus the grid
// quadrature of the potential, E(x) = (1/2) sum lambda_k c_k^2 + int V(x).
double free_energy(const SpectralField& x, const Potential& pot);

// Exact gradient and Hessian action of the discrete free energy.
Vec free_energy_grad(const SpectralField& x, const Potential& pot);
Vec free_energy_hess_apply(const SpectralField& x, const Potential& pot, const Vec& v);

// Radially-structured test functions with analytic derivatives: a quadratic
// well (mu/2)||x - xi||^2 and the logarithmic free-energy function
// log(1 + E(x)/M^2) used by the containment bound.
struct RadialTestFn {
    enum class Kind { Quadratic, LogFreeEnergy };
    Kind kind = Kind::Quadratic;
    double mu = 1.0;
    Vec xi;
    double M = 1.0;
    Potential potential;
    int dim = 1, m = 1;

    double eval(const Vec& x) const;
    Vec grad(const Vec& x) const;
    Vec hess_apply(const Vec& x, const Vec& v) const;

    static RadialTestFn quadratic(double mu, Vec xi);
    static RadialTestFn log_free_energy(double M, Potential pot, int dim, int m);
};

// max relative disagreement between the analytic derivatives of f and
// central finite differences at random probes.
double radial_fn_check(const RadialTestFn& f, const Vec& x, int probes, std::uint64_t seed);

struct GeneratorValue {
    double drift_term = 0.0;     // <Df, drift(x)>
    double grad_sq_term = 0.0;   // (1/2) ||B*(x) Df||^2
    double trace_term = 0.0;     // (1/2n) sum_k <D^2f B e_k, B e_k>
    double total = 0.0;
};

// Exponentially transformed generator (1/n) e^{-nf} A_n e^{nf} evaluated by
// its expanded three-term form; the trace runs exactly over the retained
// basis directions.
GeneratorValue transformed_generator(const RadialTestFn& f, const Vec& x, const ModelSpec& spec);

struct LyapunovCheck {
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// Evaluates the transformed generator on the log-free-energy function with
// M = sup|sigma| and compares against the closed-form truncation bound
// 4^d pi^{2d} (1+m)^{4d} / (6n) + (m^{3d}/n) sup|V''|.
LyapunovCheck lyapunov_bound_check(const Vec& x, const ModelSpec& spec, double tol = 1e-8);

struct PoincareCheck {
    double lhs = 0.0;   // || x - mean(x) ||
    double rhs = 0.0;   // (1/(2 pi)) || grad x ||
    bool pass = false;
};

PoincareCheck poincare_check(const SpectralField& x);

struct ContainmentCell {
    double n = 0.0;
    int trials = 0;
    int exceed = 0;
    int aborted = 0;
    bool censored = false;   // too few exceedances for the fit
    double freq = 0.0;       // exceed/trials, or the 1/trials upper bound when zero
};

struct ContainmentResult {
    std::vector<ContainmentCell> cells;
    double slope = 0.0;           // least-squares slope of log freq against n
    double slope_stderr = 0.0;
    int fitted_cells = 0;
    bool monotone = false;        // frequencies nonincreasing in n
    std::string to_json() const;
};

// Exceedance experiment: fraction of ensemble paths whose running free
// energy ever exceeds c1 before time T, for each noise level in n_list.
// Cells with fewer than 5 exceedances are censored out of the slope fit.
ContainmentResult containment_experiment(const ModelSpec& base, const Vec& x0, double c1,
                                         double T, const std::vector<double>& n_list,
                                         int ensemble, const SimConfig& sim_template);

} // namespace sndiff

#endif
