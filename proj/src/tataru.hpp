#ifndef SNDIFF_TATARU_HPP
#define SNDIFF_TATARU_HPP

#include "spectral.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sndiff {

// Contraction semigroup S(t) acting on plain coefficient vectors. Three
// concrete kinds: per-mode exponential decay, matrix exponential of a
// dissipative matrix, and a user-supplied map.
struct SemigroupHandle {
    enum class Kind { SpectralLinear, FiniteDimLinear, ExplicitMap };
    Kind kind = Kind::SpectralLinear;
    Vec rates;                                   // nonnegative per-mode decay
    Mat A;                                       // dissipative generator matrix
    std::function<Vec(double, const Vec&)> map;  // S(t) x

    Vec apply(double t, const Vec& x) const;

    // heat decay on the truncated torus basis: rate lambda_k per mode
    static SemigroupHandle spectral_heat(int dim, int m);
    // scalar x -> e^{-rate t} x (state size 1)
    static SemigroupHandle scalar_decay(double rate = 1.0);
    static SemigroupHandle matrix(Mat a);
    static SemigroupHandle explicit_map(std::function<Vec(double, const Vec&)> f);
};

// Smoothed square root: sqrt(r) for r >= eps, quadratic extension below
// sqrt(eps) + (r-eps)/(2 sqrt(eps)) - (r-eps)^2/(8 eps sqrt(eps)) with C^1
// matching at r = eps.
double phi_eps(double r, double eps);
double phi_eps_p(double r, double eps);
double phi_eps_pp(double r, double eps);

struct ScalarMin {
    double value = 0.0;
    double argmin = 0.0;
};

// inf over t >= 0 of t + ||x - S(t) y||; minimizer lies in [0, ||x-y||].
// Dense scan plus golden-section refinement (t-tolerance 1e-10).
ScalarMin tataru_distance(const Vec& x, const Vec& y, const SemigroupHandle& S);

// inf over t >= 0 of t + phi_eps(||x - S(t) y||^2); bracket [0, ||x-y|| + sqrt(eps)].
ScalarMin h_eps(const Vec& x, const Vec& y, double eps, const SemigroupHandle& S);

// Soft-min relaxation -(1/a_n) log int_0^inf exp(-a_n (t + phi_eps(...))) dt,
// by composite Gauss-Legendre in the log domain.
double h_n_eps(const Vec& x, const Vec& y, double eps, double a_n, const SemigroupHandle& S);

// Closed-form gradient: the exp(-a_n g(t))-weighted average of
// phi_eps'(||x - S(t)y||^2) * 2 (x - S(t) y).
Vec grad_h_n_eps(const Vec& x, const Vec& y, double eps, double a_n, const SemigroupHandle& S);

struct QuotientReport {
    double max_quotient = 0.0;
    double worst_r = 0.0;
    bool pass = false;
};

// Difference quotients (d_C(S(r)x, y) - d_C(x, y)) / r <= 1 for every listed r.
QuotientReport directional_bound_check(const Vec& x, const Vec& y, const SemigroupHandle& S,
                                       const std::vector<double>& r_list, double tol = 1e-8);

struct SuiteReport {
    std::string suite;
    int samples = 0;
    double max_violation = 0.0;
    bool pass = false;
};

std::string suite_reports_to_json(const std::vector<SuiteReport>& reports);

// Standing property suites for one semigroup: contraction / identity /
// composition of S itself; the smoothed-sqrt slope bound; gradient norm of
// the soft-min; Lipschitz joint bound; difference quotients; the norm-gap
// lower clamp; and uniform closeness of h_eps to the distance.
std::vector<SuiteReport> run_tataru_suite(const SemigroupHandle& S, int state_size, int samples,
                                          std::uint64_t seed, double tol = 1e-8);

} // namespace sndiff

#endif
