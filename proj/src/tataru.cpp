#include "tataru.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace sndiff {

using nlohmann::json;

Vec SemigroupHandle::apply(double t, const Vec& x) const {
    switch (kind) {
        case Kind::SpectralLinear:
            return ((-t * rates.array()).exp() * x.array()).matrix();
        case Kind::FiniteDimLinear:
            return (t * A).exp() * x;
        case Kind::ExplicitMap:
            return map(t, x);
    }
    return x;
}

SemigroupHandle SemigroupHandle::spectral_heat(int dim, int m) {
    SemigroupHandle s;
    s.kind = Kind::SpectralLinear;
    const int sz = tensor_size(dim, m);
    s.rates.resize(sz);
    for (int i = 0; i < sz; ++i) s.rates[i] = laplace_eigenvalue(i, dim, m);
    return s;
}

SemigroupHandle SemigroupHandle::scalar_decay(double rate) {
    SemigroupHandle s;
    s.kind = Kind::SpectralLinear;
    s.rates = Vec::Constant(1, rate);
    return s;
}

SemigroupHandle SemigroupHandle::matrix(Mat a) {
    SemigroupHandle s;
    s.kind = Kind::FiniteDimLinear;
    s.A = std::move(a);
    return s;
}

SemigroupHandle SemigroupHandle::explicit_map(std::function<Vec(double, const Vec&)> f) {
    SemigroupHandle s;
    s.kind = Kind::ExplicitMap;
    s.map = std::move(f);
    return s;
}

double phi_eps(double r, double eps) {
    if (r < 0) throw std::invalid_argument("phi_eps: negative argument");
    if (r >= eps) return std::sqrt(r);
    const double se = std::sqrt(eps), d = r - eps;
    return se + d / (2 * se) - d * d / (8 * eps * se);
}

double phi_eps_p(double r, double eps) {
    if (r < 0) throw std::invalid_argument("phi_eps: negative argument");
    if (r >= eps) return 0.5 / std::sqrt(r);
    const double se = std::sqrt(eps);
    return 1.0 / (2 * se) - (r - eps) / (4 * eps * se);
}

double phi_eps_pp(double r, double eps) {
    if (r < 0) throw std::invalid_argument("phi_eps: negative argument");
    if (r >= eps) return -0.25 / (r * std::sqrt(r));
    return -1.0 / (4 * eps * std::sqrt(eps));
}

namespace {

// coarse scan plus golden-section refinement on [lo, hi]
ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          double t_tol = 1e-10, int scan_points = 256) {
    ScalarMin best{f(lo), lo};
    if (hi <= lo) return best;

    int best_i = 0;
    for (int i = 1; i <= scan_points; ++i) {
        const double t = lo + (hi - lo) * i / scan_points;
        const double v = f(t);
        if (v < best.value) {
            best = {v, t};
            best_i = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best_i - 1) / scan_points;
    double b = lo + (hi - lo) * std::min(scan_points, best_i + 1) / scan_points;

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > t_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    const double t = fc < fd ? c : d;
    const double v = std::min(fc, fd);
    if (v < best.value) best = {v, t};
    return best;
}

// 8-point Gauss-Legendre on [-1, 1]
constexpr double kGlNode[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
// The soft-min integrand is largest near the distance minimizer, which lies
// in [0, ||x-y||]; past that point the exponent grows at unit rate, so the
// extra 40/a_n makes the truncated tail < 1e-16 of the integral.
double soft_min_horizon(const Vec& x, const Vec& y, double eps, double a_n) {
    return (x - y).norm() + std::sqrt(eps) + 40.0 / a_n;
}

double gl8(const std::function<double(double)>& f, double lo, double hi) {
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int q = 0; q < 8; ++q) acc += kGlWeight[q] * f(c + r * kGlNode[q]);
    return r * acc;
}

// Adaptive panel list for exp(-a(g - gref)) on [0, T].  The integrand can be
// sharply peaked (width ~ 1/sqrt(a_n / eps^{3/2})) while T is O(||x - y||),
// so a fixed grid cannot resolve it; panels are split until an 8-point
// Gauss-Legendre estimate agrees with its two-half refinement.  Value and
// gradient both need the integral to ~1e-12 relative so that the softmax
// ratio formula matches finite differences of the implementation.
void adapt_panels(const std::function<double(double)>& f, double lo, double hi,
                  double tol_abs, int depth, std::vector<std::pair<double, double>>& out) {
    const double mid = 0.5 * (lo + hi);
    const double whole = gl8(f, lo, hi);
    const double halves = gl8(f, lo, mid) + gl8(f, mid, hi);
    // the relative term accepts panels whose estimates already agree to
    // roundoff; without it the halved budget can fall below the noise in
    // (whole - halves) and the recursion runs to the depth cap
    const double noise = 1e-14 * (std::abs(whole) + std::abs(halves));
    if (depth >= 40 || std::abs(whole - halves) <= tol_abs + noise) {
        out.emplace_back(lo, mid);
        out.emplace_back(mid, hi);
        return;
    }
    adapt_panels(f, lo, mid, 0.5 * tol_abs, depth + 1, out);
    adapt_panels(f, mid, hi, 0.5 * tol_abs, depth + 1, out);
}

struct SoftMinQuad {
    double gref = 0.0;
    std::vector<std::pair<double, double>> panels;
};

SoftMinQuad soft_min_quad(const std::function<double(double)>& g, double a_n, double T) {
    SoftMinQuad q;
    // coarse scan for the reference level that keeps the exponentials bounded
    q.gref = std::numeric_limits<double>::infinity();
    double t_star = 0.0;
    for (int i = 0; i <= 512; ++i) {
        const double t = T * i / 512.0, v = g(t);
        if (v < q.gref) {
            q.gref = v;
            t_star = t;
        }
    }
    auto f = [&](double t) { return std::exp(-a_n * (g(t) - q.gref)); };
    // guaranteed-positive lower bound on the integral: f(t_star) = 1, and f
    // stays above 1/e on a bracket where g - gref <= 1/a_n.  Without this
    // floor a peak narrower than the coarse panels would calibrate the
    // tolerance from an underflowed total and the refinement would explode.
    double w = T / 512.0;
    auto above = [&](double t) {
        return t < 0.0 || t > T || g(t) - q.gref > 1.0 / a_n;
    };
    while (w > 1e-300 && above(t_star - w) && above(t_star + w)) w *= 0.5;
    const double floor = w * std::exp(-1.0);
    double total = 0.0;
    for (int p = 0; p < 64; ++p) total += gl8(f, T * p / 64.0, T * (p + 1) / 64.0);
    // two passes: the first total calibrates the absolute tolerance
    for (int pass = 0; pass < 2; ++pass) {
        q.panels.clear();
        const double tol = 1e-13 * std::max(total, floor);
        for (int p = 0; p < 64; ++p)
            adapt_panels(f, T * p / 64.0, T * (p + 1) / 64.0, tol / 64.0, 0, q.panels);
        double refined = 0.0;
        for (const auto& [lo, hi] : q.panels) refined += gl8(f, lo, hi);
        if (refined <= 1.5 * total) break;   // first estimate was already sound
        total = refined;
    }
    return q;
}

} // namespace

ScalarMin tataru_distance(const Vec& x, const Vec& y, const SemigroupHandle& S) {
    const double hi = (x - y).norm();
    return minimize_scalar([&](double t) { return t + (x - S.apply(t, y)).norm(); }, 0.0, hi);
}

ScalarMin h_eps(const Vec& x, const Vec& y, double eps, const SemigroupHandle& S) {
    const double hi = (x - y).norm() + std::sqrt(eps);
    return minimize_scalar(
        [&](double t) { return t + phi_eps((x - S.apply(t, y)).squaredNorm(), eps); }, 0.0, hi);
}

double h_n_eps(const Vec& x, const Vec& y, double eps, double a_n, const SemigroupHandle& S) {
    const double T = soft_min_horizon(x, y, eps, a_n);
    auto g = [&](double t) { return t + phi_eps((x - S.apply(t, y)).squaredNorm(), eps); };
    const SoftMinQuad quad = soft_min_quad(g, a_n, T);
    double acc = 0.0;
    for (const auto& [lo, hi] : quad.panels)
        acc += gl8([&](double t) { return std::exp(-a_n * (g(t) - quad.gref)); }, lo, hi);
    return quad.gref - std::log(acc) / a_n;
}

Vec grad_h_n_eps(const Vec& x, const Vec& y, double eps, double a_n, const SemigroupHandle& S) {
    const double T = soft_min_horizon(x, y, eps, a_n);
    auto g = [&](double t) { return t + phi_eps((x - S.apply(t, y)).squaredNorm(), eps); };
    const SoftMinQuad quad = soft_min_quad(g, a_n, T);
    double denom = 0.0;
    Vec num = Vec::Zero(x.size());
    for (const auto& [lo, hi] : quad.panels) {
        const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        for (int q = 0; q < 8; ++q) {
            const double t = c + r * kGlNode[q];
            const Vec diff = x - S.apply(t, y);
            const double r2 = diff.squaredNorm();
            const double wt =
                r * kGlWeight[q] * std::exp(-a_n * (t + phi_eps(r2, eps) - quad.gref));
            denom += wt;
            num += wt * 2.0 * phi_eps_p(r2, eps) * diff;
        }
    }
    return num / denom;
}

QuotientReport directional_bound_check(const Vec& x, const Vec& y, const SemigroupHandle& S,
                                       const std::vector<double>& r_list, double tol) {
    QuotientReport rep;
    rep.max_quotient = -std::numeric_limits<double>::infinity();
    const ScalarMin base_min = tataru_distance(x, y, S);
    const double base = base_min.value;
    for (double r : r_list) {
        const Vec xr = S.apply(r, x);
        // the shifted argmin is a feasible point; including it keeps the
        // optimizer gap out of the difference quotient
        const double shifted_t = base_min.argmin + r;
        const double candidate = shifted_t + (xr - S.apply(shifted_t, y)).norm();
        const double top = std::min(tataru_distance(xr, y, S).value, candidate);
        const double q = (top - base) / r;
        if (q > rep.max_quotient) {
            rep.max_quotient = q;
            rep.worst_r = r;
        }
    }
    rep.pass = rep.max_quotient <= 1.0 + tol;
    return rep;
}

std::string suite_reports_to_json(const std::vector<SuiteReport>& reports) {
    json j = json::array();
    for (const auto& r : reports) {
        json e;
        e["suite"] = r.suite;
        e["samples"] = r.samples;
        e["max_violation"] = r.max_violation;
        e["pass"] = r.pass;
        j.push_back(e);
    }
    return j.dump(2);
}

std::vector<SuiteReport> run_tataru_suite(const SemigroupHandle& S, int state_size, int samples,
                                          std::uint64_t seed, double tol) {
    std::vector<SuiteReport> out;
    GaussianStream gs(seed);
    auto rand_vec = [&](double scale) {
        Vec v(state_size);
        for (int i = 0; i < state_size; ++i) v[i] = scale * gs.normal();
        return v;
    };
    auto record = [&](const std::string& name, int count, double violation, double pass_tol) {
        out.push_back({name, count, violation, violation <= pass_tol});
    };

    {   // semigroup structure: contraction, identity at t=0, fixed zero, composition
        double vc = 0, vi = 0, vz = 0, vs = 0;
        SplitMix64 su(substream_seed(seed, 1));
        for (int i = 0; i < samples; ++i) {
            const Vec x = rand_vec(1.0), y = rand_vec(1.0);
            const double t = 5.0 * su.uniform01(), s = 5.0 * su.uniform01();
            vc = std::max(vc, (S.apply(t, x) - S.apply(t, y)).norm() - (x - y).norm());
            vi = std::max(vi, (S.apply(0.0, x) - x).norm());
            vz = std::max(vz, S.apply(t, Vec::Zero(state_size)).norm());
            vs = std::max(vs, (S.apply(s, S.apply(t, x)) - S.apply(s + t, x)).norm());
        }
        record("contraction", samples, vc, tol);
        record("identity-at-zero", samples, vi, 1e-12);
        record("zero-fixed-point", samples, vz, 1e-12);
        record("composition", samples, vs, 1e-10);
    }

    {   // slope of the smoothed square root: 0 <= r phi'(r^2) <= 1/2
        double v = 0;
        int count = 0;
        for (double eps : {1e-1, 1e-2, 1e-3})
            for (int i = 0; i <= 4000; ++i) {
                const double r = 10.0 * i / 4000;
                const double s = r * phi_eps_p(r * r, eps);
                v = std::max({v, s - 0.5, -s});
                ++count;
            }
        record("smoothed-sqrt-slope", count, v, 1e-12);
    }

    {   // gradient norm of the soft-min is at most 1
        double v = 0;
        const double eps = 1e-2;
        for (int i = 0; i < samples; ++i) {
            const Vec x = rand_vec(1.0), y = rand_vec(1.0);
            for (double a_n : {10.0, 100.0})
                v = std::max(v, grad_h_n_eps(x, y, eps, a_n, S).norm() - 1.0);
        }
        record("soft-min-gradient-norm", samples, v, tol);
    }

    {   // joint Lipschitz bound of the distance
        double v = 0;
        for (int i = 0; i < samples; ++i) {
            const Vec x = rand_vec(1.0), y = rand_vec(1.0);
            const Vec xh = x + rand_vec(0.3), yh = y + rand_vec(0.3);
            const double lhs =
                std::abs(tataru_distance(x, y, S).value - tataru_distance(xh, yh, S).value);
            v = std::max(v, lhs - (x - xh).norm() - (y - yh).norm());
        }
        record("distance-lipschitz", samples, v, tol);
    }

    {   // difference quotients along the flow are at most 1 for every step
        double v = 0;
        const std::vector<double> rs{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
        for (int i = 0; i < samples; ++i) {
            const Vec x = rand_vec(1.0), y = rand_vec(1.0);
            v = std::max(v, directional_bound_check(x, y, S, rs, tol).max_quotient - 1.0);
        }
        record("flow-difference-quotient", samples, v, tol);
    }

    {   // norm-gap clamp: h_{n,eps}(x) >= c when ||x|| >= ||y|| + c
        double v = 0;
        const double c = 2.0, eps = 1e-2, a_n = 10.0;
        SplitMix64 su(substream_seed(seed, 2));
        for (int i = 0; i < samples; ++i) {
            const Vec y = rand_vec(1.0);
            Vec x = rand_vec(1.0);
            if (x.norm() == 0.0) x[0] = 1.0;
            x *= (y.norm() + c + su.uniform01()) / x.norm();
            v = std::max(v, c - h_n_eps(x, y, eps, a_n, S));
        }
        record("norm-gap-clamp", samples, v, tol);
    }

    {   // uniform closeness of the smoothed distance to the distance
        double v = 0;
        const double eps = 1e-2, margin = 0.375 * std::sqrt(eps);
        for (int i = 0; i < samples; ++i) {
            const Vec x = rand_vec(1.0), y = rand_vec(1.0);
            const double gap =
                std::abs(h_eps(x, y, eps, S).value - tataru_distance(x, y, S).value);
            v = std::max(v, gap - margin);
        }
        record("smoothed-distance-gap", samples, v, tol);
    }

    return out;
}

} // namespace sndiff
