#include "semigroup.hpp"

#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace sndiff {

double TestFunctional::eval(const Vec& x) const {
    switch (kind) {
        case Kind::LinearClip:
            return std::clamp(p.dot(x), -clip, clip);
        case Kind::QuadClip:
            return std::max(-c * (x - center).squaredNorm(), -clip);
        case Kind::RadialBump:
            return amp * std::exp(-(x - center).squaredNorm() / width);
    }
    return 0.0;
}

Vec TestFunctional::grad(const Vec& x) const {
    switch (kind) {
        case Kind::LinearClip: {
            const double raw = p.dot(x);
            if (std::abs(raw) >= clip) return Vec::Zero(x.size());
            return p;
        }
        case Kind::QuadClip: {
            const double raw = -c * (x - center).squaredNorm();
            if (raw <= -clip) return Vec::Zero(x.size());
            return Vec(-2.0 * c * (x - center));
        }
        case Kind::RadialBump: {
            const double f = amp * std::exp(-(x - center).squaredNorm() / width);
            return Vec(-2.0 / width * f * (x - center));
        }
    }
    return Vec::Zero(x.size());
}

double TestFunctional::bound() const {
    if (kind == Kind::RadialBump) return std::abs(amp);
    return clip;
}

TestFunctional TestFunctional::linear_clip(Vec p, double clip) {
    TestFunctional f;
    f.kind = Kind::LinearClip;
    f.p = std::move(p);
    f.clip = clip;
    return f;
}

TestFunctional TestFunctional::quad_clip(Vec center, double c, double clip) {
    TestFunctional f;
    f.kind = Kind::QuadClip;
    f.center = std::move(center);
    f.c = c;
    f.clip = clip;
    return f;
}

TestFunctional TestFunctional::radial_bump(Vec center, double amp, double width) {
    TestFunctional f;
    f.kind = Kind::RadialBump;
    f.center = std::move(center);
    f.amp = amp;
    f.width = width;
    return f;
}

namespace {

// (1/n) log mean exp(n v_i), max subtracted.
double log_mean_exp_scaled(const std::vector<double>& v, double n) {
    const double vmax = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::exp(n * (x - vmax));
    return vmax + std::log(acc / v.size()) / n;
}

} // namespace

VnResult vn_estimate(const ModelSpec& spec, const Vec& x0, double T, const TestFunctional& f,
                     const SimConfig& sim, int jackknife_blocks) {
    if (T == 0.0) {
        VnResult res;
        res.value = f.eval(x0);
        res.completed = sim.ensemble;
        return res;
    }
    SimConfig cfg = sim;
    cfg.T = T;
    const auto ens = simulate_ensemble(spec, x0, cfg,
                                       [&](const Path& p) { return f.eval(p.states.back()); });
    const auto vals = ens.completed();
    if (vals.empty()) throw std::runtime_error("vn_estimate: all ensemble members aborted");
    if (vals.size() < 2) throw std::runtime_error("vn_estimate: degenerate single-sample ensemble");

    VnResult res;
    res.completed = static_cast<int>(vals.size());
    res.aborted = static_cast<int>(ens.aborted.size());
    res.value = log_mean_exp_scaled(vals, spec.n);

    // jackknife over contiguous blocks
    const int B = std::min<int>(jackknife_blocks, static_cast<int>(vals.size()));
    if (B >= 2) {
        std::vector<double> loo;
        loo.reserve(B);
        const size_t len = vals.size();
        for (int b = 0; b < B; ++b) {
            const size_t lo = len * b / B, hi = len * (b + 1) / B;
            std::vector<double> rest;
            rest.reserve(len - (hi - lo));
            rest.insert(rest.end(), vals.begin(), vals.begin() + lo);
            rest.insert(rest.end(), vals.begin() + hi, vals.end());
            loo.push_back(log_mean_exp_scaled(rest, spec.n));
        }
        double mean = 0.0;
        for (double v : loo) mean += v;
        mean /= B;
        double var = 0.0;
        for (double v : loo) var += (v - mean) * (v - mean);
        res.std_error = std::sqrt(var * (B - 1) / B);
    }
    return res;
}

VControlResult v_control(const ModelSpec& spec, const Vec& x0, double T, const TestFunctional& f,
                         int slices, const OptimOptions& opts) {
    const int N = slices;
    const int sz = static_cast<int>(x0.size());
    const double dt = T / N;

    // variables: nodes 1..N (terminal free)
    Vec z(static_cast<long>(N) * sz);
    for (int i = 1; i <= N; ++i) z.segment(static_cast<long>(i - 1) * sz, sz) = x0;

    auto unpack = [&](const Vec& zz) {
        std::vector<Vec> nodes(N + 1);
        nodes[0] = x0;
        for (int i = 1; i <= N; ++i) nodes[i] = zz.segment(static_cast<long>(i - 1) * sz, sz);
        return nodes;
    };

    auto fg = [&](const Vec& zz, Vec& g) {
        const auto nodes = unpack(zz);
        const double running = action_value(spec, nodes, dt);
        const auto gn = action_gradient(spec, nodes, dt);
        for (int i = 1; i <= N; ++i) g.segment(static_cast<long>(i - 1) * sz, sz) = gn[i];
        g.tail(sz) -= f.grad(nodes[N]);
        return running - f.eval(nodes[N]);
    };

    const BBResult opt = bb_minimize(fg, z, opts.max_iters, opts.grad_tol, opts.history);

    VControlResult res;
    res.converged = opt.converged;
    res.iterations = opt.iterations;
    res.path.dt = dt;
    res.path.states = unpack(opt.z);
    // certified lower bound: evaluate the achieved payoff
    res.value = f.eval(res.path.states.back()) - action_value(spec, res.path.states, dt);
    return res;
}

double Grid1D::interp(const Vec& values, double xq) const {
    if (xq <= a) return values[0];
    if (xq >= b) return values[points - 1];
    const double s = (xq - a) / spacing();
    const int i = std::min(static_cast<int>(s), points - 2);
    const double w = s - i;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

namespace {

ResolventResult value_iteration(const Vec& h, double alpha, const ModelSpec& spec,
                                const Grid1D& grid, const ResolventParams& params, double u_max) {
    if (spec.family != Family::FiniteDimFW || spec.fw.d != 1)
        throw std::invalid_argument("resolvent_1d: requires a 1-D finite-dim model");
    const double ds = params.ds_over_alpha * alpha;
    const double discount = std::exp(-ds / alpha);
    // exact discounted weight of one substep so constants are fixed points
    const double reward_w = 1.0 - discount;
    // transport step matched to the discounted weight: with this choice the
    // sweep fixed point reproduces the resolvent of linear-quadratic
    // problems exactly instead of carrying an O(ds/alpha) bias
    const double step = alpha * std::expm1(ds / alpha);

    const int nu = params.control_samples;
    std::vector<double> controls(nu);
    for (int i = 0; i < nu; ++i) controls[i] = -u_max + 2.0 * u_max * i / (nu - 1);

    Vec f = h;
    Vec next(grid.points);
    std::vector<int> best_u(grid.points, 0);
    ResolventResult res;
    Vec xv(1);
    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        for (int i = 0; i < grid.points; ++i) {
            xv[0] = grid.x(i);
            const double bx = spec.fw.b(xv)[0];
            const double sx = spec.fw.sigma(xv)(0, 0);
            double best = -std::numeric_limits<double>::infinity();
            int best_j = 0;
            for (int j = 0; j < nu; ++j) {
                const double u = controls[j];
                const double reward = reward_w * (h[i] - 0.5 * alpha * u * u);
                const double xn = grid.x(i) + step * (bx + sx * u);
                const double val = reward + discount * grid.interp(f, xn);
                if (val > best) {
                    best = val;
                    best_j = j;
                }
            }
            next[i] = best;
            best_u[i] = best_j;
        }
        const double diff = (next - f).lpNorm<Eigen::Infinity>();
        f = next;
        res.sweeps = sweep + 1;
        if (diff <= params.tol) {
            res.converged = true;
            break;
        }
    }
    for (int i = 0; i < grid.points; ++i)
        if (best_u[i] == 0 || best_u[i] == nu - 1) res.control_box_hit = true;
    res.values = f;
    return res;
}

} // namespace

ResolventResult resolvent_1d(const Vec& h, double alpha, const ModelSpec& spec,
                             const Grid1D& grid, const ResolventParams& params) {
    ResolventResult res = value_iteration(h, alpha, spec, grid, params, params.u_max);
    if (res.control_box_hit) {
        // widen once, then report if still on the boundary
        res = value_iteration(h, alpha, spec, grid, params, 2.0 * params.u_max);
    }
    return res;
}

IterateResult semigroup_iterate(const Vec& h, double t, int k, const ModelSpec& spec,
                                const Grid1D& grid, const ResolventParams& params) {
    const double alpha = t / k;
    IterateResult res;
    res.converged = true;
    Vec f = h;
    for (int i = 0; i < k; ++i) {
        const ResolventResult r = resolvent_1d(f, alpha, spec, grid, params);
        res.step_diffs.push_back((r.values - f).lpNorm<Eigen::Infinity>());
        res.converged = res.converged && r.converged;
        f = r.values;
    }
    res.values = f;
    return res;
}

RateBoundResult rate_from_semigroup(double t, double y, double x, const ModelSpec& spec,
                                    const Grid1D& grid, int resolvent_steps, int sweep_size,
                                    double p_max, double clip, const ResolventParams& params) {
    RateBoundResult res;
    res.bound = -std::numeric_limits<double>::infinity();

    auto consider = [&](const std::function<double(double)>& f, const std::string& family,
                        double param) {
        Vec hf(grid.points);
        for (int i = 0; i < grid.points; ++i) hf[i] = f(grid.x(i));
        const IterateResult it = semigroup_iterate(hf, t, resolvent_steps, spec, grid, params);
        const double val = f(y) - grid.interp(it.values, x);
        res.family_values.push_back(val);
        if (val > res.bound) {
            res.bound = val;
            res.best_family = family;
            res.best_param = param;
        }
    };

    for (int s = 0; s < sweep_size; ++s) {
        const double p = -p_max + 2.0 * p_max * s / (sweep_size - 1);
        consider([&](double z) { return std::clamp(p * z, -clip, clip); }, "linear-clip", p);
    }
    for (int s = 1; s <= sweep_size / 2; ++s) {
        const double c = p_max * s / (sweep_size / 2);
        consider([&](double z) { return std::max(-c * (z - y) * (z - y), -clip); }, "quad-clip", c);
    }
    return res;
}

} // namespace sndiff
