#include "rate.hpp"

#include "optim.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace sndiff {

namespace {

constexpr double kSigmaFloor = 1e-8;

// Second-order time-derivative stencil at node i of an (N+1)-node path.
Vec time_derivative(const std::vector<Vec>& x, int i, double h) {
    const int N = static_cast<int>(x.size()) - 1;
    if (i == 0) return (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
    if (i == N) return (3.0 * x[N] - 4.0 * x[N - 1] + x[N - 2]) / (2.0 * h);
    return (x[i + 1] - x[i - 1]) / (2.0 * h);
}

double trapezoid_weight(int i, int N, double h) {
    return (i == 0 || i == N) ? 0.5 * h : h;
}

bool sigma_is_state_independent(const ModelSpec& spec) {
    if (spec.family == Family::FiniteDimFW) return spec.fw.sigma_state_independent;
    return spec.noise.kind == Noise::Kind::AdditiveIdentity || spec.noise.state_independent;
}

// Constant scalar sigma of an SPDE model (1 for additive noise).
double spde_const_sigma(const ModelSpec& spec) {
    if (spec.noise.kind == Noise::Kind::AdditiveIdentity) return 1.0;
    return spec.noise.phi(0.0, std::vector<double>(std::max<size_t>(spec.noise.probes.size(), 1), 0.0));
}

} // namespace

ControlPath control_residual(const Path& path, const ModelSpec& spec) {
    const int N = path.intervals();
    if (N < 2) throw std::invalid_argument("control_residual: need at least 3 path nodes");
    ControlPath cp;
    cp.u.resize(N + 1);
    cp.cost.resize(N + 1);

    Eigen::PartialPivLU<Mat> lu;
    const bool fw = spec.family == Family::FiniteDimFW;
    const bool multiplicative =
        !fw && spec.noise.kind == Noise::Kind::MultiplicativeAC && !spec.noise.state_independent;
    cp.on_grid = multiplicative;

    for (int i = 0; i <= N; ++i) {
        const Vec& x = path.states[i];
        Vec resid = time_derivative(path.states, i, path.dt) - drift(spec, x);
        if (fw) {
            Mat s = spec.fw.sigma(x);
            if (std::abs(s.determinant()) < kSigmaFloor)
                throw std::runtime_error("singular noise: sigma not invertible along path");
            lu.compute(s);
            cp.u[i] = lu.solve(resid);
            cp.cost[i] = cp.u[i].squaredNorm();
        } else if (multiplicative) {
            GridField rg = to_grid(spec.wrap(resid), spec.grid_size());
            const Vec sg = sigma_grid(spec, x);
            for (int p = 0; p < rg.size(); ++p) {
                if (std::abs(sg[p]) < kSigmaFloor)
                    throw std::runtime_error("singular noise: sigma below threshold along path");
                rg.values[p] /= sg[p];
            }
            cp.u[i] = rg.values;
            const double w = std::pow(1.0 / rg.q, spec.dim);
            cp.cost[i] = w * rg.values.squaredNorm();
        } else {
            const double s = spde_const_sigma(spec);
            if (std::abs(s) < kSigmaFloor)
                throw std::runtime_error("singular noise: sigma below threshold");
            cp.u[i] = resid / s;
            cp.cost[i] = cp.u[i].squaredNorm();
        }
    }
    return cp;
}

std::string ActionReport::to_json() const {
    nlohmann::json j;
    j["total"] = total;
    j["per_interval"] = per_interval;
    j["converged"] = converged;
    j["iterations"] = iterations;
    return j.dump();
}

ActionReport action(const Path& path, const ModelSpec& spec, double i0) {
    const ControlPath cp = control_residual(path, spec);
    const int N = path.intervals();
    ActionReport rep;
    rep.per_interval.resize(N);
    double total = i0;
    for (int i = 0; i < N; ++i) {
        rep.per_interval[i] = 0.25 * path.dt * (cp.cost[i] + cp.cost[i + 1]);
        total += rep.per_interval[i];
    }
    rep.total = total;
    return rep;
}

double action_value(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt) {
    Path p;
    p.dt = dt;
    p.states = nodes;
    const ControlPath cp = control_residual(p, spec);
    const int N = static_cast<int>(nodes.size()) - 1;
    double total = 0.0;
    for (int i = 0; i <= N; ++i) total += 0.5 * trapezoid_weight(i, N, dt) * cp.cost[i];
    return total;
}

std::vector<Vec> action_gradient(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt) {
    if (!sigma_is_state_independent(spec))
        throw std::invalid_argument(
            "action_gradient: requires state-independent sigma (additive or constant noise)");
    const int N = static_cast<int>(nodes.size()) - 1;
    const bool fw = spec.family == Family::FiniteDimFW;

    // v_i = Sigma^{-T} u_i with u_i = Sigma^{-1}(xdot_i - b(x_i))
    std::vector<Vec> v(N + 1);
    if (fw) {
        const Mat s = spec.fw.sigma(nodes[0]);
        const Mat gram_inv = (s * s.transpose()).inverse();
        for (int i = 0; i <= N; ++i)
            v[i] = gram_inv * (time_derivative(nodes, i, dt) - drift(spec, nodes[i]));
    } else {
        const double s = spde_const_sigma(spec);
        for (int i = 0; i <= N; ++i)
            v[i] = (time_derivative(nodes, i, dt) - drift(spec, nodes[i])) / (s * s);
    }

    std::vector<Vec> grad(N + 1, Vec::Zero(nodes[0].size()));
    const double inv2h = 1.0 / (2.0 * dt);
    for (int i = 0; i <= N; ++i) {
        const double w = trapezoid_weight(i, N, dt);
        const Vec wv = w * v[i];
        if (i == 0) {
            grad[0] += -3.0 * inv2h * wv;
            grad[1] += 4.0 * inv2h * wv;
            grad[2] += -inv2h * wv;
        } else if (i == N) {
            grad[N] += 3.0 * inv2h * wv;
            grad[N - 1] += -4.0 * inv2h * wv;
            grad[N - 2] += inv2h * wv;
        } else {
            grad[i - 1] -= inv2h * wv;
            grad[i + 1] += inv2h * wv;
        }
        grad[i] -= drift_vjp(spec, nodes[i], wv);
    }
    return grad;
}

double gradient_check(const ModelSpec& spec, const std::vector<Vec>& nodes, double dt, int probes,
                      std::uint64_t seed) {
    const auto grad = action_gradient(spec, nodes, dt);
    SplitMix64 rng(seed);
    const int N = static_cast<int>(nodes.size()) - 1;
    const int sz = static_cast<int>(nodes[0].size());
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        const int node = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(N - 1));
        const int comp = static_cast<int>(rng.next() % static_cast<std::uint64_t>(sz));
        const double h = 1e-6 * std::max(1.0, std::abs(nodes[node][comp]));
        auto shifted = nodes;
        shifted[node][comp] += h;
        const double fp = action_value(spec, shifted, dt);
        shifted[node][comp] -= 2 * h;
        const double fm = action_value(spec, shifted, dt);
        const double fd = (fp - fm) / (2 * h);
        const double an = grad[node][comp];
        const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, rel);
    }
    return worst;
}

namespace {

std::vector<Vec> unpack(const Vec& z, const Vec& x0, const Vec& x1, int N) {
    const int sz = static_cast<int>(x0.size());
    std::vector<Vec> nodes(N + 1);
    nodes[0] = x0;
    nodes[N] = x1;
    for (int i = 1; i < N; ++i) nodes[i] = z.segment(static_cast<long>(i - 1) * sz, sz);
    return nodes;
}

} // namespace

MapResult minimize_action(const ModelSpec& spec, const Vec& x0, const Vec& x1, double T,
                          int slices, const OptimOptions& opts, const Path* warm_start) {
    if (slices < 4) throw std::invalid_argument("minimize_action: need at least 4 time slices");
    const int N = slices;
    const int sz = static_cast<int>(x0.size());
    const double dt = T / N;

    Vec z(static_cast<long>(N - 1) * sz);
    if (warm_start && warm_start->intervals() == N) {
        for (int i = 1; i < N; ++i) z.segment(static_cast<long>(i - 1) * sz, sz) = warm_start->states[i];
    } else {
        for (int i = 1; i < N; ++i) {
            const double a = static_cast<double>(i) / N;
            z.segment(static_cast<long>(i - 1) * sz, sz) = (1.0 - a) * x0 + a * x1;
        }
    }

    auto fg = [&](const Vec& zz, Vec& g) {
        const auto nodes = unpack(zz, x0, x1, N);
        const double f = action_value(spec, nodes, dt);
        const auto gn = action_gradient(spec, nodes, dt);
        for (int i = 1; i < N; ++i) g.segment(static_cast<long>(i - 1) * sz, sz) = gn[i];
        return f;
    };

    const BBResult opt = bb_minimize(fg, z, opts.max_iters, opts.grad_tol, opts.history);

    MapResult res;
    res.path.dt = dt;
    res.path.states = unpack(opt.z, x0, x1, N);
    res.report = action(res.path, spec, 0.0);
    res.report.converged = opt.converged;
    res.report.iterations = opt.iterations;
    res.converged = opt.converged;
    res.iterations = opt.iterations;
    res.grad_norm = opt.grad_norm;
    return res;
}

} // namespace sndiff
