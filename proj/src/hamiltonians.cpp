#include "hamiltonians.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <stdexcept>

namespace sndiff {

using nlohmann::json;

namespace {

// grid quadrature of g(x(theta)) over the unit torus
double quad_of(const SpectralField& x, const std::function<double(double)>& g) {
    const GridField gf = to_grid(x, default_grid_size(x.m));
    double acc = 0.0;
    for (int i = 0; i < gf.size(); ++i) acc += g(gf.values[i]);
    return acc / gf.size();
}

// projection of g(x(theta)) * w(theta) back to coefficients; w empty means 1
Vec project_pointwise(const SpectralField& x, const std::function<double(double)>& g,
                      const Vec* w) {
    const int q = default_grid_size(x.m);
    GridField gf = to_grid(x, q);
    if (w) {
        SpectralField wf{x.dim, x.m, *w};
        const GridField wg = to_grid(wf, q);
        for (int i = 0; i < gf.size(); ++i) gf.values[i] = g(gf.values[i]) * wg.values[i];
    } else {
        for (int i = 0; i < gf.size(); ++i) gf.values[i] = g(gf.values[i]);
    }
    return to_spectral(gf, x.m).coeffs;
}

Vec laplace_eigenvalues(int dim, int m) {
    const int sz = tensor_size(dim, m);
    Vec lam(sz);
    for (int i = 0; i < sz; ++i) lam[i] = laplace_eigenvalue(i, dim, m);
    return lam;
}

} // namespace

double free_energy(const SpectralField& x, const Potential& pot) {
    const Vec lam = laplace_eigenvalues(x.dim, x.m);
    return 0.5 * lam.cwiseProduct(x.coeffs).dot(x.coeffs) + quad_of(x, pot.v);
}

Vec free_energy_grad(const SpectralField& x, const Potential& pot) {
    const Vec lam = laplace_eigenvalues(x.dim, x.m);
    return lam.cwiseProduct(x.coeffs) + project_pointwise(x, pot.vp, nullptr);
}

Vec free_energy_hess_apply(const SpectralField& x, const Potential& pot, const Vec& v) {
    const Vec lam = laplace_eigenvalues(x.dim, x.m);
    return lam.cwiseProduct(v) + project_pointwise(x, pot.vpp, &v);
}

RadialTestFn RadialTestFn::quadratic(double mu, Vec xi) {
    RadialTestFn f;
    f.kind = Kind::Quadratic;
    f.mu = mu;
    f.xi = std::move(xi);
    return f;
}

RadialTestFn RadialTestFn::log_free_energy(double M, Potential pot, int dim, int m) {
    RadialTestFn f;
    f.kind = Kind::LogFreeEnergy;
    f.M = M;
    f.potential = std::move(pot);
    f.dim = dim;
    f.m = m;
    return f;
}

double RadialTestFn::eval(const Vec& x) const {
    if (kind == Kind::Quadratic) return 0.5 * mu * (x - xi).squaredNorm();
    const SpectralField f{dim, m, x};
    return std::log1p(free_energy(f, potential) / (M * M));
}

Vec RadialTestFn::grad(const Vec& x) const {
    if (kind == Kind::Quadratic) return Vec(mu * (x - xi));
    const SpectralField f{dim, m, x};
    const double denom = M * M + free_energy(f, potential);
    return Vec(free_energy_grad(f, potential) / denom);
}

Vec RadialTestFn::hess_apply(const Vec& x, const Vec& v) const {
    if (kind == Kind::Quadratic) return Vec(mu * v);
    const SpectralField f{dim, m, x};
    const double denom = M * M + free_energy(f, potential);
    const Vec g = free_energy_grad(f, potential);
    return Vec(free_energy_hess_apply(f, potential, v) / denom -
               g * (g.dot(v) / (denom * denom)));
}

double radial_fn_check(const RadialTestFn& f, const Vec& x, int probes, std::uint64_t seed) {
    GaussianStream gs(seed);
    double worst = 0.0;
    const double h = 1e-5;
    for (int p = 0; p < probes; ++p) {
        Vec dir(x.size());
        for (int i = 0; i < dir.size(); ++i) dir[i] = gs.normal();
        dir /= dir.norm();

        const Vec g = f.grad(x);
        const double fd_g = (f.eval(x + h * dir) - f.eval(x - h * dir)) / (2 * h);
        const double ref_g = std::max(1.0, std::abs(g.dot(dir)));
        worst = std::max(worst, std::abs(fd_g - g.dot(dir)) / ref_g);

        const Vec hv = f.hess_apply(x, dir);
        const Vec fd_h = (f.grad(x + h * dir) - f.grad(x - h * dir)) / (2 * h);
        const double ref_h = std::max(1.0, hv.norm());
        worst = std::max(worst, (fd_h - hv).norm() / ref_h);
    }
    return worst;
}

GeneratorValue transformed_generator(const RadialTestFn& f, const Vec& x, const ModelSpec& spec) {
    GeneratorValue out;
    const Vec df = f.grad(x);
    out.drift_term = df.dot(drift(spec, x));

    // B is self-adjoint for the pointwise-multiplier SPDE noises; the
    // finite-dim adjoint is the matrix transpose.
    Vec bstar_df;
    if (spec.family == Family::FiniteDimFW)
        bstar_df = spec.fw.sigma(x).transpose() * df;
    else
        bstar_df = diffusion_apply(spec, x, df);
    out.grad_sq_term = 0.5 * bstar_df.squaredNorm();

    const int noise_dim = spec.family == Family::FiniteDimFW ? spec.fw.d : spec.state_size();
    double trace = 0.0;
    Vec e = Vec::Zero(noise_dim);
    for (int k = 0; k < noise_dim; ++k) {
        e[k] = 1.0;
        const Vec be = diffusion_apply(spec, x, e);
        trace += f.hess_apply(x, be).dot(be);
        e[k] = 0.0;
    }
    out.trace_term = trace / (2.0 * spec.n);
    out.total = out.drift_term + out.grad_sq_term + out.trace_term;
    return out;
}

LyapunovCheck lyapunov_bound_check(const Vec& x, const ModelSpec& spec, double tol) {
    if (spec.family != Family::AllenCahn)
        throw std::invalid_argument("lyapunov_bound_check: Allen-Cahn only");
    const RadialTestFn f =
        RadialTestFn::log_free_energy(spec.noise.sup_phi, spec.potential, spec.dim, spec.m);
    LyapunovCheck out;
    out.value = transformed_generator(f, x, spec).total;
    const double pi = std::numbers::pi;
    const double d = spec.dim;
    out.bound = std::pow(4.0 * pi * pi, d) * std::pow(1.0 + spec.m, 4.0 * d) / (6.0 * spec.n) +
                std::pow(spec.m, 3.0 * d) / spec.n * spec.potential.sup_vpp;
    out.pass = out.value <= out.bound + tol;
    return out;
}

PoincareCheck poincare_check(const SpectralField& x) {
    PoincareCheck out;
    double fluct = 0.0, dirichlet = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double lam = laplace_eigenvalue(i, x.dim, x.m);
        if (lam > 0.0) fluct += x.coeffs[i] * x.coeffs[i];
        dirichlet += lam * x.coeffs[i] * x.coeffs[i];
    }
    out.lhs = std::sqrt(fluct);
    out.rhs = std::sqrt(dirichlet) / (2.0 * std::numbers::pi);
    out.pass = out.lhs <= out.rhs + 1e-12;
    return out;
}

std::string ContainmentResult::to_json() const {
    json j;
    j["cells"] = json::array();
    for (const auto& c : cells) {
        json cj;
        cj["n"] = c.n;
        cj["trials"] = c.trials;
        cj["exceed"] = c.exceed;
        cj["aborted"] = c.aborted;
        cj["censored"] = c.censored;
        cj["freq"] = c.freq;
        j["cells"].push_back(cj);
    }
    j["slope"] = slope;
    j["slope_stderr"] = slope_stderr;
    j["fitted_cells"] = fitted_cells;
    j["monotone"] = monotone;
    return j.dump(2);
}

ContainmentResult containment_experiment(const ModelSpec& base, const Vec& x0, double c1,
                                         double T, const std::vector<double>& n_list,
                                         int ensemble, const SimConfig& sim_template) {
    ContainmentResult res;
    for (double n : n_list) {
        ModelSpec spec = base;
        spec.n = n;
        SimConfig cfg = sim_template;
        cfg.T = T;
        cfg.ensemble = ensemble;

        auto peak_energy = [&](const Path& p) {
            double peak = -std::numeric_limits<double>::infinity();
            for (const Vec& s : p.states)
                peak = std::max(peak, free_energy(spec.wrap(s), spec.potential));
            return peak;
        };
        const EnsembleResult ens = simulate_ensemble(spec, x0, cfg, peak_energy);

        ContainmentCell cell;
        cell.n = n;
        cell.trials = ensemble;
        cell.aborted = static_cast<int>(ens.aborted.size());
        for (double v : ens.samples)
            if (std::isnan(v) || v > c1) ++cell.exceed;  // an abort counts as an exceedance
        cell.censored = cell.exceed < 5;
        cell.freq = cell.exceed > 0 ? static_cast<double>(cell.exceed) / cell.trials
                                    : 1.0 / cell.trials;
        res.cells.push_back(cell);
    }

    res.monotone = true;
    for (size_t i = 1; i < res.cells.size(); ++i)
        if (res.cells[i].freq > res.cells[i - 1].freq) res.monotone = false;

    // least squares of log freq against n over the uncensored cells
    std::vector<double> xs, ys;
    for (const auto& c : res.cells)
        if (!c.censored) {
            xs.push_back(c.n);
            ys.push_back(std::log(c.freq));
        }
    res.fitted_cells = static_cast<int>(xs.size());
    if (res.fitted_cells >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= ys.size();
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        res.slope = sxy / sxx;
        double sse = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - my - res.slope * (xs[i] - mx);
            sse += r * r;
        }
        const int dof = res.fitted_cells - 2;
        res.slope_stderr = dof > 0 ? std::sqrt(sse / dof / sxx) : 0.0;
    }
    return res;
}

} // namespace sndiff
