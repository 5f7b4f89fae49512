#include "models.hpp"

#include "rng.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace sndiff {

using nlohmann::json;

std::string family_name(Family f) {
    switch (f) {
        case Family::AllenCahn: return "allen-cahn";
        case Family::CahnHilliard: return "cahn-hilliard";
        case Family::Quasilinear: return "quasilinear";
        case Family::FiniteDimFW: return "finite-dim-fw";
    }
    return "?";
}

Family family_from_name(const std::string& s) {
    if (s == "allen-cahn") return Family::AllenCahn;
    if (s == "cahn-hilliard") return Family::CahnHilliard;
    if (s == "quasilinear") return Family::Quasilinear;
    if (s == "finite-dim-fw") return Family::FiniteDimFW;
    throw std::invalid_argument("unknown model family: " + s);
}

Potential make_potential(const std::string& name, double R, double shift, double a) {
    Potential p;
    p.name = name;
    if (name == "double-well") {
        // (r^2-1)^2/4 + shift on |r| <= R, quadratic extension with matched
        // value/slope/curvature outside. Curvature bound keeps the operator
        // shift finite; the additive shift keeps V strictly positive.
        const double vR = 0.25 * (R * R - 1) * (R * R - 1) + shift;
        const double dR = R * R * R - R;
        const double cR = 3 * R * R - 1;
        p.v = [=](double r) {
            const double s = std::abs(r);
            if (s <= R) return 0.25 * (r * r - 1) * (r * r - 1) + shift;
            return vR + dR * (s - R) + 0.5 * cR * (s - R) * (s - R);
        };
        p.vp = [=](double r) {
            const double s = std::abs(r);
            const double sign = r < 0 ? -1.0 : 1.0;
            if (s <= R) return r * r * r - r;
            return sign * (dR + cR * (s - R));
        };
        p.vpp = [=](double r) {
            const double s = std::abs(r);
            if (s <= R) return 3 * r * r - 1;
            return cR;
        };
        p.sup_vpp = std::max(cR, 1.0);
        p.sup_vppp = 6 * R;
        p.c1 = 0.5 * shift;
        p.c2 = 0.25;
    } else if (name == "quadratic") {
        p.v = [=](double r) { return 0.5 * a * r * r + shift; };
        p.vp = [=](double r) { return a * r; };
        p.vpp = [=](double) { return a; };
        p.sup_vpp = std::abs(a);
        p.sup_vppp = 0.0;
        p.c1 = shift;
        p.c2 = 0.5 * a;
    } else if (name == "zero") {
        p.v = [](double) { return 0.0; };
        p.vp = [](double) { return 0.0; };
        p.vpp = [](double) { return 0.0; };
    } else {
        throw std::invalid_argument("unknown potential: " + name);
    }
    return p;
}

Noise make_noise(const std::string& name, int dim, int m, double c, double base, double amp) {
    Noise n;
    n.name = name;
    if (name == "additive-identity") {
        n.kind = Noise::Kind::AdditiveIdentity;
        n.sup_phi = 1.0;
        n.inf_phi = 1.0;
    } else if (name == "constant") {
        n.kind = Noise::Kind::MultiplicativeAC;
        n.phi = [=](double, const std::vector<double>&) { return c; };
        n.sup_phi = std::abs(c);
        n.inf_phi = std::abs(c);
        n.lip_r = 0.0;
        n.state_independent = true;
    } else if (name == "probe-tanh") {
        if (base <= std::abs(amp))
            throw std::invalid_argument("probe-tanh noise requires base > |amp|");
        n.kind = Noise::Kind::MultiplicativeAC;
        Vec xi = Vec::Zero(tensor_size(dim, m));
        xi[0] = 1.0; // probe against the mean
        n.probes.push_back(xi);
        n.phi = [=](double theta, const std::vector<double>& r) {
            return base + amp * std::sin(6.283185307179586 * theta) * std::tanh(r[0]);
        };
        n.sup_phi = base + std::abs(amp);
        n.inf_phi = base - std::abs(amp);
        n.lip_r = std::abs(amp);
        n.state_independent = false;
    } else {
        throw std::invalid_argument("unknown noise: " + name);
    }
    return n;
}

Flux make_flux(const std::string& name, double R, double c) {
    Flux f;
    f.name = name;
    if (name == "burgers-clip") {
        const double vR = 0.5 * R * R;
        f.f = [=](double r) {
            const double s = std::abs(r);
            if (s <= R) return 0.5 * r * r;
            return vR + R * (s - R);
        };
        f.fp = [=](double r) {
            if (std::abs(r) <= R) return r;
            return r < 0 ? -R : R;
        };
        f.sup_fp = R;
    } else if (name == "linear") {
        f.f = [=](double r) { return c * r; };
        f.fp = [=](double) { return c; };
        f.sup_fp = std::abs(c);
    } else if (name == "constant") {
        f.f = [=](double) { return c; };
        f.fp = [](double) { return 0.0; };
        f.sup_fp = 0.0;
    } else {
        throw std::invalid_argument("unknown flux: " + name);
    }
    return f;
}

FWModel make_fw_drift(const std::string& name, int d, double rate, const Mat& A) {
    FWModel fw;
    fw.drift_name = name;
    fw.d = d;
    if (name == "ou") {
        fw.b = [=](const Vec& x) { return Vec(-rate * x); };
        fw.jb = [=](const Vec& x) { return Mat(-rate * Mat::Identity(x.size(), x.size())); };
        fw.lip_b = std::abs(rate);
    } else if (name == "linear") {
        if (A.rows() != d || A.cols() != d) throw std::invalid_argument("linear drift: bad matrix");
        fw.b = [A](const Vec& x) { return Vec(A * x); };
        fw.jb = [A](const Vec&) { return A; };
        fw.lip_b = A.norm();
    } else if (name == "grad-double-well") {
        Potential p = make_potential("double-well");
        fw.b = [p](const Vec& x) {
            Vec out(x.size());
            for (long i = 0; i < x.size(); ++i) out[i] = -p.vp(x[i]);
            return out;
        };
        fw.jb = [p](const Vec& x) {
            Mat J = Mat::Zero(x.size(), x.size());
            for (long i = 0; i < x.size(); ++i) J(i, i) = -p.vpp(x[i]);
            return J;
        };
        fw.lip_b = p.sup_vpp;
    } else {
        throw std::invalid_argument("unknown finite-dim drift: " + name);
    }
    return fw;
}

void set_fw_sigma(FWModel& fw, const std::string& name, double c, double c0, double c1) {
    fw.sigma_name = name;
    const int d = fw.d;
    if (name == "identity") {
        fw.sigma = [d](const Vec&) { return Mat(Mat::Identity(d, d)); };
        fw.sigma_inf = 1.0;
        fw.lip_sigma = 0.0;
        fw.sigma_state_independent = true;
    } else if (name == "constant") {
        fw.sigma = [d, c](const Vec&) { return Mat(c * Mat::Identity(d, d)); };
        fw.sigma_inf = std::abs(c);
        fw.lip_sigma = 0.0;
        fw.sigma_state_independent = true;
    } else if (name == "scalar-tanh") {
        if (d != 1) throw std::invalid_argument("scalar-tanh sigma requires d = 1");
        if (c0 <= std::abs(c1)) throw std::invalid_argument("scalar-tanh requires c0 > |c1|");
        fw.sigma = [c0, c1](const Vec& x) {
            Mat s(1, 1);
            s(0, 0) = c0 + c1 * std::tanh(x[0]);
            return s;
        };
        fw.sigma_inf = c0 - std::abs(c1);
        fw.lip_sigma = std::abs(c1);
        fw.sigma_state_independent = false;
    } else {
        throw std::invalid_argument("unknown finite-dim sigma: " + name);
    }
}

int ModelSpec::state_size() const {
    return is_spde() ? tensor_size(dim, m) : fw.d;
}

SpectralField ModelSpec::wrap(const Vec& x) const {
    SpectralField f;
    f.dim = dim;
    f.m = m;
    f.coeffs = x;
    return f;
}

std::string model_to_json(const ModelSpec& spec) {
    json j;
    j["family"] = family_name(spec.family);
    j["dim"] = spec.dim;
    j["n"] = spec.n;
    if (spec.is_spde()) {
        j["m"] = spec.m;
        j["potential"] = {{"name", spec.potential.name}};
        j["noise"] = {{"name", spec.noise.name}};
        if (spec.family == Family::Quasilinear) {
            j["alpha"] = spec.alpha;
            j["flux"] = {{"name", spec.flux.name}};
        }
    } else {
        j["drift"] = {{"name", spec.fw.drift_name}};
        j["sigma"] = {{"name", spec.fw.sigma_name}};
    }
    return j.dump();
}

ModelSpec model_from_json(const std::string& text) {
    const json j = json::parse(text);
    ModelSpec spec;
    spec.family = family_from_name(j.at("family").get<std::string>());
    spec.dim = j.value("dim", 1);
    spec.n = j.value("n", 1.0);
    if (spec.family == Family::FiniteDimFW) {
        const auto& dj = j.at("drift");
        Mat A;
        if (dj.contains("matrix")) {
            const auto& rows = dj["matrix"];
            A = Mat(rows.size(), rows.size());
            for (size_t r = 0; r < rows.size(); ++r)
                for (size_t c = 0; c < rows.size(); ++c)
                    A(static_cast<long>(r), static_cast<long>(c)) = rows[r][c].get<double>();
        }
        spec.fw = make_fw_drift(dj.at("name").get<std::string>(), spec.dim,
                                dj.value("rate", 1.0), A);
        const auto& sj = j.at("sigma");
        set_fw_sigma(spec.fw, sj.at("name").get<std::string>(), sj.value("c", 1.0),
                     sj.value("c0", 1.0), sj.value("c1", 0.25));
        return spec;
    }
    spec.m = j.at("m").get<int>();
    if (j.contains("potential")) {
        const auto& pj = j["potential"];
        spec.potential = make_potential(pj.at("name").get<std::string>(), pj.value("R", 2.0),
                                        pj.value("shift", 1.0), pj.value("a", 1.0));
    } else {
        spec.potential = make_potential("double-well");
    }
    if (j.contains("noise")) {
        const auto& nj = j["noise"];
        spec.noise = make_noise(nj.at("name").get<std::string>(), spec.dim, spec.m,
                                nj.value("c", 1.0), nj.value("base", 1.0), nj.value("amp", 0.25));
    } else {
        spec.noise = make_noise("additive-identity", spec.dim, spec.m);
    }
    if (spec.family == Family::Quasilinear) {
        if (spec.dim != 1) throw std::invalid_argument("quasilinear family requires dim = 1");
        spec.alpha = j.value("alpha", 1.0);
        if (j.contains("flux")) {
            const auto& fj = j["flux"];
            spec.flux = make_flux(fj.at("name").get<std::string>(), fj.value("R", 2.0),
                                  fj.value("c", 1.0));
        } else {
            spec.flux = make_flux("burgers-clip");
        }
    }
    return spec;
}

Vec sigma_grid(const ModelSpec& spec, const Vec& x) {
    const int q = spec.grid_size();
    const int npts = tensor_size(spec.dim, q);
    Vec s(npts);
    if (spec.noise.kind == Noise::Kind::AdditiveIdentity) {
        s.setOnes();
        return s;
    }
    std::vector<double> r(spec.noise.probes.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = spec.noise.probes[i].dot(x);
    for (int i = 0; i < npts; ++i) {
        const auto k = decode_index(i, spec.dim, q);
        // theta of grid node; phi built-ins only use the first coordinate
        const double theta = static_cast<double>(k[0] - 1) / q;
        s[i] = spec.noise.phi(theta, r);
    }
    return s;
}

namespace {

// pointwise map of the state on the collocation grid, projected back
Vec grid_map(const ModelSpec& spec, const Vec& x, const std::function<double(double)>& fn) {
    GridField g = to_grid(spec.wrap(x), spec.grid_size());
    for (int i = 0; i < g.size(); ++i) g.values[i] = fn(g.values[i]);
    return to_spectral(g, spec.m).coeffs;
}

// pointwise product a(theta) * (v on grid), projected back
Vec grid_multiply(const ModelSpec& spec, const Vec& weights_grid, const Vec& v) {
    GridField g = to_grid(spec.wrap(v), spec.grid_size());
    g.values.array() *= weights_grid.array();
    return to_spectral(g, spec.m).coeffs;
}

// V''(x(theta)) on the grid
Vec vpp_grid(const ModelSpec& spec, const Vec& x) {
    GridField g = to_grid(spec.wrap(x), spec.grid_size());
    for (int i = 0; i < g.size(); ++i) g.values[i] = spec.potential.vpp(g.values[i]);
    return g.values;
}

Vec apply_laplacian(const ModelSpec& spec, const Vec& x) {
    Vec out = x;
    for (int i = 0; i < out.size(); ++i) out[i] *= -laplace_eigenvalue(i, spec.dim, spec.m);
    return out;
}

Vec apply_dtheta(const ModelSpec& spec, const Vec& x) {
    return d_theta(spec.wrap(x)).coeffs;
}

} // namespace

Vec drift(const ModelSpec& spec, const Vec& x) {
    switch (spec.family) {
        case Family::AllenCahn:
            return apply_laplacian(spec, x) - grid_map(spec, x, spec.potential.vp);
        case Family::CahnHilliard: {
            Vec inner = -apply_laplacian(spec, x) + grid_map(spec, x, spec.potential.vp);
            return apply_laplacian(spec, inner);
        }
        case Family::Quasilinear: {
            Vec fl = grid_map(spec, x, spec.flux.f);
            return spec.alpha * apply_laplacian(spec, x) - apply_dtheta(spec, fl);
        }
        case Family::FiniteDimFW:
            return spec.fw.b(x);
    }
    throw std::logic_error("drift: bad family");
}

Vec drift_jvp(const ModelSpec& spec, const Vec& x, const Vec& v) {
    switch (spec.family) {
        case Family::AllenCahn:
            return apply_laplacian(spec, v) - grid_multiply(spec, vpp_grid(spec, x), v);
        case Family::CahnHilliard: {
            Vec inner = -apply_laplacian(spec, v) + grid_multiply(spec, vpp_grid(spec, x), v);
            return apply_laplacian(spec, inner);
        }
        case Family::Quasilinear: {
            GridField g = to_grid(spec.wrap(x), spec.grid_size());
            for (int i = 0; i < g.size(); ++i) g.values[i] = spec.flux.fp(g.values[i]);
            return spec.alpha * apply_laplacian(spec, v) -
                   apply_dtheta(spec, grid_multiply(spec, g.values, v));
        }
        case Family::FiniteDimFW:
            return spec.fw.jb(x) * v;
    }
    throw std::logic_error("drift_jvp: bad family");
}

Vec drift_vjp(const ModelSpec& spec, const Vec& x, const Vec& w) {
    switch (spec.family) {
        case Family::AllenCahn:
            // self-adjoint
            return drift_jvp(spec, x, w);
        case Family::CahnHilliard: {
            Vec lw = apply_laplacian(spec, w);
            return -apply_laplacian(spec, lw) + grid_multiply(spec, vpp_grid(spec, x), lw);
        }
        case Family::Quasilinear: {
            GridField g = to_grid(spec.wrap(x), spec.grid_size());
            for (int i = 0; i < g.size(); ++i) g.values[i] = spec.flux.fp(g.values[i]);
            // adjoint of -P d_theta M is M d_theta (d_theta is skew)
            return spec.alpha * apply_laplacian(spec, w) +
                   grid_multiply(spec, g.values, apply_dtheta(spec, w));
        }
        case Family::FiniteDimFW:
            return spec.fw.jb(x).transpose() * w;
    }
    throw std::logic_error("drift_vjp: bad family");
}

Vec diffusion_apply(const ModelSpec& spec, const Vec& x, const Vec& u) {
    if (spec.family == Family::FiniteDimFW) return spec.fw.sigma(x) * u;
    if (spec.noise.kind == Noise::Kind::AdditiveIdentity) return u;
    return grid_multiply(spec, sigma_grid(spec, x), u);
}

Vec linear_decay_rates(const ModelSpec& spec) {
    const int sz = spec.state_size();
    Vec rates = Vec::Zero(sz);
    if (!spec.is_spde()) return rates;
    for (int i = 0; i < sz; ++i) {
        const double lam = laplace_eigenvalue(i, spec.dim, spec.m);
        switch (spec.family) {
            case Family::AllenCahn: rates[i] = lam; break;
            case Family::CahnHilliard: rates[i] = lam * lam; break;
            case Family::Quasilinear: rates[i] = spec.alpha * lam; break;
            default: break;
        }
    }
    return rates;
}

Vec nonstiff_drift(const ModelSpec& spec, const Vec& x) {
    switch (spec.family) {
        case Family::AllenCahn:
            return Vec(-grid_map(spec, x, spec.potential.vp));
        case Family::CahnHilliard:
            return apply_laplacian(spec, grid_map(spec, x, spec.potential.vp));
        case Family::Quasilinear:
            return Vec(-apply_dtheta(spec, grid_map(spec, x, spec.flux.f)));
        case Family::FiniteDimFW:
            return spec.fw.b(x);
    }
    throw std::logic_error("nonstiff_drift: bad family");
}

double shift_omega(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::AllenCahn:
            return spec.potential.sup_vpp;
        case Family::CahnHilliard:
            return 0.25 * spec.potential.sup_vpp * spec.potential.sup_vpp;
        case Family::Quasilinear:
            return spec.flux.sup_fp * spec.flux.sup_fp / (4.0 * spec.alpha);
        case Family::FiniteDimFW:
            return spec.fw.lip_b;
    }
    throw std::logic_error("shift_omega: bad family");
}

Vec shifted_operator(const ModelSpec& spec, const Vec& x) {
    Vec c = drift(spec, x) - shift_omega(spec) * x;
    if (spec.family == Family::AllenCahn) {
        // + P V'(0): a constant-mode contribution restoring C 0 = 0
        c[0] += spec.potential.vp(0.0);
    }
    return c;
}

DissipativityReport dissipativity_check(const ModelSpec& spec, int trials, std::uint64_t seed,
                                        double tol) {
    DissipativityReport rep;
    rep.trials = trials;
    rep.max_inner = -std::numeric_limits<double>::infinity();
    GaussianStream gs(substream_seed(seed, 0));
    const int sz = spec.state_size();
    for (int t = 0; t < trials; ++t) {
        Vec x(sz), y(sz);
        for (int i = 0; i < sz; ++i) x[i] = gs.normal();
        for (int i = 0; i < sz; ++i) y[i] = gs.normal();
        const double ip = (shifted_operator(spec, x) - shifted_operator(spec, y)).dot(x - y);
        if (ip > rep.max_inner) {
            rep.max_inner = ip;
            rep.witness_x = x;
            rep.witness_y = y;
        }
    }
    rep.pass = rep.max_inner <= tol;
    return rep;
}

ScalingReport scaling_check(const ModelSpec& spec, double budget) {
    ScalingReport rep;
    rep.budget = budget;
    double power = 0.0;
    switch (spec.family) {
        case Family::AllenCahn: power = 4.0 * spec.dim; break;
        case Family::CahnHilliard: power = 3.0 * spec.dim; break;
        case Family::Quasilinear: power = 3.0; break;
        case Family::FiniteDimFW:
            rep.ratio = 0.0;
            rep.pass = true;
            return rep;
    }
    rep.ratio = std::pow(static_cast<double>(spec.m), power) / spec.n;
    rep.pass = rep.ratio <= budget;
    return rep;
}

std::string validate_model(const ModelSpec& spec) {
    if (!spec.is_spde()) return "";
    const auto& p = spec.potential;
    if (p.name == "zero") return "";
    for (int i = 0; i <= 2000; ++i) {
        const double r = -50.0 + 0.05 * i;
        if (std::abs(p.vpp(r)) > p.sup_vpp + 1e-12) {
            return "potential curvature bound violated: |V''(" + format_double(r) +
                   ")| exceeds declared sup " + format_double(p.sup_vpp);
        }
        if (p.v(r) < p.c1 + p.c2 * r * r - 1e-12) {
            return "potential lower bound violated: V(" + format_double(r) +
                   ") < c1 + c2 r^2";
        }
    }
    if (spec.noise.kind == Noise::Kind::MultiplicativeAC) {
        std::vector<double> r(std::max<size_t>(spec.noise.probes.size(), 1), 0.0);
        for (int it = 0; it < 400; ++it) {
            const double theta = (it % 20) / 20.0;
            for (auto& ri : r) ri = -10.0 + 20.0 * ((it / 20) / 19.0);
            const double s = spec.noise.phi(theta, r);
            if (std::abs(s) > spec.noise.sup_phi + 1e-12)
                return "noise amplitude bound violated: |phi| exceeds declared sup";
        }
    }
    return "";
}

} // namespace sndiff
