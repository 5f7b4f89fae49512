#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hamiltonians.hpp"
#include "models.hpp"
#include "rng.hpp"
#include "simulator.hpp"

#include <cmath>
#include <numbers>

using namespace sndiff;

namespace {
const double pi = std::numbers::pi;

SpectralField random_field(int dim, int m, std::uint64_t seed, double scale = 1.0) {
    GaussianStream gs(seed);
    SpectralField f = zero_field(dim, m);
    for (int i = 0; i < f.size(); ++i) f.coeffs[i] = scale * gs.normal();
    return f;
}
} // namespace

TEST_CASE("1-D eigenvalues and basis values") {
    CHECK(mu(1) == 0.0);
    CHECK(mu(2) == doctest::Approx(4 * pi * pi).epsilon(1e-14));
    CHECK(mu(3) == doctest::Approx(4 * pi * pi).epsilon(1e-14));
    CHECK(mu(4) == doctest::Approx(16 * pi * pi).epsilon(1e-14));
    CHECK(mu(5) == doctest::Approx(16 * pi * pi).epsilon(1e-14));

    CHECK(basis_1d(1, 0.37) == 1.0);
    CHECK(basis_1d(2, 0.25) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

    // second differences reproduce -phi'' = mu phi
    for (int j : {2, 3, 4, 5}) {
        double worst = 0.0;
        const double h = 1e-4;
        for (int i = 0; i <= 200; ++i) {
            const double r = i / 200.0;
            const double dd =
                (basis_1d(j, r + h) - 2 * basis_1d(j, r) + basis_1d(j, r - h)) / (h * h);
            worst = std::max(worst, std::abs(dd + mu(j) * basis_1d(j, r)));
        }
        CHECK(worst <= 1e-4 * mu(j));
    }
}

TEST_CASE("orthonormality under dense grid quadrature") {
    const int q = 257;
    for (int k = 1; k <= 9; ++k)
        for (int l = 1; l <= 9; ++l) {
            double acc = 0.0;
            for (int i = 0; i < q; ++i) {
                const double r = static_cast<double>(i) / q;
                acc += basis_1d(k, r) * basis_1d(l, r);
            }
            acc /= q;
            CHECK(std::abs(acc - (k == l ? 1.0 : 0.0)) <= 1e-10);
        }
}

TEST_CASE("grid transforms round-trip and recover pure modes") {
    const SpectralField f = random_field(1, 9, 11);
    const SpectralField back = to_spectral(to_grid(f, 32), 9);
    CHECK((back.coeffs - f.coeffs).lpNorm<Eigen::Infinity>() <= 1e-12);

    GridField g;
    g.dim = 1;
    g.q = 32;
    g.values.resize(32);
    for (int i = 0; i < 32; ++i) g.values[i] = std::sin(2 * pi * 3 * i / 32.0);
    const SpectralField s = to_spectral(g, 9);
    for (int j = 0; j < 9; ++j) {
        if (j == 5)   // flat index 5 = basis function 6, the frequency-3 sine
            CHECK(s.coeffs[j] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        else
            CHECK(std::abs(s.coeffs[j]) <= 1e-12);
    }

    SpectralField c = zero_field(2, 3);
    c.coeffs[0] = 2.5;
    const GridField cg = to_grid(c, 7);
    for (int i = 0; i < cg.size(); ++i) CHECK(cg.values[i] == doctest::Approx(2.5));

    CHECK_THROWS(to_grid(f, 2 * 9));   // alias-prone grid rejected
}

TEST_CASE("Parseval on grid quadrature") {
    for (int dim : {1, 2}) {
        const SpectralField f = random_field(dim, 5, 17 + dim);
        CHECK(std::abs(grid_norm(to_grid(f, 11)) - f.coeffs.norm()) <= 1e-10);
    }
}

TEST_CASE("laplacian, derivative, projection") {
    SpectralField f = zero_field(1, 5);
    f.coeffs[1] = 3.0;   // basis function 2
    const SpectralField lf = laplacian(f);
    CHECK(lf.coeffs[1] == doctest::Approx(-4 * pi * pi * 3.0).epsilon(1e-14));

    SpectralField c = zero_field(2, 3);
    c.coeffs[0] = 1.0;
    CHECK(laplacian(c).coeffs.norm() == 0.0);

    // d = 2 tensor mode (2, 4): eigenvalue sum 4pi^2 + 16pi^2
    SpectralField t = zero_field(2, 5);
    t.coeffs[1 * 5 + 3] = 1.0;
    CHECK(laplacian(t).coeffs[1 * 5 + 3] == doctest::Approx(-20 * pi * pi).epsilon(1e-13));

    SpectralField s = zero_field(1, 5);
    s.coeffs[1] = 1.0;   // sqrt(2) sin(2 pi r)
    const SpectralField ds = d_theta(s);
    CHECK(ds.coeffs[2] == doctest::Approx(2 * pi).epsilon(1e-14));
    CHECK(std::abs(ds.coeffs[1]) == 0.0);

    const SpectralField r = random_field(1, 9, 23);
    const SpectralField dd = d_theta(d_theta(r));
    CHECK((dd.coeffs - laplacian(r).coeffs).lpNorm<Eigen::Infinity>() <= 1e-12);

    const SpectralField big = random_field(1, 9, 29);
    CHECK((project(big, 9).coeffs - big.coeffs).norm() == 0.0);
    CHECK(project(big, 4).norm() <= big.norm());
    CHECK((project(project(big, 5), 3).coeffs - project(big, 3).coeffs).norm() == 0.0);
}

TEST_CASE("laplacian is symmetric and nonpositive") {
    const SpectralField f = random_field(2, 4, 31), g = random_field(2, 4, 37);
    const double fg = laplacian(f).coeffs.dot(g.coeffs);
    const double gf = f.coeffs.dot(laplacian(g).coeffs);
    CHECK(fg == doctest::Approx(gf).epsilon(1e-12));
    CHECK(laplacian(f).coeffs.dot(f.coeffs) <= 0.0);
}

TEST_CASE("eigenvalue product sum bound") {
    for (int d = 1; d <= 3; ++d)
        for (int m = 1; m <= 16; ++m) {
            double sum_mu = 0.0;
            for (int j = 1; j <= m; ++j) sum_mu += mu(j);
            const double direct = std::pow(sum_mu, d);
            const double bound = std::pow(4 * pi * pi, d) * std::pow(1.0 + m, 3.0 * d) / 3.0;
            CHECK(direct <= bound);
            if (m <= 8) {   // cross-check the closed form by full enumeration
                double enumerated = 0.0;
                for (int flat = 0; flat < tensor_size(d, m); ++flat)
                    enumerated += eigenvalue_product(flat, d, m);
                CHECK(enumerated == doctest::Approx(direct).epsilon(1e-12));
            }
        }
}

TEST_CASE("field JSON round trip") {
    const SpectralField f = random_field(2, 4, 41);
    const SpectralField g = field_from_json(field_to_json(f));
    CHECK(g.dim == f.dim);
    CHECK(g.m == f.m);
    CHECK((g.coeffs - f.coeffs).norm() == 0.0);
}

// ---------------------------------------------------------------- models

TEST_CASE("default potential satisfies the declared bounds") {
    const Potential V = make_potential("double-well");
    CHECK(V.sup_vpp == doctest::Approx(11.0));
    double worst_vpp = 0.0, worst_lb = 1e300;
    for (int i = 0; i <= 2000; ++i) {
        const double r = -50.0 + 0.05 * i;
        worst_vpp = std::max(worst_vpp, std::abs(V.vpp(r)));
        worst_lb = std::min(worst_lb, V.v(r) - V.c1 - V.c2 * r * r);
    }
    CHECK(worst_vpp <= V.sup_vpp + 1e-9);
    CHECK(worst_lb >= -1e-9);
    CHECK(V.c1 > 0.0);
    CHECK(V.c2 > 0.0);
}

namespace {
ModelSpec ac_model(int m, double n, const std::string& pot = "double-well") {
    ModelSpec spec;
    spec.family = Family::AllenCahn;
    spec.dim = 1;
    spec.m = m;
    spec.n = n;
    spec.potential = make_potential(pot);
    spec.noise = make_noise("additive-identity", 1, m);
    return spec;
}

ModelSpec ou_model(double n = 1.0) {
    ModelSpec spec;
    spec.family = Family::FiniteDimFW;
    spec.dim = 1;
    spec.n = n;
    spec.fw = make_fw_drift("ou", 1);
    set_fw_sigma(spec.fw, "identity");
    return spec;
}
} // namespace

TEST_CASE("drift families match eigenvalue arithmetic") {
    // Allen-Cahn with quadratic potential is linear: mode 2 scales by -(mu+1)
    ModelSpec ac = ac_model(5, 1.0, "quadratic");
    Vec x = Vec::Zero(5);
    x[1] = 1.0;
    const Vec d = drift(ac, x);
    CHECK(d[1] == doctest::Approx(-(4 * pi * pi + 1.0)).epsilon(1e-12));

    CHECK(drift(ac, Vec::Zero(5)).norm() == 0.0);

    // constant field c: drift = -V'(c) on the constant mode only
    Vec c = Vec::Zero(5);
    c[0] = 0.7;
    const Vec dc = drift(ac, c);
    CHECK(dc[0] == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(dc.tail(4).norm() <= 1e-13);

    // Cahn-Hilliard with V' = 0: bilaplacian decay on mode 2
    ModelSpec ch = ac_model(5, 1.0, "zero");
    ch.family = Family::CahnHilliard;
    const Vec dch = drift(ch, x);
    CHECK(dch[1] == doctest::Approx(-std::pow(4 * pi * pi, 2)).epsilon(1e-12));

    // quasilinear with constant flux: pure viscous decay
    ModelSpec ql = ac_model(5, 1.0);
    ql.family = Family::Quasilinear;
    ql.alpha = 0.3;
    ql.flux = make_flux("constant");
    const Vec dql = drift(ql, x);
    CHECK(dql[1] == doctest::Approx(-0.3 * 4 * pi * pi).epsilon(1e-12));

    // quasilinear with linear flux: viscosity plus derivative rotation
    ql.alpha = 1.0;
    ql.flux = make_flux("linear");
    const Vec dqr = drift(ql, x);
    CHECK(dqr[1] == doctest::Approx(-4 * pi * pi).epsilon(1e-10));
    CHECK(dqr[2] == doctest::Approx(-2 * pi).epsilon(1e-10));
}

TEST_CASE("Cahn-Hilliard drift conserves mass") {
    ModelSpec ch = ac_model(6, 1.0);
    ch.family = Family::CahnHilliard;
    for (int t = 0; t < 100; ++t) {
        const SpectralField f = random_field(1, 6, 100 + t);
        CHECK(drift(ch, f.coeffs)[0] == 0.0);
    }
}

TEST_CASE("diffusion operator: identity, scaling, linearity, HS bound") {
    ModelSpec ac = ac_model(9, 1.0);
    const Vec u = random_field(1, 9, 51).coeffs;
    CHECK((diffusion_apply(ac, Vec::Zero(9), u) - u).norm() == 0.0);

    ac.noise = make_noise("constant", 1, 9, 2.5);
    const Vec x = random_field(1, 9, 53).coeffs;
    CHECK((diffusion_apply(ac, x, u) - 2.5 * u).norm() <= 1e-12);

    ac.noise = make_noise("probe-tanh", 1, 9);
    const Vec v = random_field(1, 9, 57).coeffs;
    const Vec lhs = diffusion_apply(ac, x, 2.0 * u + 3.0 * v);
    const Vec rhs = 2.0 * diffusion_apply(ac, x, u) + 3.0 * diffusion_apply(ac, x, v);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);

    for (int t = 0; t < 50; ++t) {
        const Vec y = random_field(1, 9, 200 + t).coeffs;
        double hs = 0.0;
        Vec e = Vec::Zero(9);
        for (int k = 0; k < 9; ++k) {
            e[k] = 1.0;
            hs += diffusion_apply(ac, y, e).squaredNorm();
            e[k] = 0.0;
        }
        CHECK(hs <= 9.0 * ac.noise.sup_phi * ac.noise.sup_phi + 1e-9);
    }
}

TEST_CASE("shifted operators are dissipative") {
    ModelSpec ac = ac_model(9, 1.0, "quadratic");
    DissipativityReport r = dissipativity_check(ac, 500, 7);
    CHECK(r.pass);
    CHECK(r.max_inner <= 1e-9);

    ac.potential = make_potential("double-well");
    r = dissipativity_check(ac, 500, 7);
    CHECK(r.pass);

    ModelSpec ch = ac_model(9, 1.0);
    ch.family = Family::CahnHilliard;
    r = dissipativity_check(ch, 500, 7);
    CHECK(r.pass);

    // x = y gives exactly zero
    const Vec x = random_field(1, 9, 61).coeffs;
    CHECK((shifted_operator(ac, x) - shifted_operator(ac, x)).dot(x - x) == 0.0);
}

TEST_CASE("scaling ratios by family") {
    CHECK(scaling_check(ac_model(4, 512)).ratio == doctest::Approx(0.5));
    CHECK(scaling_check(ac_model(4, 512)).pass);

    ModelSpec ac2 = ac_model(4, 512);
    ac2.dim = 2;
    CHECK(scaling_check(ac2).ratio == doctest::Approx(128.0));
    CHECK(!scaling_check(ac2).pass);

    ModelSpec ql = ac_model(8, 1024);
    ql.family = Family::Quasilinear;
    CHECK(scaling_check(ql).ratio == doctest::Approx(0.5));
}

TEST_CASE("finite-dimensional drift/sigma and Lipschitz sampling") {
    ModelSpec ou = ou_model();
    Vec x(1);
    x[0] = 1.0;
    CHECK(drift(ou, x)[0] == -1.0);
    CHECK(ou.fw.sigma(x)(0, 0) == 1.0);

    GaussianStream gs(3);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        Vec a(1), b(1);
        a[0] = 3 * gs.normal();
        b[0] = 3 * gs.normal();
        if (a[0] == b[0]) continue;
        worst = std::max(worst, std::abs(drift(ou, a)[0] - drift(ou, b)[0]) /
                                    std::abs(a[0] - b[0]));
    }
    CHECK(worst <= ou.fw.lip_b + 1e-9);
}

TEST_CASE("drifts map the truncated space to itself") {
    ModelSpec ac = ac_model(5, 1.0);
    const Vec x = random_field(1, 5, 71).coeffs;
    // re-projecting is a no-op because drift already lives in the truncation
    SpectralField f{1, 5, drift(ac, x)};
    CHECK((project(f, 5).coeffs - f.coeffs).norm() == 0.0);
}

TEST_CASE("model JSON round trip") {
    ModelSpec ac = ac_model(5, 64.0);
    const ModelSpec back = model_from_json(model_to_json(ac));
    CHECK(back.family == ac.family);
    CHECK(back.m == ac.m);
    CHECK(back.n == ac.n);
    CHECK(back.potential.name == ac.potential.name);
    const Vec x = random_field(1, 5, 73).coeffs;
    CHECK((drift(back, x) - drift(ac, x)).norm() == 0.0);
}

// ------------------------------------------------------------- simulator

TEST_CASE("single steps match arithmetic") {
    ModelSpec ou = ou_model();   // n = 1, noise off below
    Vec x(1);
    x[0] = 1.0;
    const Vec x1 = step(ou, x, 0.1, Vec::Zero(1), Scheme::EulerMaruyama);
    CHECK(x1[0] == doctest::Approx(0.9).epsilon(1e-15));

    // semi-implicit heat decay on mode 2
    ModelSpec heat = ac_model(5, 1.0, "zero");
    Vec h = Vec::Zero(5);
    h[1] = 1.0;
    const Vec h1 = step(heat, h, 0.01, Vec::Zero(5), Scheme::SemiImplicitLinear);
    CHECK(h1[1] == doctest::Approx(std::exp(-4 * pi * pi * 0.01)).epsilon(1e-13));

    // zero drift, zero noise: identity
    ModelSpec z = ac_model(5, 1.0, "zero");
    Vec c = Vec::Zero(5);
    c[0] = 1.0;   // constant field, Laplacian kills nothing to do
    const Vec c1 = step(z, c, 0.1, Vec::Zero(5), Scheme::EulerMaruyama);
    CHECK((c1 - c).norm() == 0.0);
}

TEST_CASE("paths are deterministic and linear decay matches the ODE") {
    ModelSpec ac = ac_model(5, 4.0, "quadratic");
    SimConfig cfg;
    cfg.dt = 1e-4;
    cfg.T = 0.1;
    cfg.seed = 99;
    Vec x0 = Vec::Zero(5);
    x0[1] = 1.0;

    const Path a = simulate_path(ac, x0, cfg);
    const Path b = simulate_path(ac, x0, cfg);
    REQUIRE(a.states.size() == b.states.size());
    for (size_t i = 0; i < a.states.size(); ++i)
        CHECK((a.states[i] - b.states[i]).norm() == 0.0);   // bitwise identical

    cfg.noise_off = true;
    const Path det = simulate_path(ac, x0, cfg);
    const double expected = std::exp(-(4 * pi * pi + 1.0) * 0.1);
    CHECK(std::abs(det.states.back()[1] - expected) <= 0.01 * expected);

    ModelSpec zero_ac = ac_model(5, 4.0, "zero");
    const Path still = simulate_path(zero_ac, Vec::Zero(5), cfg);
    CHECK(still.states.back().norm() == 0.0);
}

TEST_CASE("ensemble statistics match OU closed forms") {
    ModelSpec ou = ou_model(1.0);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 1.0;
    cfg.seed = 5;
    cfg.ensemble = 1000;
    Vec x0(1);
    x0[0] = 1.0;
    const EnsembleResult ens =
        simulate_ensemble(ou, x0, cfg, [](const Path& p) { return p.states.back()[0]; });
    const auto vals = ens.completed();
    REQUIRE(vals.size() == 1000);
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (vals.size() - 1);

    const double exact_mean = std::exp(-1.0);
    const double exact_var = 0.5 * (1 - std::exp(-2.0));
    const double se_mean = std::sqrt(exact_var / vals.size());
    CHECK(std::abs(mean - exact_mean) <= 3 * se_mean);
    const double se_var = exact_var * std::sqrt(2.0 / (vals.size() - 1));
    CHECK(std::abs(var - exact_var) <= 3 * se_var);
}

TEST_CASE("Euler-Maruyama mean bias halves with the step") {
    // linear model: the EM mean is (1-dt)^(T/dt) independent of noise
    ModelSpec ou = ou_model();
    SimConfig cfg;
    cfg.noise_off = true;
    cfg.T = 1.0;
    cfg.scheme = Scheme::EulerMaruyama;
    Vec x0(1);
    x0[0] = 1.0;
    cfg.dt = 0.02;
    const double b1 = std::abs(simulate_path(ou, x0, cfg).states.back()[0] - std::exp(-1.0));
    cfg.dt = 0.01;
    const double b2 = std::abs(simulate_path(ou, x0, cfg).states.back()[0] - std::exp(-1.0));
    CHECK(b1 / b2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("shared-noise paths stay exponentially close") {
    ModelSpec ac = ac_model(5, 16.0);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 0.1;
    const double L = 4 * pi * pi * 4 + ac.potential.sup_vpp;   // crude Lipschitz constant
    GaussianStream gs(13);
    for (int t = 0; t < 100; ++t) {
        cfg.seed = 1000 + t;
        Vec x = Vec::Zero(5), y = Vec::Zero(5);
        for (int i = 0; i < 5; ++i) {
            x[i] = 0.3 * gs.normal();
            y[i] = x[i] + 0.01 * gs.normal();
        }
        const Path px = simulate_path(ac, x, cfg);
        const Path py = simulate_path(ac, y, cfg);
        double worst = 0.0;
        for (size_t i = 0; i < px.states.size(); ++i) {
            const double bound = std::exp(L * px.time(static_cast<int>(i))) * (x - y).norm();
            worst = std::max(worst, (px.states[i] - py.states[i]).norm() - bound);
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("free energy never increases along the deterministic flow") {
    ModelSpec ac = ac_model(5, 64.0);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 0.5;
    cfg.noise_off = true;
    const Vec x0 = 0.5 * random_field(1, 5, 77).coeffs;
    const Path p = simulate_path(ac, x0, cfg);
    double prev = free_energy(ac.wrap(p.states.front()), ac.potential);
    for (size_t i = 1; i < p.states.size(); ++i) {
        const double e = free_energy(ac.wrap(p.states[i]), ac.potential);
        CHECK(e <= prev + cfg.dt * 1e-6);
        prev = e;
    }
}

TEST_CASE("aborted members are recorded, not dropped") {
    // potential engineered to blow up: huge linear growth makes EM unstable
    ModelSpec bad = ac_model(5, 1e6, "quadratic");
    bad.potential.vp = [](double r) { return -1e8 * r; };   // runaway feedback
    SimConfig cfg;
    cfg.dt = 0.5;
    cfg.T = 50.0;
    cfg.scheme = Scheme::EulerMaruyama;
    cfg.ensemble = 4;
    Vec x0 = Vec::Constant(5, 1.0);
    const EnsembleResult ens =
        simulate_ensemble(bad, x0, cfg, [](const Path& p) { return p.states.back().norm(); });
    CHECK(ens.aborted.size() == 4);
    CHECK(ens.completed().empty());
    for (double v : ens.samples) CHECK(std::isnan(v));
}

TEST_CASE("stream seeds depend only on master seed and member index") {
    CHECK(substream_seed(1, 2) == substream_seed(1, 2));
    CHECK(substream_seed(1, 2) != substream_seed(1, 3));
    CHECK(substream_seed(1, 2) != substream_seed(2, 2));
}
