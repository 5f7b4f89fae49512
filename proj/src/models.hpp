#ifndef SNDIFF_MODELS_HPP
#define SNDIFF_MODELS_HPP

#include "spectral.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace sndiff {

enum class Family { AllenCahn, CahnHilliard, Quasilinear, FiniteDimFW };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

// Scalar potential with declared curvature bound and quadratic lower bound.
struct Potential {
    std::string name;            // built-in id, echoed in config files
    std::function<double(double)> v, vp, vpp;
    double sup_vpp = 0.0;        // sup |V''|
    double sup_vppp = 0.0;       // sup |V'''| (Cahn-Hilliard)
    double c1 = 0.0, c2 = 0.0;   // V(r) >= c1 + c2 r^2
};

// Built-ins: "double-well" (C2 blend of (r^2-1)^2/4 + shift, quadratic
// outside |r| <= R), "quadratic" (a r^2/2 + shift), "zero".
Potential make_potential(const std::string& name, double R = 2.0, double shift = 1.0,
                         double a = 1.0);

struct Noise {
    enum class Kind { AdditiveIdentity, MultiplicativeAC };
    Kind kind = Kind::AdditiveIdentity;
    std::string name;            // built-in id
    // multiplicative case: sigma(theta; x) = phi(theta, <x, xi_1>, ..., <x, xi_K>)
    std::vector<Vec> probes;     // xi_j in coefficient space
    std::function<double(double, const std::vector<double>&)> phi;
    double sup_phi = 1.0;        // M = sup |phi|
    double inf_phi = 1.0;        // declared lower bound (control residual divides by sigma)
    double lip_r = 0.0;          // Lipschitz constant in the probe values
    bool state_independent = true;
};

// Built-ins: "additive-identity", "constant" (sigma == c),
// "probe-tanh" (sigma = base + amp sin(2 pi theta) tanh(<x, xi>)).
Noise make_noise(const std::string& name, int dim, int m, double c = 1.0, double base = 1.0,
                 double amp = 0.25);

// Scalar flux with bounded derivative (quasilinear family).
struct Flux {
    std::string name;
    std::function<double(double)> f, fp;
    double sup_fp = 0.0;
};

// Built-ins: "burgers-clip" (r^2/2 blended to linear growth outside |r| <= R),
// "linear" (c r), "constant".
Flux make_flux(const std::string& name, double R = 2.0, double c = 1.0);

// Finite-dimensional drift/diffusion pair with declared Lipschitz constants.
struct FWModel {
    std::string drift_name, sigma_name;
    int d = 1;
    std::function<Vec(const Vec&)> b;
    std::function<Mat(const Vec&)> jb;      // Jacobian of b
    std::function<Mat(const Vec&)> sigma;
    double lip_b = 1.0, lip_sigma = 0.0;
    double sigma_inf = 1.0;                 // declared inf of smallest singular value
    bool sigma_state_independent = true;
};

// Drift built-ins: "ou" (-rate x), "linear" (A x), "grad-double-well"
// (componentwise -V'(x_i) of the blended double well).
// Sigma built-ins: "identity", "constant" (c I), "scalar-tanh" (d=1,
// c0 + c1 tanh(x)).
FWModel make_fw_drift(const std::string& name, int d, double rate = 1.0,
                      const Mat& A = Mat());
void set_fw_sigma(FWModel& fw, const std::string& name, double c = 1.0, double c0 = 1.0,
                  double c1 = 0.25);

struct ModelSpec {
    Family family = Family::AllenCahn;
    int dim = 1;      // spatial dimension (SPDE) or state dimension (finite-dim)
    int m = 1;        // per-dimension spectral truncation (SPDE families)
    double n = 1.0;   // noise scale: diffusion enters as n^{-1/2}
    double alpha = 1.0;  // viscosity (quasilinear)
    Potential potential;
    Noise noise;
    Flux flux;
    FWModel fw;

    int state_size() const;
    int grid_size() const { return default_grid_size(m); }
    bool is_spde() const { return family != Family::FiniteDimFW; }
    SpectralField wrap(const Vec& x) const;
};

std::string model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const std::string& text);

// sigma(theta_i; x) on the q^dim collocation grid (SPDE families).
Vec sigma_grid(const ModelSpec& spec, const Vec& x);

// The simulated (unshifted) drift of the family at truncated state x.
Vec drift(const ModelSpec& spec, const Vec& x);

// Directional derivative of the drift and its adjoint.
Vec drift_jvp(const ModelSpec& spec, const Vec& x, const Vec& v);
Vec drift_vjp(const ModelSpec& spec, const Vec& x, const Vec& w);

// B(x) u truncated. For finite-dim models u has length d and B = sigma(x).
Vec diffusion_apply(const ModelSpec& spec, const Vec& x, const Vec& u);

// Per-component decay rate of the stiff linear part (zero for finite-dim);
// the semi-implicit scheme advances this part by exp(-rate dt).
Vec linear_decay_rates(const ModelSpec& spec);

// drift minus the stiff linear part.
Vec nonstiff_drift(const ModelSpec& spec, const Vec& x);

// Dissipative shift omega of the family and the shifted operator
// C x = drift(x) [+ P V'(0) for Allen-Cahn] - omega x.
double shift_omega(const ModelSpec& spec);
Vec shifted_operator(const ModelSpec& spec, const Vec& x);

struct DissipativityReport {
    int trials = 0;
    double max_inner = 0.0;      // max over pairs of <Cx - Cy, x - y>
    bool pass = false;
    Vec witness_x, witness_y;    // pair attaining the max
};

DissipativityReport dissipativity_check(const ModelSpec& spec, int trials, std::uint64_t seed,
                                        double tol = 1e-9);

struct ScalingReport {
    double ratio = 0.0;       // m^{4d}/n, m^{3d}/n or m^3/n by family
    double budget = 1.0;
    bool pass = false;
};

ScalingReport scaling_check(const ModelSpec& spec, double budget = 1.0);

// Sampled validation of the declared potential/noise bounds. Returns an
// empty string on success, else a diagnostic naming the violated bound.
std::string validate_model(const ModelSpec& spec);

} // namespace sndiff

#endif
