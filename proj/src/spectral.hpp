#ifndef SNDIFF_SPECTRAL_HPP
#define SNDIFF_SPECTRAL_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace sndiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Tensor Fourier basis on the periodic torus [0,1]^d.
//
// 1-D basis, frozen convention:
//   phi_1(r) = 1
//   phi_{2k}(r)   = sqrt(2) sin(2 pi k r),  k = 1, 2, ...
//   phi_{2k+1}(r) = sqrt(2) cos(2 pi k r)
// so index j carries frequency floor(j/2) and -phi_j'' = mu(j) phi_j.
//
// d-dimensional modes are products over a d-tuple (k_1..k_d), each in 1..m,
// stored lexicographically with k_1 most significant.

// Frequency of 1-D mode j (j >= 1).
int mode_frequency(int j);

// Eigenvalue mu_j of -d^2/dr^2 on phi_j: 0 for j=1, (2 pi k)^2 for frequency k.
double mu(int j);

// phi_j evaluated at r in [0,1].
double basis_1d(int j, double r);

struct SpectralField {
    int dim = 1;   // spatial dimension d, 1..3
    int m = 1;     // per-dimension truncation
    Vec coeffs;    // length m^dim, lexicographic over the index tuple

    int size() const { return static_cast<int>(coeffs.size()); }
    double norm() const { return coeffs.norm(); }
};

SpectralField zero_field(int dim, int m);

// Number of coefficients m^d.
int tensor_size(int dim, int m);

// Decode flat index (0-based) into the 1-based tuple (k_1..k_d).
std::array<int, 3> decode_index(int flat, int dim, int m);

// Sum of 1-D eigenvalues over the tuple at flat index: the -Laplacian
// eigenvalue of the tensor mode.
double laplace_eigenvalue(int flat, int dim, int m);

// Product of 1-D eigenvalues over the tuple (lambda_k of the eigenvalue
// sum bound; vanishes whenever any component is the constant mode).
double eigenvalue_product(int flat, int dim, int m);

// e_k(theta) for a 1-based tuple k.
double eval_basis(const std::vector<int>& k, const std::vector<double>& theta);

struct GridField {
    int dim = 1;
    int q = 1;     // points per axis, uniform grid theta_i = i/q
    Vec values;    // length q^dim, same lexicographic layout

    int size() const { return static_cast<int>(values.size()); }
};

// Smallest alias-free collocation grid for truncation m.
int default_grid_size(int m);

// Collocation on the uniform q^d grid. Requires q >= 2m+1.
GridField to_grid(const SpectralField& f, int q);

// Exact trigonometric quadrature back to coefficients. Requires q >= 2m+1.
SpectralField to_spectral(const GridField& g, int m);

// L2 norm of a grid field under the quadrature weight (1/q)^d.
double grid_norm(const GridField& g);

double grid_inner(const GridField& a, const GridField& b);

// Laplacian in coefficient space: coefficient k scaled by -sum_j mu(k_j).
SpectralField laplacian(const SpectralField& f);

// Exact spectral derivative d/d theta, d = 1 only. For even m the paired
// cosine of the top sine mode falls outside the truncation and is dropped,
// matching a projected derivative P_m d_theta.
SpectralField d_theta(const SpectralField& f);

// Orthogonal projection onto the smaller truncation m2 <= m.
SpectralField project(const SpectralField& f, int m2);

// JSON object {dim, m, coeffs:[...]} with 17-significant-digit floats.
std::string field_to_json(const SpectralField& f);
SpectralField field_from_json(const std::string& text);

// Format a double with 17 significant digits (file-format helper).
std::string format_double(double v);

} // namespace sndiff

#endif
