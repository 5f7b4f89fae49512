#include "spectral.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace sndiff {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
} // namespace

int mode_frequency(int j) {
    if (j < 1) throw std::invalid_argument("mode index must be >= 1");
    return j / 2;
}

double mu(int j) {
    const double k = mode_frequency(j);
    return kTwoPi * kTwoPi * k * k;
}

double basis_1d(int j, double r) {
    if (j == 1) return 1.0;
    const int k = mode_frequency(j);
    const double arg = kTwoPi * k * r;
    return (j % 2 == 0) ? kSqrt2 * std::sin(arg) : kSqrt2 * std::cos(arg);
}

SpectralField zero_field(int dim, int m) {
    SpectralField f;
    f.dim = dim;
    f.m = m;
    f.coeffs = Vec::Zero(tensor_size(dim, m));
    return f;
}

int tensor_size(int dim, int m) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1..3");
    if (m < 1) throw std::invalid_argument("truncation m must be >= 1");
    int s = 1;
    for (int a = 0; a < dim; ++a) s *= m;
    return s;
}

std::array<int, 3> decode_index(int flat, int dim, int m) {
    std::array<int, 3> k{1, 1, 1};
    for (int a = dim - 1; a >= 0; --a) {
        k[a] = flat % m + 1;
        flat /= m;
    }
    return k;
}

double laplace_eigenvalue(int flat, int dim, int m) {
    const auto k = decode_index(flat, dim, m);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += mu(k[a]);
    return s;
}

double eigenvalue_product(int flat, int dim, int m) {
    const auto k = decode_index(flat, dim, m);
    double p = 1.0;
    for (int a = 0; a < dim; ++a) p *= mu(k[a]);
    return p;
}

double eval_basis(const std::vector<int>& k, const std::vector<double>& theta) {
    if (k.size() != theta.size()) throw std::invalid_argument("eval_basis: dim mismatch");
    double v = 1.0;
    for (size_t a = 0; a < k.size(); ++a) v *= basis_1d(k[a], theta[a]);
    return v;
}

int default_grid_size(int m) { return 2 * m + 1; }

namespace {

// Contract axis `axis` of a dim-dimensional tensor (extent `in` per handled
// axis so far) with the q_out x q_in matrix M.
Vec apply_axis(const Vec& data, int dim, const std::array<int, 3>& extents,
               int axis, const Mat& M) {
    const int in = extents[axis];
    const int out = static_cast<int>(M.rows());
    int lead = 1, trail = 1;
    for (int a = 0; a < axis; ++a) lead *= extents[a];
    for (int a = axis + 1; a < dim; ++a) trail *= extents[a];

    Vec result(static_cast<long>(lead) * out * trail);
    for (int l = 0; l < lead; ++l) {
        for (int t = 0; t < trail; ++t) {
            for (int o = 0; o < out; ++o) {
                double acc = 0.0;
                for (int i = 0; i < in; ++i)
                    acc += M(o, i) * data[(static_cast<long>(l) * in + i) * trail + t];
                result[(static_cast<long>(l) * out + o) * trail + t] = acc;
            }
        }
    }
    return result;
}

Mat synthesis_matrix(int q, int m) {
    Mat E(q, m);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < m; ++j) E(i, j) = basis_1d(j + 1, static_cast<double>(i) / q);
    return E;
}

} // namespace

GridField to_grid(const SpectralField& f, int q) {
    if (q < 2 * f.m + 1)
        throw std::invalid_argument("to_grid: q must be >= 2m+1 for alias-free evaluation");
    const Mat E = synthesis_matrix(q, f.m);
    std::array<int, 3> ext{f.m, f.m, f.m};
    Vec data = f.coeffs;
    for (int a = 0; a < f.dim; ++a) {
        data = apply_axis(data, f.dim, ext, a, E);
        ext[a] = q;
    }
    GridField g;
    g.dim = f.dim;
    g.q = q;
    g.values = std::move(data);
    return g;
}

SpectralField to_spectral(const GridField& g, int m) {
    if (g.q < 2 * m + 1)
        throw std::invalid_argument("to_spectral: q must be >= 2m+1 for alias-free quadrature");
    const Mat A = synthesis_matrix(g.q, m).transpose() / g.q;
    std::array<int, 3> ext{g.q, g.q, g.q};
    Vec data = g.values;
    for (int a = 0; a < g.dim; ++a) {
        data = apply_axis(data, g.dim, ext, a, A);
        ext[a] = m;
    }
    SpectralField f;
    f.dim = g.dim;
    f.m = m;
    f.coeffs = std::move(data);
    return f;
}

double grid_norm(const GridField& g) {
    double w = 1.0;
    for (int a = 0; a < g.dim; ++a) w /= g.q;
    return std::sqrt(w * g.values.squaredNorm());
}

double grid_inner(const GridField& a, const GridField& b) {
    if (a.dim != b.dim || a.q != b.q) throw std::invalid_argument("grid_inner: shape mismatch");
    double w = 1.0;
    for (int d = 0; d < a.dim; ++d) w /= a.q;
    return w * a.values.dot(b.values);
}

SpectralField laplacian(const SpectralField& f) {
    SpectralField out = f;
    for (int i = 0; i < f.size(); ++i) out.coeffs[i] *= -laplace_eigenvalue(i, f.dim, f.m);
    return out;
}

SpectralField d_theta(const SpectralField& f) {
    if (f.dim != 1) throw std::invalid_argument("d_theta: defined for dim = 1 only");
    SpectralField out = zero_field(1, f.m);
    for (int j = 2; j <= f.m; ++j) {
        const int k = mode_frequency(j);
        const double w = kTwoPi * k;
        if (j % 2 == 0) {
            // sin -> cos, partner index j+1 (dropped when outside truncation)
            if (j + 1 <= f.m) out.coeffs[j] += w * f.coeffs[j - 1];
        } else {
            out.coeffs[j - 2] -= w * f.coeffs[j - 1];
        }
    }
    return out;
}

SpectralField project(const SpectralField& f, int m2) {
    if (m2 > f.m) throw std::invalid_argument("project: target truncation exceeds source");
    SpectralField out = f;
    for (int i = 0; i < f.size(); ++i) {
        const auto k = decode_index(i, f.dim, f.m);
        for (int a = 0; a < f.dim; ++a)
            if (k[a] > m2) {
                out.coeffs[i] = 0.0;
                break;
            }
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string field_to_json(const SpectralField& f) {
    std::string out = "{\"dim\": " + std::to_string(f.dim) + ", \"m\": " + std::to_string(f.m) +
                      ", \"coeffs\": [";
    for (int i = 0; i < f.size(); ++i) {
        if (i) out += ", ";
        out += format_double(f.coeffs[i]);
    }
    out += "]}";
    return out;
}

SpectralField field_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SpectralField f;
    f.dim = j.at("dim").get<int>();
    f.m = j.at("m").get<int>();
    const auto& c = j.at("coeffs");
    if (static_cast<int>(c.size()) != tensor_size(f.dim, f.m))
        throw std::invalid_argument("field_from_json: coeffs length != m^dim");
    f.coeffs = Vec(c.size());
    for (size_t i = 0; i < c.size(); ++i) f.coeffs[static_cast<long>(i)] = c[i].get<double>();
    return f;
}

} // namespace sndiff
