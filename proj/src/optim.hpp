#ifndef SNDIFF_OPTIM_HPP
#define SNDIFF_OPTIM_HPP

#include "spectral.hpp"

#include <functional>

namespace sndiff {

struct BBResult {
    Vec z;
    double value = 0.0;
    double grad_norm = 0.0;   // scaled: ||g|| / max(1, ||z||)
    int iterations = 0;
    bool converged = false;
};

// Barzilai-Borwein gradient descent with nonmonotone backtracking.
// `fg` returns the objective and fills the gradient.
BBResult bb_minimize(const std::function<double(const Vec&, Vec&)>& fg, Vec z0, int max_iters,
                     double grad_tol, int history = 8);

} // namespace sndiff

#endif
