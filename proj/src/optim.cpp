#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace sndiff {

BBResult bb_minimize(const std::function<double(const Vec&, Vec&)>& fg, Vec z0, int max_iters,
                     double grad_tol, int history) {
    BBResult res;
    Vec z = std::move(z0);
    Vec g(z.size()), g_prev(z.size());
    double f = fg(z, g);
    std::deque<double> recent{f};

    Vec z_prev = z;
    g_prev = g;
    double step = 1.0 / std::max(1.0, g.norm());

    int it = 0;
    for (; it < max_iters; ++it) {
        const double scaled = g.norm() / std::max(1.0, z.norm());
        if (scaled <= grad_tol) {
            res.converged = true;
            break;
        }
        if (it > 0) {
            const Vec s = z - z_prev;
            const Vec y = g - g_prev;
            const double sy = s.dot(y);
            step = (sy > 1e-300) ? s.squaredNorm() / sy : 1.0 / std::max(1.0, g.norm());
            step = std::clamp(step, 1e-12, 1e12);
        }

        const double fmax = *std::max_element(recent.begin(), recent.end());
        const double gg = g.squaredNorm();
        double t = step;
        Vec z_try;
        Vec g_try(z.size());
        double f_try = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            z_try = z - t * g;
            f_try = fg(z_try, g_try);
            if (std::isfinite(f_try) && f_try <= fmax - 1e-4 * t * gg) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        z_prev = z;
        g_prev = g;
        z = std::move(z_try);
        g = std::move(g_try);
        f = f_try;
        recent.push_back(f);
        if (static_cast<int>(recent.size()) > history) recent.pop_front();
    }

    res.z = std::move(z);
    res.value = f;
    res.grad_norm = g.norm() / std::max(1.0, res.z.norm());
    res.iterations = it;
    return res;
}

} // namespace sndiff
