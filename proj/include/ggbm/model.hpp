#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ggbm {

// The (beta, alpha, d) triple defining the process family.
struct ModelParams {
    double beta = 1.0;   // (0, 1]
    double alpha = 1.0;  // (0, 2)
    int d = 1;

    ModelParams() = default;
    ModelParams(double beta_, double alpha_, int d_) : beta(beta_), alpha(alpha_), d(d_) {
        if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("beta must be in (0,1]");
        if (!(alpha > 0.0) || !(alpha < 2.0)) throw std::invalid_argument("alpha must be in (0,2)");
        if (d < 1) throw std::invalid_argument("d must be a positive integer");
    }

    // the finiteness boundary of the regularized self-intersection local time
    bool alpha_d_lt_2() const { return alpha * d < 2.0; }
};

// Uniform discretization of [0, t_max]; times[0] = 0, times[n-1] = t_max.
struct TimeGrid {
    double t_max = 1.0;
    std::size_t n = 2;
    std::vector<double> times;

    TimeGrid() = default;
    TimeGrid(double t_max_, std::size_t n_) : t_max(t_max_), n(n_) {
        if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
        if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
        times.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            times[i] = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    double dt() const { return t_max / static_cast<double>(n - 1); }

    // exact index of an on-grid time; throws for off-grid queries
    // (no interpolation between grid points)
    std::size_t index_of(double t) const {
        double pos = t / dt();
        auto i = static_cast<std::ptrdiff_t>(pos + 0.5);
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(n) ||
            std::fabs(times[static_cast<std::size_t>(i)] - t) > 1e-9 * t_max)
            throw std::invalid_argument("time is not on the grid");
        return static_cast<std::size_t>(i);
    }
};

}  // namespace ggbm
