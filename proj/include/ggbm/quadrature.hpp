#pragma once

#include <functional>

namespace ggbm::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int status = 0;  // 0 = converged (GSL_SUCCESS)

    bool ok() const { return status == 0; }
};

using Fn = std::function<double(double)>;

// Adaptive Gauss-Kronrod on [a,b] (smooth integrands).
Result integrate(const Fn& f, double a, double b, double abs_tol, double rel_tol = 1e-12);

// Adaptive with extrapolation on [a,b]; handles integrable endpoint
// singularities.
Result integrate_singular(const Fn& f, double a, double b, double abs_tol, double rel_tol = 1e-12);

// [a, +inf)
Result integrate_upper_infinite(const Fn& f, double a, double abs_tol, double rel_tol = 1e-12);

// (-inf, b]
Result integrate_lower_infinite(const Fn& f, double b, double abs_tol, double rel_tol = 1e-12);

}  // namespace ggbm::quad
