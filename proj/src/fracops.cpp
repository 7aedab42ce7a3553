#include "ggbm/fracops.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ggbm/errors.hpp"
#include "ggbm/quadrature.hpp"

namespace ggbm::fracops {

namespace {

void validate_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw std::invalid_argument("alpha must be in (0,2)");
}

double pow_plus(double v, double p) { return v > 0.0 ? std::pow(v, p) : 0.0; }

}  // namespace

double kernel_normalization(double alpha) {
    validate_alpha(alpha);
    return std::sqrt(alpha * std::sin(alpha * M_PI / 2.0) * std::tgamma(alpha));
}

double frac_integral_indicator(double r, double t, double x) {
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("order r must be in (0,1]");
    if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
    return (pow_plus(t - x, r) - pow_plus(-x, r)) / std::tgamma(r + 1.0);
}

double m_indicator(double alpha, double t, double x) {
    validate_alpha(alpha);
    if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
    if (alpha == 1.0) return (x >= 0.0 && x < t) ? 1.0 : 0.0;
    if (alpha < 1.0 && x == t)
        throw std::invalid_argument("eta_t has an integrable singularity at x = t for alpha < 1");
    double q = (alpha - 1.0) / 2.0;
    double c = kernel_normalization(alpha) / std::tgamma((alpha + 1.0) / 2.0);
    return c * (pow_plus(t - x, q) - pow_plus(-x, q));
}

double cov_kernel(double alpha, double t, double s) {
    validate_alpha(alpha);
    if (t < 0.0 || s < 0.0) throw std::invalid_argument("t, s must be >= 0");
    return 0.5 * (std::pow(t, alpha) + std::pow(s, alpha) - std::pow(std::fabs(t - s), alpha));
}

QuadInner eta_l2_inner(double alpha, double t, double s, double abs_tol) {
    validate_alpha(alpha);
    if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
    if (t < 0.0 || s < 0.0) throw std::invalid_argument("t, s must be >= 0");
    if (t < s) std::swap(t, s);
    if (s == 0.0) return {0.0, 0.0};

    const double q = (alpha - 1.0) / 2.0;
    const double c = kernel_normalization(alpha) / std::tgamma((alpha + 1.0) / 2.0);
    const double c2 = c * c;
    const double gap = t - s;

    // [0, s]: eta_s's endpoint singularity removed by u = (s-x)^((alpha+1)/2)
    const double p_sub = 2.0 / (alpha + 1.0);
    quad::Fn fa = [&](double u) -> double {
        double sx = std::pow(u, p_sub);  // s - x
        return c2 * p_sub * std::pow(gap + sx, q);
    };
    auto ra = quad::integrate_singular(fa, 0.0, std::pow(s, 1.0 / p_sub), 0.4 * abs_tol);

    // (-inf, 0]: both kernels active, algebraic tail
    quad::Fn fb = [&](double x) -> double {
        double a = pow_plus(t - x, q) - pow_plus(-x, q);
        double b = pow_plus(s - x, q) - pow_plus(-x, q);
        return c2 * a * b;
    };
    auto rb = quad::integrate_lower_infinite(fb, 0.0, 0.4 * abs_tol);

    double err = ra.abs_error + rb.abs_error;
    if ((!ra.ok() || !rb.ok()) && err > abs_tol) {
        std::ostringstream os;
        os << "eta inner-product quadrature did not converge (alpha=" << alpha << ", t=" << t
           << ", s=" << s << ", achieved=" << err << ")";
        throw numerical_error(os.str());
    }
    return {ra.value + rb.value, err};
}

}  // namespace ggbm::fracops
