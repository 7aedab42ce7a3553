#pragma once

namespace ggbm::fracops {

// Normalization sqrt(alpha sin(alpha pi/2) Gamma(alpha)); equals 1 at alpha=1.
double kernel_normalization(double alpha);

// Riemann-Liouville right-tail fractional integral of the indicator 1_[0,t):
//   (I_-^r 1_[0,t))(x) = [((t-x)_+)^r - ((-x)_+)^r] / Gamma(r+1),  r in (0,1].
double frac_integral_indicator(double r, double t, double x);

// eta_t(x) = (M_-^(alpha/2) 1_[0,t))(x)
//          = K_{alpha/2} [((t-x)_+)^((alpha-1)/2) - ((-x)_+)^((alpha-1)/2)]
//            / Gamma((alpha+1)/2),
// the one closed form covering both the fractional-derivative (alpha<1) and
// fractional-integral (alpha>1) branches; at alpha=1 it is the indicator
// itself. Evaluation exactly at the x=t singularity is rejected for alpha<1.
double m_indicator(double alpha, double t, double x);

// (eta_t, eta_s)_L2 = (t^alpha + s^alpha - |t-s|^alpha) / 2
double cov_kernel(double alpha, double t, double s);

// The same inner product by singularity-aware quadrature over the three
// smooth pieces of the real line; the independent check of cov_kernel.
// abs_tol is the quadrature budget; the achieved estimate is added to the
// returned defect accounting by the caller.
struct QuadInner {
    double value = 0.0;
    double est_error = 0.0;
};
QuadInner eta_l2_inner(double alpha, double t, double s, double abs_tol);

}  // namespace ggbm::fracops
