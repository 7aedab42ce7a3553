#pragma once

#include <string>

namespace ggbm::specfun {

// Supported evaluation ranges. Values outside are rejected, not degraded.
inline constexpr double kMlArgMax = 100.0;  // |x| bound for ml_eval / ml_deriv
inline constexpr int kMaxDerivOrder = 8;    // n bound for ml_deriv
inline constexpr double kLaplaceSMax = 50.0;
inline constexpr double kMinAbsTol = 1e-13;

enum class Method { series, asymptotic, quadrature };

struct EvalResult {
    double value = 0.0;
    double est_error = 0.0;  // <= requested abs_tol on success
    int terms_used = 0;
    Method method = Method::series;
};

// Mittag-Leffler E_beta(x) = sum_n x^n / Gamma(beta n + 1), beta in (0,1].
//
// Strategy: the series is summed in double first and re-summed in
// double-double when the alternating-series cancellation (tracked via the
// largest term) would eat the tolerance. Past the cancellation budget two
// large-argument routes take over for x < 0: the algebraic asymptotic
// expansion sum_k (-1)^(k-1) |x|^(-k) / Gamma(1 - beta k) truncated at its
// smallest term, and the spectral integral
//   E_beta(-y) = sin(beta pi)/(pi beta) *
//                Int_0^inf exp(-y u^(1/beta)) / (u^2 + 2u cos(beta pi) + 1) du,
// whichever meets abs_tol first. For x > 0 all terms are positive and the
// plain series holds until the value overflows the double range (reported).
EvalResult ml_eval(double beta, double x, double abs_tol);

// n-th derivative of E_beta at x <= 0 via the termwise-differentiated
// series (spectral route past the cancellation budget). All derivatives of
// E_beta are nonnegative on the closed negative axis; that is the complete
// monotonicity witness of x -> E_beta(-x).
EvalResult ml_deriv(double beta, double x, int n, double abs_tol);

// M-Wright M_beta(x) = sum_n (-x)^n / (n! Gamma(-beta n + 1 - beta)),
// beta in (0,1), x >= 0. Series in double/double-double as for ml_eval; the
// documented large-x method is the saddle-point form
//   M_beta(x) ~ (beta x)^((beta-1/2)/(1-beta)) / sqrt(2 pi (1-beta)) *
//               exp(-(1-beta) beta^(beta/(1-beta)) x^(1/(1-beta))),
// used when the series cancellation exceeds the tolerance (by then the
// value itself is far below any supported abs_tol).
EvalResult mwright_eval(double beta, double x, double abs_tol);

// | Int_0^inf exp(-s tau) M_beta(tau) dtau  -  ml_eval(beta, -s) |
// by adaptive quadrature of mwright_eval; the consistency defect of the two
// implementations. s in [0, kLaplaceSMax].
double mwright_laplace_residual(double beta, double s, double abs_tol = 1e-9);

// Asymptotic decay envelope of M_beta: coefficients of
// value ~ amp * x^pow * exp(-b * x^c). Exposed for tail-cutoff decisions in
// the quadrature oracles.
struct MwrightTail {
    double b = 0.0;    // exp coefficient
    double c = 0.0;    // exp exponent, 1/(1-beta)
    double pow = 0.0;  // algebraic power
    double amp = 0.0;  // prefactor
    double operator()(double x) const;
};
MwrightTail mwright_tail(double beta);

// Smallest T with the M_beta envelope below `threshold` for x >= T.
double mwright_support_cut(double beta, double threshold);

}  // namespace ggbm::specfun
