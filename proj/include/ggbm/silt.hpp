#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ggbm/model.hpp"
#include "ggbm/rng.hpp"
#include "ggbm/sampler.hpp"

namespace ggbm::silt {

// Gaussian mollifier (2 pi eps)^(-d/2) exp(-|x|^2 / (2 eps)); integrates to 1.
double heat_kernel(int d, double eps, const std::vector<double>& x);

// Double Riemann sum Delta^2 sum_{i,j} heat_kernel(d, eps, B(t_i) - B(t_j))
// over the path's grid. Diagonal terms contribute (2 pi eps)^(-d/2) each.
double silt_estimate(const sampler::GgbmPath& path, double eps, bool diagonal_included = true);

// all epsilons of a sweep in one pass over the pair set
std::vector<double> silt_estimate_multi(const sampler::GgbmPath& path,
                                        const std::vector<double>& eps_list,
                                        bool diagonal_included = true);

struct SiltEstimate {
    ModelParams params;
    double t = 0.0;
    double eps = 0.0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    std::size_t n_paths = 0;
    bool diagonal_included = true;
};

// Monte Carlo mean of the regularized SILT over n_paths seeded paths.
SiltEstimate silt_mc(const ModelParams& params, const TimeGrid& grid, double eps,
                     std::size_t n_paths, const rng::SeedSpec& seed, int threads = 1,
                     bool diagonal_included = true);

// Oracle values. divergent_exponent names the analytic reason when the value
// is +infinity (detected by exponent pre-screening, never by timeout).
struct OracleValue {
    double value = 0.0;
    double est_error = 0.0;
    std::string divergent_exponent;  // empty when finite

    bool finite() const { return divergent_exponent.empty(); }
};

// E[L_eps(t)] = 2 Int_0^t (t-r) E_tau[(2 pi (eps + tau r^alpha))^(-d/2)] dr,
// the tau-average under M_beta (point mass at 1 for beta = 1).
// eps = 0 is admitted: finite iff alpha d < 2 and (beta = 1 or d = 1).
OracleValue expected_silt_oracle(const ModelParams& params, double eps, double t,
                                 double abs_tol = 1e-9);

// Exact mean of the discrete estimator on a grid:
// Delta^2 [ n g(0) + 2 sum_k (n-k) g(k Delta) ], g(r) = the tau-averaged
// kernel above. The gap to expected_silt_oracle is the Riemann-sum error.
OracleValue expected_silt_discrete(const ModelParams& params, const TimeGrid& grid, double eps,
                                   bool diagonal_included = true, double abs_tol = 1e-9);

struct BoundReport {
    double beta = 1.0, alpha = 1.0;
    int d = 1;
    double t = 0.0;
    double c = 0.0;
    double K_value = 0.0;  // Int tau^(-1/2) M_beta(tau) exp(tau c / 2) dtau
    double bound = 0.0;    // 2 K^d exp(dc/2) t^(2-ad/2) / ((1-ad/2)(2-ad/2))
    bool finite = false;
};

BoundReport silt_bound(const ModelParams& params, double t, double c);

// The factorized T-transform display evaluated on the worst case allowed by
// Cauchy-Schwarz, <phi_i, eta_s - eta_u>^2 = |phi_i|^2 |eta_s - eta_u|^2.
// With that substitution the exp(-tau c_i/2) of the E_beta argument cancels
// the saturated exp(+tau c_i/2), so the value reduces to
//   prod_i J * 2 t^(2-ad/2)/((1-ad/2)(2-ad/2)),  J = Int tau^(-1/2) M_beta,
// independent of the phi norms; it stays below silt_bound, which keeps the
// exp(c/2) K(c) majorant per factor. +infinity when alpha d >= 2.
OracleValue t_transform_factorized(const ModelParams& params, double t,
                                   const std::vector<double>& phi_norms_sq,
                                   double abs_tol = 1e-9);

enum class SweepVerdict { converging, diverging, inconclusive };
enum class DivergenceKind { none, power, logarithmic };

struct SweepReport {
    ModelParams params;
    double t = 0.0;
    std::vector<double> eps_list;  // strictly decreasing
    std::vector<SiltEstimate> estimates;
    std::vector<double> oracle_values;
    std::vector<bool> eps_below_grid_scale;  // eps < 10 Delta^alpha warning
    double oracle_tail_slope = 0.0;          // log-log fit over the smallest eps
    SweepVerdict verdict = SweepVerdict::inconclusive;
    DivergenceKind divergence = DivergenceKind::none;
};

// Runs the estimator and the oracle across the eps grid and classifies the
// eps -> 0 behaviour of the oracle tail.
SweepReport eps_sweep(const ModelParams& params, const TimeGrid& grid,
                      const std::vector<double>& eps_list, std::size_t n_paths,
                      const rng::SeedSpec& seed, int threads = 1);

const char* to_string(SweepVerdict v);
const char* to_string(DivergenceKind k);

}  // namespace ggbm::silt
