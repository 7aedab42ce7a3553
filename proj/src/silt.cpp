#include "ggbm/silt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ggbm/errors.hpp"
#include "ggbm/quadrature.hpp"
#include "ggbm/specfun.hpp"

namespace ggbm::silt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(-q) below this threshold cannot move the pair sums at double precision
constexpr double kExpCut = 50.0;

double mollifier_norm(int d, double eps) {
    return std::pow(2.0 * M_PI * eps, -0.5 * static_cast<double>(d));
}

// Int_0^inf tau^(-1/2) M_beta(tau) exp(tau c / 2) dtau; c = 0 gives the
// E[tau^(-1/2)] weight of the eps = 0 oracles.
quad::Result half_negative_moment(double beta, double c, double abs_tol) {
    if (beta == 1.0) return {std::exp(0.5 * c), 0.0, 0};
    double T = specfun::mwright_support_cut(beta, 1e-18);
    auto tail = specfun::mwright_tail(beta);
    while (T < 1e6 && tail(T) * std::exp(0.5 * c * T) > 1e-18) T *= 1.3;
    quad::Fn f = [&](double tau) -> double {
        if (tau <= 0.0) return 0.0;
        double m = specfun::mwright_eval(beta, tau, 1e-12).value;
        return m * std::exp(0.5 * c * tau) / std::sqrt(tau);
    };
    return quad::integrate_singular(f, 0.0, T, abs_tol);
}

// tau-averaged mollified kernel g(r) = E_tau[(2 pi (eps + tau r^alpha))^(-d/2)]
class TauKernel {
  public:
    TauKernel(const ModelParams& params, double eps, double inner_tol)
        : params_(params), eps_(eps), inner_tol_(inner_tol) {
        if (params.beta < 1.0) {
            tau_cut_ = specfun::mwright_support_cut(params.beta, 1e-18);
            if (eps_ == 0.0 && params_.d == 1) {
                auto j = half_negative_moment(params_.beta, 0.0, inner_tol_);
                j_half_ = j.value;
            }
        }
    }

    double operator()(double r) const {
        const double d2 = 0.5 * static_cast<double>(params_.d);
        if (params_.beta == 1.0) {
            return std::pow(2.0 * M_PI * (eps_ + std::pow(r, params_.alpha)), -d2);
        }
        if (r <= 0.0) return mollifier_norm(params_.d, eps_);  // Int M_beta = 1
        double ra = std::pow(r, params_.alpha);
        if (eps_ == 0.0) {
            // d = 1 only (d >= 2 pre-screened as divergent)
            return j_half_ / std::sqrt(2.0 * M_PI * ra);
        }
        quad::Fn f = [&](double tau) -> double {
            double m = tau <= 0.0 ? specfun::mwright_eval(params_.beta, 0.0, 1e-12).value
                                  : specfun::mwright_eval(params_.beta, tau, 1e-12).value;
            return m * std::pow(2.0 * M_PI * (eps_ + tau * ra), -d2);
        };
        auto q = quad::integrate(f, 0.0, tau_cut_, inner_tol_ * std::pow(2.0 * M_PI * eps_, -d2));
        return q.value;
    }

  private:
    ModelParams params_;
    double eps_;
    double inner_tol_;
    double tau_cut_ = 1.0;
    double j_half_ = 0.0;
};

std::string divergence_reason(const ModelParams& p, double /*eps*/) {
    std::ostringstream os;
    if (p.alpha * p.d >= 2.0) {
        os << "time integrand (s-u)^(-" << 0.5 * p.alpha * p.d
           << ") not integrable at s-u -> 0 (alpha d = " << p.alpha * p.d << " >= 2)";
        return os.str();
    }
    if (p.beta < 1.0 && p.d >= 2) {
        os << "tau integrand tau^(-" << 0.5 * p.d << ") M_beta(tau) not integrable at tau -> 0"
           << " (M_beta(0) = 1/Gamma(1-beta) > 0, d = " << p.d << " >= 2)";
        return os.str();
    }
    return {};
}

}  // namespace

double heat_kernel(int d, double eps, const std::vector<double>& x) {
    if (d < 1) throw std::invalid_argument("d must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
    if (x.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("point dimension mismatch");
    double q = 0.0;
    for (double v : x) q += v * v;
    return mollifier_norm(d, eps) * std::exp(-q / (2.0 * eps));
}

double silt_estimate(const sampler::GgbmPath& path, double eps, bool diagonal_included) {
    return silt_estimate_multi(path, {eps}, diagonal_included)[0];
}

std::vector<double> silt_estimate_multi(const sampler::GgbmPath& path,
                                        const std::vector<double>& eps_list,
                                        bool diagonal_included) {
    if (eps_list.empty()) throw std::invalid_argument("eps_list must be nonempty");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0)) throw std::invalid_argument("eps must be > 0");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw std::invalid_argument("eps_list must be strictly decreasing");
    }
    const std::size_t n = path.n();
    const int d = path.params.d;
    const double* v = path.values.data();
    const double dt = path.grid->dt();
    const std::size_t m = eps_list.size();

    std::vector<double> sums(m, 0.0);
    const double q_max = 2.0 * kExpCut * eps_list.front();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double q = 0.0;
            for (int c = 0; c < d; ++c) {
                double diff = v[c * n + i] - v[c * n + j];
                q += diff * diff;
            }
            if (q >= q_max) continue;
            for (std::size_t k = 0; k < m; ++k) {
                if (q >= 2.0 * kExpCut * eps_list[k]) break;
                sums[k] += std::exp(-q / (2.0 * eps_list[k]));
            }
        }
    }
    std::vector<double> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        double total = 2.0 * sums[k] + (diagonal_included ? static_cast<double>(n) : 0.0);
        out[k] = dt * dt * mollifier_norm(d, eps_list[k]) * total;
    }
    return out;
}

SiltEstimate silt_mc(const ModelParams& params, const TimeGrid& grid, double eps,
                     std::size_t n_paths, const rng::SeedSpec& seed, int threads,
                     bool diagonal_included) {
    if (n_paths < 2) throw std::invalid_argument("need at least 2 paths");
    sampler::GgbmSampler s(params, grid, sampler::FbmMethod::circulant);
    std::vector<double> per_path(n_paths, 0.0);
    sampler::for_each_path(s, seed, n_paths, threads,
                           [&](const sampler::GgbmPath& p, std::size_t i) {
                               per_path[i] = silt_estimate(p, eps, diagonal_included);
                           });
    double sum = 0.0, sum2 = 0.0;
    for (double x : per_path) {
        sum += x;
        sum2 += x * x;
    }
    double nd = static_cast<double>(n_paths);
    SiltEstimate est;
    est.params = params;
    est.t = grid.t_max;
    est.eps = eps;
    est.n_paths = n_paths;
    est.diagonal_included = diagonal_included;
    est.mean = sum / nd;
    double var = std::max(0.0, sum2 / nd - est.mean * est.mean);
    est.stderr_mean = std::sqrt(var / nd);
    return est;
}

OracleValue expected_silt_oracle(const ModelParams& params, double eps, double t,
                                 double abs_tol) {
    if (eps < 0.0) throw std::invalid_argument("eps must be >= 0");
    if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");

    OracleValue out;
    if (eps == 0.0) {
        std::string reason = divergence_reason(params, eps);
        if (!reason.empty()) {
            out.value = kInf;
            out.divergent_exponent = reason;
            return out;
        }
    }

    double inner_tol = abs_tol * 0.05 / std::max(1.0, t * t);
    TauKernel g(params, eps, inner_tol);
    quad::Fn f = [&](double r) { return 2.0 * (t - r) * g(r); };
    auto q = quad::integrate_singular(f, 0.0, t, 0.5 * abs_tol);
    out.value = q.value;
    out.est_error = q.abs_error + inner_tol * std::max(1.0, t * t);
    if (!q.ok() && out.est_error > abs_tol) {
        std::ostringstream os;
        os << "silt oracle quadrature did not converge (achieved " << out.est_error << ")";
        throw numerical_error(os.str());
    }
    return out;
}

OracleValue expected_silt_discrete(const ModelParams& params, const TimeGrid& grid, double eps,
                                   bool diagonal_included, double abs_tol) {
    if (!(eps > 0.0)) throw std::invalid_argument("discrete oracle needs eps > 0");
    const std::size_t n = grid.n;
    const double dt = grid.dt();
    double inner_tol = abs_tol * 0.05 / std::max(1.0, grid.t_max * grid.t_max);
    TauKernel g(params, eps, inner_tol);

    double total = diagonal_included ? static_cast<double>(n) * g(0.0) : 0.0;
    for (std::size_t k = 1; k < n; ++k)
        total += 2.0 * static_cast<double>(n - k) * g(static_cast<double>(k) * dt);

    OracleValue out;
    out.value = dt * dt * total;
    out.est_error = inner_tol * grid.t_max * grid.t_max + 1e-14 * out.value;
    return out;
}

BoundReport silt_bound(const ModelParams& params, double t, double c) {
    if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
    if (c < 0.0) throw std::invalid_argument("c must be >= 0");

    BoundReport rep;
    rep.beta = params.beta;
    rep.alpha = params.alpha;
    rep.d = params.d;
    rep.t = t;
    rep.c = c;

    auto k = half_negative_moment(params.beta, c, 1e-10);
    rep.K_value = k.value;
    bool k_ok = k.status == 0 || k.abs_error <= 1e-8;

    double ad2 = 0.5 * params.alpha * params.d;
    if (ad2 < 1.0 && k_ok) {
        rep.finite = true;
        rep.bound = 2.0 * std::pow(rep.K_value, params.d) *
                    std::exp(0.5 * c * params.d) * std::pow(t, 2.0 - ad2) /
                    ((1.0 - ad2) * (2.0 - ad2));
    } else {
        rep.finite = false;
        rep.bound = kInf;
    }
    return rep;
}

OracleValue t_transform_factorized(const ModelParams& params, double t,
                                   const std::vector<double>& phi_norms_sq, double abs_tol) {
    if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
    if (phi_norms_sq.size() != static_cast<std::size_t>(params.d))
        throw std::invalid_argument("need one |phi_i|^2 per coordinate");
    for (double c : phi_norms_sq)
        if (c < 0.0) throw std::invalid_argument("|phi_i|^2 must be >= 0");

    OracleValue out;
    double ad2 = 0.5 * params.alpha * params.d;
    if (ad2 >= 1.0) {
        std::ostringstream os;
        os << "time integrand (s-u)^(-" << ad2 << ") not integrable (alpha d = "
           << params.alpha * params.d << " >= 2)";
        out.value = kInf;
        out.divergent_exponent = os.str();
        return out;
    }

    // per-coordinate lambda integrals collapse to J = Int tau^(-1/2) M_beta:
    // the exp(-tau c_i/2) from the E_beta argument cancels the saturated
    // Cauchy-Schwarz exp(+tau c_i/2) exactly
    auto j = half_negative_moment(params.beta, 0.0, abs_tol * 0.1);
    quad::Fn f = [&](double r) {
        return 2.0 * (t - r) * std::pow(r, -params.alpha * params.d * 0.5);
    };
    auto q = quad::integrate_singular(f, 0.0, t, abs_tol * 0.4);
    out.value = std::pow(j.value, params.d) * q.value;
    out.est_error = q.abs_error * std::pow(j.value, params.d) +
                    params.d * j.abs_error * out.value / std::max(j.value, 1e-300);
    return out;
}

const char* to_string(SweepVerdict v) {
    switch (v) {
        case SweepVerdict::converging: return "converging";
        case SweepVerdict::diverging: return "diverging";
        default: return "inconclusive";
    }
}

const char* to_string(DivergenceKind k) {
    switch (k) {
        case DivergenceKind::power: return "power";
        case DivergenceKind::logarithmic: return "logarithmic";
        default: return "none";
    }
}

SweepReport eps_sweep(const ModelParams& params, const TimeGrid& grid,
                      const std::vector<double>& eps_list, std::size_t n_paths,
                      const rng::SeedSpec& seed, int threads) {
    if (eps_list.size() < 4) throw std::invalid_argument("eps_list needs >= 4 entries");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1]))
            throw std::invalid_argument("eps_list must be strictly decreasing");
    if (!(eps_list.front() / eps_list.back() >= 100.0))
        throw std::invalid_argument("eps_list must span at least two decades");

    SweepReport rep;
    rep.params = params;
    rep.t = grid.t_max;
    rep.eps_list = eps_list;

    const double grid_scale = 10.0 * std::pow(grid.dt(), params.alpha);
    for (double e : eps_list) rep.eps_below_grid_scale.push_back(e < grid_scale);

    // Monte Carlo estimates: one pass over each path's pair set for all eps
    sampler::GgbmSampler s(params, grid, sampler::FbmMethod::circulant);
    const std::size_t m = eps_list.size();
    std::vector<std::vector<double>> per_path(n_paths);
    sampler::for_each_path(s, seed, n_paths, threads,
                           [&](const sampler::GgbmPath& p, std::size_t i) {
                               per_path[i] = silt_estimate_multi(p, eps_list, true);
                           });
    for (std::size_t k = 0; k < m; ++k) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            sum += per_path[i][k];
            sum2 += per_path[i][k] * per_path[i][k];
        }
        double nd = static_cast<double>(n_paths);
        SiltEstimate est;
        est.params = params;
        est.t = grid.t_max;
        est.eps = eps_list[k];
        est.n_paths = n_paths;
        est.mean = sum / nd;
        est.stderr_mean = std::sqrt(std::max(0.0, sum2 / nd - est.mean * est.mean) / nd);
        rep.estimates.push_back(est);
    }

    for (double e : eps_list)
        rep.oracle_values.push_back(expected_silt_oracle(params, e, grid.t_max, 1e-8).value);

    // log-log slope over the smallest epsilons
    const std::size_t fit = std::min<std::size_t>(4, m);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = m - fit; k < m; ++k) {
        double x = std::log(eps_list[k]);
        double y = std::log(rep.oracle_values[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double fd = static_cast<double>(fit);
    rep.oracle_tail_slope = (fd * sxy - sx * sy) / (fd * sxx - sx * sx);

    // classification from per-decade increments of the oracle tail
    std::vector<double> incr;
    for (std::size_t k = m - fit; k + 1 < m; ++k) {
        double dl = rep.oracle_values[k + 1] - rep.oracle_values[k];
        double dlog = std::log(eps_list[k] / eps_list[k + 1]);
        incr.push_back(dl / dlog);
    }
    double l_last = rep.oracle_values.back();
    bool monotone = true;
    for (std::size_t k = 0; k + 1 < m; ++k)
        if (rep.oracle_values[k + 1] < rep.oracle_values[k] - 1e-7 * std::fabs(l_last))
            monotone = false;

    double rho = 0.0;
    bool rho_ok = incr.size() >= 2 && incr.front() > 0.0;
    if (rho_ok) {
        double prod = 1.0;
        for (std::size_t k = 0; k + 1 < incr.size(); ++k) {
            if (incr[k] <= 0.0) {
                rho_ok = false;
                break;
            }
            prod *= incr[k + 1] / incr[k];
        }
        if (rho_ok) rho = std::pow(prod, 1.0 / static_cast<double>(incr.size() - 1));
    }

    if (!monotone) {
        rep.verdict = SweepVerdict::inconclusive;
    } else if (incr.empty() || incr.back() <= 1e-6 * std::fabs(l_last)) {
        rep.verdict = SweepVerdict::converging;
    } else if (rho_ok && rho >= 1.35) {
        rep.verdict = SweepVerdict::diverging;
        rep.divergence = DivergenceKind::power;
    } else if (rho_ok && rho >= 0.74 && incr.back() >= 1e-3 * std::fabs(l_last)) {
        rep.verdict = SweepVerdict::diverging;
        rep.divergence = DivergenceKind::logarithmic;
    } else if (rho_ok && rho < 0.74) {
        rep.verdict = SweepVerdict::converging;
    } else {
        rep.verdict = SweepVerdict::inconclusive;
    }
    return rep;
}

}  // namespace ggbm::silt
