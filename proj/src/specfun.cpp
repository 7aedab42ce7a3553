#include "ggbm/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <vector>

#include "ggbm/ddouble.hpp"
#include "ggbm/errors.hpp"
#include "ggbm/quadrature.hpp"

namespace ggbm::specfun {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sinpi_double(double z) {
    double n = std::nearbyint(z);
    double r = z - n;
    double s = std::sin(M_PI * r);
    return (std::fmod(std::fabs(n), 2.0) == 1.0) ? -s : s;
}

// One series term per row: ln|coef_n| plus its sign, x^n applied at eval
// time. zero marks coefficients killed by Gamma poles.
struct SeriesTable {
    std::vector<double> ln_mag;
    std::vector<dd::DD> ln_mag_dd;
    std::vector<int8_t> sign;
    std::vector<uint8_t> zero;

    size_t size() const { return ln_mag.size(); }
};

// The M-Wright series sheds terms slowly for beta near 1 (the decay rate per
// term is ~(1-beta) log n), so its table is deeper than the Mittag-Leffler one.
constexpr int kMlTableTerms = 768;
constexpr int kMwTableTerms = 2048;

SeriesTable build_ml_table(double beta, int order) {
    SeriesTable t;
    t.ln_mag.reserve(kMlTableTerms);
    for (int m = 0; m < kMlTableTerms; ++m) {
        // coefficient of x^m in E^(order):  (m+order)! / (m! Gamma(beta(m+order)+1))
        dd::DD ln{0.0, 0.0};
        if (order > 0) {
            ln = dd::sub(dd::lgamma(dd::DD{static_cast<double>(m + order + 1)}),
                         dd::lgamma(dd::DD{static_cast<double>(m + 1)}));
        }
        dd::DD arg = dd::add(dd::mul(dd::DD{beta}, static_cast<double>(m + order)), dd::DD{1.0});
        ln = dd::sub(ln, dd::lgamma(arg));
        t.ln_mag_dd.push_back(ln);
        t.ln_mag.push_back(ln.to_double());
        t.sign.push_back(1);
        t.zero.push_back(0);
    }
    return t;
}

SeriesTable build_mwright_table(double beta) {
    SeriesTable t;
    t.ln_mag.reserve(kMwTableTerms);
    for (int n = 0; n < kMwTableTerms; ++n) {
        // coefficient of (-x)^n:  1 / (n! Gamma(1 - beta - beta n))
        dd::DD z = dd::sub(dd::DD{1.0 - beta}, dd::mul(dd::DD{beta}, static_cast<double>(n)));
        auto recip = dd::log_gamma_recip(z);
        if (recip.zero) {
            t.ln_mag_dd.push_back(dd::DD{0.0});
            t.ln_mag.push_back(0.0);
            t.sign.push_back(1);
            t.zero.push_back(1);
            continue;
        }
        dd::DD ln = dd::sub(recip.log_mag, dd::lgamma(dd::DD{static_cast<double>(n + 1)}));
        t.ln_mag_dd.push_back(ln);
        t.ln_mag.push_back(ln.to_double());
        t.sign.push_back(static_cast<int8_t>(recip.sign));
        t.zero.push_back(0);
    }
    return t;
}

const SeriesTable& ml_table(double beta, int order) {
    static std::map<std::pair<double, int>, SeriesTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(beta, order);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_ml_table(beta, order)).first;
    return it->second;
}

const SeriesTable& mwright_table(double beta) {
    static std::map<double, SeriesTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(beta);
    if (it == cache.end()) it = cache.emplace(beta, build_mwright_table(beta)).first;
    return it->second;
}

struct PassResult {
    double value = 0.0;
    double err = kInf;
    int terms = 0;
    double max_ln = -kInf;
    bool converged = false;
};

// Termination tracker. Near-pole coefficients (inexact-binary beta) produce
// isolated ~1e-16 dips in |t_n|, so a single small term is not evidence of
// convergence: the stop requires the running max over a short window of
// recent terms to fall below the target.
class StopRule {
  public:
    explicit StopRule(double tol) : target_(std::max(tol * 1e-2, 1e-300)) {}

    // returns true when the series may stop after the given term magnitude
    bool push(double abs_t) {
        ring_[idx_++ % 3] = abs_t;
        decreasing_ = (abs_t <= prev_ || prev_ < 0.0) && idx_ > 1 ? decreasing_ + 1 : 0;
        prev_ = abs_t;
        return decreasing_ >= 3 && idx_ >= 3 && ring_max() <= target_;
    }

    double tail() const { return 2.0 * ring_max(); }

  private:
    double ring_max() const { return std::max(ring_[0], std::max(ring_[1], ring_[2])); }

    double target_;
    double ring_[3] = {kInf, kInf, kInf};
    double prev_ = -1.0;
    int decreasing_ = 0;
    size_t idx_ = 0;
};

// alternate: multiply term n by (-1)^n (negative x in the ML series, or the
// (-x)^n of the M-Wright series).
PassResult sum_series_double(const SeriesTable& tab, double ln_y, bool alternate, double tol) {
    PassResult out;
    double sum = 0.0, comp = 0.0;
    double tail = kInf;
    StopRule stop(tol);
    for (size_t n = 0; n < tab.size(); ++n) {
        if (tab.zero[n]) continue;
        double ln_t = tab.ln_mag[n] + static_cast<double>(n) * ln_y;
        double abs_t = std::exp(ln_t);
        out.max_ln = std::max(out.max_ln, ln_t);
        double term = abs_t * tab.sign[n];
        if (alternate && (n & 1)) term = -term;
        // Kahan
        double yk = term - comp;
        double tk = sum + yk;
        comp = (tk - sum) - yk;
        sum = tk;
        out.terms = static_cast<int>(n) + 1;
        if (stop.push(abs_t)) {
            tail = stop.tail();
            out.converged = true;
            break;
        }
    }
    if (!out.converged) return out;
    out.value = sum;
    double max_term = out.max_ln > 700.0 ? kInf : std::exp(out.max_ln);
    out.err = 3e-16 * max_term * std::sqrt(static_cast<double>(out.terms)) + tail +
              2e-16 * std::fabs(sum);
    return out;
}

PassResult sum_series_dd(const SeriesTable& tab, double y, bool alternate, double tol) {
    PassResult out;
    dd::DD ln_y = dd::log(dd::DD{y});
    dd::DD sum{0.0, 0.0};
    double tail = kInf;
    StopRule stop(tol);
    for (size_t n = 0; n < tab.size(); ++n) {
        if (tab.zero[n]) continue;
        dd::DD ln_t = dd::add(tab.ln_mag_dd[n], dd::mul(ln_y, static_cast<double>(n)));
        dd::DD t = dd::exp(ln_t);
        double abs_t = t.hi;
        out.max_ln = std::max(out.max_ln, ln_t.hi);
        int s = tab.sign[n];
        if (alternate && (n & 1)) s = -s;
        sum = dd::add(sum, s < 0 ? dd::neg(t) : t);
        out.terms = static_cast<int>(n) + 1;
        if (stop.push(abs_t)) {
            tail = stop.tail();
            out.converged = true;
            break;
        }
    }
    if (!out.converged) return out;
    out.value = sum.to_double();
    double max_term = out.max_ln > 700.0 ? kInf : std::exp(out.max_ln);
    out.err = 4e-29 * max_term * std::sqrt(static_cast<double>(out.terms)) + tail +
              1e-16 * std::fabs(out.value);
    return out;
}

double recip_gamma_double(double z) {
    if (z >= 0.5) return std::exp(-std::lgamma(z));
    double s = sinpi_double(z);
    if (s == 0.0) return 0.0;
    return s / M_PI * std::exp(std::lgamma(1.0 - z));
}

// Asymptotic expansion of E_beta(-y) for large y, optimally truncated.
struct AsymResult {
    double value = 0.0;
    double err = kInf;
    int terms = 0;
};

AsymResult ml_asymptotic(double beta, double y) {
    AsymResult out;
    double sum = 0.0;
    double best_err = kInf;
    double prev_abs = kInf;
    const int kmax = 60;
    for (int k = 1; k <= kmax; ++k) {
        double rg = recip_gamma_double(1.0 - beta * k);
        double a = std::pow(y, -static_cast<double>(k)) * rg;
        double abs_a = std::fabs(a);
        if (abs_a > prev_abs) {
            // past the optimal truncation point
            out.err = best_err + 1e-16 * std::fabs(sum);
            out.value = sum;
            return out;
        }
        if (k & 1)
            sum += a;
        else
            sum -= a;
        out.terms = k;
        if (abs_a > 0.0) prev_abs = abs_a;
        best_err = abs_a;  // bound the remainder by the last included term
        if (abs_a > 0.0 && abs_a < 1e-18 * std::fabs(sum)) break;
    }
    out.value = sum;
    out.err = best_err + 1e-16 * std::fabs(sum);
    return out;
}

// Spectral route (Hankel contour collapsed onto the branch cut):
//   E_beta(-y) = sin(beta pi)/(pi beta) *
//                Int_0^inf exp(-u^(1/beta)) * y / (u^2 + 2 u y cos(beta pi) + y^2) du.
// The denominator factors as (y - p1)(y - conj(p1)) with
// p1 = u (-cos(beta pi) + i sin(beta pi)), so the p-th y-derivative of the
// rational factor has the closed form (-1)^p p! 2 Re[A / (y - p1)^(p+1)],
// A = p1 / (2 i u sin(beta pi)), giving
//   E_beta^(p)(-y) = sin(beta pi)/(pi beta) * p! *
//                    Int_0^inf exp(-u^(1/beta)) 2 Re[A / (y - p1)^(p+1)] du.
EvalResult ml_spectral(double beta, double y, int p, double abs_tol) {
    const double sb = std::sin(M_PI * beta);
    const double cb = std::cos(M_PI * beta);
    const double pref = sb / (M_PI * beta);
    const double inv_beta = 1.0 / beta;
    const std::complex<double> pole_dir(-cb, sb);  // p1 / u
    const std::complex<double> a_base = pole_dir / std::complex<double>(0.0, 2.0 * sb);

    double u_max = std::pow(760.0, beta);

    quad::Fn f = [&](double u) -> double {
        double e = std::pow(u, inv_beta);
        if (e > 745.0) return 0.0;
        std::complex<double> z = std::complex<double>(y, 0.0) - u * pole_dir;
        std::complex<double> zp = z;
        for (int k = 0; k < p; ++k) zp *= z;
        return std::exp(-e) * 2.0 * std::real(a_base / zp);
    };
    double factorial = 1.0;
    for (int k = 2; k <= p; ++k) factorial *= k;
    double scale = pref * factorial;
    double tol_q = std::max(0.4 * abs_tol / scale, 1e-15);
    auto r = quad::integrate(f, 0.0, u_max, tol_q, 1e-12);
    double est = scale * r.abs_error + 1e-16;
    if (!r.ok() && est > abs_tol) {
        std::ostringstream os;
        os << "ml spectral quadrature did not converge (beta=" << beta << ", y=" << y
           << ", achieved=" << est << ", requested=" << abs_tol << ")";
        throw tolerance_error(os.str());
    }
    return {scale * r.value, est, 0, Method::quadrature};
}

void validate_beta_ml(double beta) {
    if (!(beta > 0.0) || beta > 1.0)
        throw std::invalid_argument("beta must be in (0,1] for the Mittag-Leffler function");
}

void validate_tol(double abs_tol) {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
    if (abs_tol < kMinAbsTol) {
        std::ostringstream os;
        os << "abs_tol " << abs_tol << " below supported minimum " << kMinAbsTol;
        throw tolerance_error(os.str());
    }
}

}  // namespace

EvalResult ml_eval(double beta, double x, double abs_tol) {
    validate_beta_ml(beta);
    validate_tol(abs_tol);
    if (std::fabs(x) > kMlArgMax)
        throw std::invalid_argument("ml_eval argument outside supported range");

    if (beta == 1.0) {
        double v = std::exp(x);
        return {v, 2e-16 * v + 1e-300, 1, Method::series};
    }
    if (x == 0.0) return {1.0, 1e-16, 1, Method::series};

    const SeriesTable& tab = ml_table(beta, 0);
    if (x > 0.0) {
        auto pr = sum_series_double(tab, std::log(x), false, abs_tol);
        if (!pr.converged || !std::isfinite(pr.value)) {
            std::ostringstream os;
            os << "E_beta(" << x << ") with beta=" << beta << " overflows the double range";
            throw tolerance_error(os.str());
        }
        return {pr.value, pr.err, pr.terms, Method::series};
    }

    double y = -x;
    // series route while the cancellation is within the double-double budget
    double cancel_ln = std::pow(y, 1.0 / beta);
    double tol_eff = abs_tol;
    if (cancel_ln < 60.0) {
        auto prd = sum_series_double(tab, std::log(y), true, tol_eff);
        if (prd.converged && prd.err <= tol_eff) {
            return {prd.value, prd.err, prd.terms, Method::series};
        }
        auto prq = sum_series_dd(tab, y, true, tol_eff);
        if (prq.converged && prq.err <= tol_eff) {
            return {prq.value, prq.err, prq.terms, Method::series};
        }
    }
    auto as = ml_asymptotic(beta, y);
    if (as.err <= 0.5 * abs_tol) {
        return {as.value, as.err, as.terms, Method::asymptotic};
    }
    return ml_spectral(beta, y, 0, abs_tol);
}

EvalResult ml_deriv(double beta, double x, int n, double abs_tol) {
    validate_beta_ml(beta);
    validate_tol(abs_tol);
    if (n < 0 || n > kMaxDerivOrder)
        throw std::invalid_argument("ml_deriv order outside supported range");
    if (x > 0.0) throw std::invalid_argument("ml_deriv requires x <= 0");
    if (std::fabs(x) > kMlArgMax)
        throw std::invalid_argument("ml_deriv argument outside supported range");
    if (n == 0) return ml_eval(beta, x, abs_tol);

    if (beta == 1.0) {
        double v = std::exp(x);
        return {v, 2e-16 * v + 1e-300, 1, Method::series};
    }
    if (x == 0.0) {
        double v = std::exp(std::lgamma(n + 1.0) - std::lgamma(beta * n + 1.0));
        return {v, 4e-16 * v, 1, Method::series};
    }

    double y = -x;
    const SeriesTable& tab = ml_table(beta, n);
    double cancel_ln = std::pow(y, 1.0 / beta);
    if (cancel_ln < 60.0) {
        auto prd = sum_series_double(tab, std::log(y), true, abs_tol);
        if (prd.converged && prd.err <= abs_tol) {
            return {prd.value, prd.err, prd.terms, Method::series};
        }
        auto prq = sum_series_dd(tab, y, true, abs_tol);
        if (prq.converged && prq.err <= abs_tol) {
            return {prq.value, prq.err, prq.terms, Method::series};
        }
    }
    return ml_spectral(beta, y, n, abs_tol);
}

MwrightTail mwright_tail(double beta) {
    MwrightTail t;
    t.c = 1.0 / (1.0 - beta);
    t.b = (1.0 - beta) * std::pow(beta, beta / (1.0 - beta));
    t.pow = (beta - 0.5) / (1.0 - beta);
    t.amp = std::pow(beta, t.pow) / std::sqrt(2.0 * M_PI * (1.0 - beta));
    return t;
}

double MwrightTail::operator()(double x) const {
    if (x <= 0.0) return kInf;
    double ln = std::log(amp) + pow * std::log(x) - b * std::pow(x, c);
    return ln < -745.0 ? 0.0 : std::exp(ln);
}

double mwright_support_cut(double beta, double threshold) {
    MwrightTail t = mwright_tail(beta);
    double T = std::pow(std::max(40.0, -std::log(threshold)) / t.b, 1.0 / t.c);
    for (int i = 0; i < 6; ++i) {
        double ln_amp = std::log(t.amp) + t.pow * std::log(std::max(T, 1e-6));
        double target = std::max(ln_amp - std::log(threshold), 1.0);
        T = std::pow(target / t.b, 1.0 / t.c);
    }
    return std::max(T * 1.1, 1.0);
}

EvalResult mwright_eval(double beta, double x, double abs_tol) {
    if (!(beta > 0.0) || beta >= 1.0)
        throw std::invalid_argument(
            "beta must be in (0,1) for pointwise M-Wright evaluation (M_1 is a point mass)");
    validate_tol(abs_tol);
    if (x < 0.0) throw std::invalid_argument("M-Wright density is supported on x >= 0");

    if (x == 0.0) {
        double v = recip_gamma_double(1.0 - beta);
        return {v, 4e-16 * std::fabs(v), 1, Method::series};
    }

    const SeriesTable& tab = mwright_table(beta);
    auto prd = sum_series_double(tab, std::log(x), true, abs_tol);
    if (prd.converged && prd.err <= abs_tol) {
        double v = prd.value;
        if (v < 0.0 && -v <= 2.0 * prd.err) v = 0.0;
        return {v, prd.err, prd.terms, Method::series};
    }

    // documented large-x method: saddle-point asymptotics
    MwrightTail tail = mwright_tail(beta);
    double v_asym = tail(x);
    double sigma = std::pow(beta * x, 1.0 / (1.0 - beta));
    double err_asym = v_asym * std::min(1.0, 3.0 / sigma) + 1e-300;

    // predicted dd-series noise from the double pass's largest term
    double est_dd = kInf;
    if (prd.converged && prd.max_ln < 700.0) {
        est_dd = 4e-29 * std::exp(prd.max_ln) * std::sqrt(static_cast<double>(prd.terms));
    }

    if (est_dd <= abs_tol && (est_dd <= err_asym || err_asym > 0.5 * abs_tol)) {
        auto prq = sum_series_dd(tab, x, true, abs_tol);
        if (prq.converged && prq.err <= abs_tol) {
            double v = prq.value;
            if (v < 0.0 && -v <= 2.0 * prq.err) v = 0.0;
            return {v, prq.err, prq.terms, Method::series};
        }
    }
    if (err_asym <= 0.5 * abs_tol || v_asym + err_asym <= 0.9 * abs_tol) {
        return {v_asym, err_asym, 0, Method::asymptotic};
    }
    std::ostringstream os;
    os << "mwright_eval cancellation failure: beta=" << beta << ", x=" << x
       << ", series max term ~ exp(" << prd.max_ln << "), asymptotic error " << err_asym
       << " exceeds abs_tol " << abs_tol;
    throw tolerance_error(os.str());
}

double mwright_laplace_residual(double beta, double s, double abs_tol) {
    if (!(beta > 0.0) || beta >= 1.0)
        throw std::invalid_argument("beta must be in (0,1) for the Laplace pair");
    if (s < 0.0 || s > kLaplaceSMax)
        throw std::invalid_argument("s outside supported range [0, S_max]");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");

    double T = mwright_support_cut(beta, 1e-18);
    quad::Fn f = [&](double tau) -> double {
        if (tau <= 0.0) return recip_gamma_double(1.0 - beta);
        return std::exp(-s * tau) * mwright_eval(beta, tau, 1e-12).value;
    };
    auto r = quad::integrate(f, 0.0, T, 0.3 * abs_tol, 1e-12);
    if (!r.ok() && r.abs_error > abs_tol) {
        std::ostringstream os;
        os << "Laplace-pair quadrature did not converge: achieved " << r.abs_error
           << ", requested " << abs_tol;
        throw numerical_error(os.str());
    }
    double rhs = ml_eval(beta, -s, 1e-12).value;
    return std::fabs(r.value - rhs);
}

}  // namespace ggbm::specfun
