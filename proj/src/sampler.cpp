#include "ggbm/sampler.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <sstream>
#include <thread>

#include "ggbm/errors.hpp"
#include "ggbm/fft.hpp"
#include "ggbm/fracops.hpp"

namespace ggbm::sampler {

namespace {

void validate_beta(double beta) {
    if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("beta must be in (0,1]");
}

// fixed-size work blocks claimed atomically; per-block results can then be
// reduced in block order, independent of the thread count
void run_blocks(std::size_t n_items, std::size_t block, int threads,
                const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads < 1) threads = 1;
    std::size_t n_blocks = (n_items + block - 1) / block;
    if (threads == 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b)
            body(b * block, std::min(n_items, (b + 1) * block));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            body(b * block, std::min(n_items, (b + 1) * block));
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads - 1; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

constexpr std::size_t kPathBlock = 64;

}  // namespace

double sample_stable_oneside(double beta, rng::Xoshiro256& gen) {
    validate_beta(beta);
    if (beta == 1.0) return 1.0;
    double u = gen.uniform_open();
    double w = gen.exponential();
    double theta = M_PI * u;
    double ln_a = std::log(std::sin((1.0 - beta) * theta)) +
                  beta / (1.0 - beta) * std::log(std::sin(beta * theta)) -
                  1.0 / (1.0 - beta) * std::log(std::sin(theta));
    return std::exp((1.0 - beta) / beta * (ln_a - std::log(w)));
}

double sample_stable_oneside(double beta, const rng::SeedSpec& seed) {
    auto gen = rng::make_stream(seed, 0);
    return sample_stable_oneside(beta, gen);
}

double sample_mwright_tau(double beta, rng::Xoshiro256& gen) {
    validate_beta(beta);
    if (beta == 1.0) return 1.0;
    double u = gen.uniform_open();
    double w = gen.exponential();
    double theta = M_PI * u;
    double ln_a = std::log(std::sin((1.0 - beta) * theta)) +
                  beta / (1.0 - beta) * std::log(std::sin(beta * theta)) -
                  1.0 / (1.0 - beta) * std::log(std::sin(theta));
    // tau = S^(-beta) collapses to one exponential in log space
    return std::exp((1.0 - beta) * (std::log(w) - ln_a));
}

double sample_mwright_tau(double beta, const rng::SeedSpec& seed) {
    auto gen = rng::make_stream(seed, 0);
    return sample_mwright_tau(beta, gen);
}

// ---- Cholesky sampler -------------------------------------------------------

struct CholeskyFbmSampler::Impl {
    Eigen::MatrixXd lower;
};

CholeskyFbmSampler::CholeskyFbmSampler(double alpha, const TimeGrid& grid)
    : grid_(grid), impl_(std::make_unique<Impl>()) {
    const std::size_t m = grid.n - 1;
    if (m > kMaxGridPoints)
        throw std::invalid_argument("grid too large for the Cholesky sampler");
    Eigen::MatrixXd g(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double v = fracops::cov_kernel(alpha, grid.times[i + 1], grid.times[j + 1]);
            g(i, j) = v;
            g(j, i) = v;
        }
    const double unit = 1e-12 * g.trace() / static_cast<double>(m);
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0;; ++attempt) {
        llt.compute(g + jitter_ * Eigen::MatrixXd::Identity(m, m));
        if (llt.info() == Eigen::Success) break;
        if (attempt >= 3) {
            std::ostringstream os;
            os << "Cholesky failed after jitter regularization (attempted jitter " << jitter_
               << ", alpha=" << alpha << ", n=" << grid.n << ")";
            throw numerical_error(os.str());
        }
        jitter_ += unit;
    }
    impl_->lower = llt.matrixL();
}

CholeskyFbmSampler::~CholeskyFbmSampler() = default;
CholeskyFbmSampler::CholeskyFbmSampler(CholeskyFbmSampler&&) noexcept = default;
CholeskyFbmSampler& CholeskyFbmSampler::operator=(CholeskyFbmSampler&&) noexcept = default;

std::vector<double> CholeskyFbmSampler::sample(rng::Xoshiro256& gen) const {
    const std::size_t m = grid_.n - 1;
    Eigen::VectorXd z(m);
    for (std::size_t i = 0; i < m; ++i) z(i) = gen.normal();
    Eigen::VectorXd x = impl_->lower * z;
    std::vector<double> path(grid_.n);
    path[0] = 0.0;
    for (std::size_t i = 0; i < m; ++i) path[i + 1] = x(i);
    return path;
}

// ---- circulant embedding ----------------------------------------------------

CirculantFgnSampler::CirculantFgnSampler(double alpha, const TimeGrid& grid) : grid_(grid) {
    if (!(alpha > 0.0) || !(alpha < 2.0)) throw std::invalid_argument("alpha must be in (0,2)");
    const std::size_t m = grid.n - 1;
    const std::size_t g = fft::next_pow2(2 * m);
    embed_size_ = g;

    // fGn autocovariance at lag k for increments of span dt
    const double dta = std::pow(grid.dt(), alpha);
    auto gamma = [&](std::size_t k) {
        double kk = static_cast<double>(k);
        return 0.5 * dta *
               (std::pow(kk + 1.0, alpha) - 2.0 * std::pow(kk, alpha) +
                std::pow(std::fabs(kk - 1.0), alpha));
    };

    std::vector<std::complex<double>> c(g);
    for (std::size_t j = 0; j < g; ++j) {
        std::size_t lag = std::min(j, g - j);
        c[j] = gamma(lag);
    }
    fft::transform(c);

    double max_eig = 0.0, min_eig = 0.0;
    for (auto& e : c) {
        max_eig = std::max(max_eig, e.real());
        min_eig = std::min(min_eig, e.real());
    }
    min_ratio_ = max_eig > 0.0 ? min_eig / max_eig : 0.0;
    if (min_ratio_ < -1e-9) {
        std::ostringstream os;
        os << "circulant embedding not nonnegative: min/max eigenvalue ratio " << min_ratio_
           << " (alpha=" << alpha << ", n=" << grid.n << ", embedding " << g << ")";
        throw numerical_error(os.str());
    }
    sqrt_eig_.resize(g);
    for (std::size_t j = 0; j < g; ++j)
        sqrt_eig_[j] = std::sqrt(std::max(c[j].real(), 0.0) / static_cast<double>(g));
}

std::vector<double> CirculantFgnSampler::sample(rng::Xoshiro256& gen) const {
    const std::size_t g = embed_size_;
    const std::size_t m = grid_.n - 1;
    std::vector<std::complex<double>> xi(g);
    xi[0] = sqrt_eig_[0] * gen.normal();
    xi[g / 2] = sqrt_eig_[g / 2] * gen.normal();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 1; k < g / 2; ++k) {
        double a = gen.normal();
        double b = gen.normal();
        std::complex<double> v(a * inv_sqrt2, b * inv_sqrt2);
        xi[k] = sqrt_eig_[k] * v;
        xi[g - k] = std::conj(xi[k]);
    }
    fft::transform(xi);
    std::vector<double> path(grid_.n);
    path[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += xi[i].real();
        path[i + 1] = acc;
    }
    return path;
}

// ---- ggBm -------------------------------------------------------------------

GgbmSampler::GgbmSampler(const ModelParams& params, const TimeGrid& grid, FbmMethod method)
    : params_(params), grid_(std::make_shared<const TimeGrid>(grid)), method_(method) {
    if (method_ == FbmMethod::cholesky)
        chol_ = std::make_shared<CholeskyFbmSampler>(params.alpha, grid);
    else
        circ_ = std::make_shared<CirculantFgnSampler>(params.alpha, grid);
}

GgbmPath GgbmSampler::sample(const rng::SeedSpec& seed) const {
    GgbmPath path;
    path.params = params_;
    path.grid = grid_;
    path.seed = seed;
    const std::size_t n = grid_->n;
    auto gen_tau = rng::make_stream(seed, 0);
    path.tau = sample_mwright_tau(params_.beta, gen_tau);
    double scale = std::sqrt(path.tau);
    path.values.resize(static_cast<std::size_t>(params_.d) * n);
    for (int c = 0; c < params_.d; ++c) {
        auto gen = rng::make_stream(seed, 1 + static_cast<uint64_t>(c));
        std::vector<double> x = method_ == FbmMethod::cholesky ? chol_->sample(gen)
                                                               : circ_->sample(gen);
        for (std::size_t i = 0; i < n; ++i)
            path.values[static_cast<std::size_t>(c) * n + i] = scale * x[i];
    }
    return path;
}

std::vector<GgbmPath> GgbmSampler::sample_batch(const rng::SeedSpec& base, std::size_t n_paths,
                                                int threads) const {
    std::vector<GgbmPath> out(n_paths);
    run_blocks(n_paths, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            out[i] = sample({base.master_seed, base.stream_index + i});
    });
    return out;
}

void for_each_path(const GgbmSampler& sampler, const rng::SeedSpec& base, std::size_t n_paths,
                   int threads, const std::function<void(const GgbmPath&, std::size_t)>& fn) {
    run_blocks(n_paths, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            GgbmPath p = sampler.sample({base.master_seed, base.stream_index + i});
            fn(p, i);
        }
    });
}

// ---- CF accumulation --------------------------------------------------------

CfAccumulator::CfAccumulator(std::vector<CfProbe> probes)
    : probes_(std::move(probes)), sums_(probes_.size()) {}

void CfAccumulator::add_path(const GgbmPath& path) {
    for (std::size_t p = 0; p < probes_.size(); ++p) {
        double phase = 0.0;
        for (const auto& term : probes_[p])
            phase += term.weight * path.value(term.coord, term.time_index);
        double c = std::cos(phase), s = std::sin(phase);
        auto& acc = sums_[p];
        acc.c += c;
        acc.s += s;
        acc.c2 += c * c;
        acc.s2 += s * s;
        acc.n += 1;
    }
}

void CfAccumulator::merge(const CfAccumulator& other) {
    for (std::size_t p = 0; p < sums_.size(); ++p) {
        sums_[p].c += other.sums_[p].c;
        sums_[p].s += other.sums_[p].s;
        sums_[p].c2 += other.sums_[p].c2;
        sums_[p].s2 += other.sums_[p].s2;
        sums_[p].n += other.sums_[p].n;
    }
}

CfStats CfAccumulator::stats(std::size_t probe_idx) const {
    const auto& a = sums_[probe_idx];
    CfStats st;
    st.n = a.n;
    if (a.n < 2) return st;
    double nd = static_cast<double>(a.n);
    double mc = a.c / nd, ms = a.s / nd;
    st.mean = {mc, ms};
    double var_c = std::max(0.0, (a.c2 / nd - mc * mc) * nd / (nd - 1.0));
    double var_s = std::max(0.0, (a.s2 / nd - ms * ms) * nd / (nd - 1.0));
    st.se_re = std::sqrt(var_c / nd);
    st.se_im = std::sqrt(var_s / nd);
    return st;
}

CfStats empirical_char_fn(const std::vector<GgbmPath>& paths, const std::vector<double>& k,
                          double t) {
    if (paths.size() < 2) throw std::invalid_argument("need at least 2 paths");
    const auto& p0 = paths.front();
    if (static_cast<int>(k.size()) != p0.params.d)
        throw std::invalid_argument("frequency vector dimension mismatch");
    std::size_t idx = p0.grid->index_of(t);  // rejects off-grid times
    CfProbe probe;
    for (int c = 0; c < p0.params.d; ++c)
        probe.push_back({c, idx, k[static_cast<std::size_t>(c)]});
    CfAccumulator acc({probe});
    for (const auto& p : paths) acc.add_path(p);
    return acc.stats(0);
}

MomentReport moment_check(double beta, double phi_norm_sq, int n, std::size_t n_samples,
                          const rng::SeedSpec& seed) {
    validate_beta(beta);
    if (!(phi_norm_sq > 0.0)) throw std::invalid_argument("phi_norm_sq must be > 0");
    if (n < 1 || n > 4) throw std::invalid_argument("moment order n must be in [1,4]");
    if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");

    double sum_even = 0.0, sum_even2 = 0.0, sum_odd = 0.0, sum_odd2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        rng::SeedSpec s{seed.master_seed, seed.stream_index + i};
        auto gen_tau = rng::make_stream(s, 0);
        double tau = sample_mwright_tau(beta, gen_tau);
        auto gen_g = rng::make_stream(s, 1);
        double x = std::sqrt(tau * phi_norm_sq) * gen_g.normal();
        double even = 1.0, odd = 1.0;
        for (int q = 0; q < 2 * n; ++q) even *= x;
        odd = even * x;
        sum_even += even;
        sum_even2 += even * even;
        sum_odd += odd;
        sum_odd2 += odd * odd;
    }
    double nd = static_cast<double>(n_samples);
    MomentReport rep;
    rep.order = n;
    rep.n_samples = n_samples;
    rep.target = std::exp(std::lgamma(2.0 * n + 1.0) - n * std::log(2.0) -
                          std::lgamma(beta * n + 1.0)) *
                 std::pow(phi_norm_sq, n);
    rep.even_moment = sum_even / nd;
    double var_even = std::max(0.0, sum_even2 / nd - rep.even_moment * rep.even_moment);
    rep.even_se = std::sqrt(var_even / nd);
    rep.even_z = rep.even_se > 0.0 ? (rep.even_moment - rep.target) / rep.even_se : 0.0;
    rep.odd_moment = sum_odd / nd;
    double var_odd = std::max(0.0, sum_odd2 / nd - rep.odd_moment * rep.odd_moment);
    rep.odd_se = std::sqrt(var_odd / nd);
    rep.odd_z = rep.odd_se > 0.0 ? rep.odd_moment / rep.odd_se : 0.0;
    return rep;
}

namespace {

// smallest uniform spacing whose grid contains every requested time
double common_spacing(const std::vector<double>& times) {
    double t_min = times.front();
    for (double t : times) t_min = std::min(t_min, t);
    for (int k = 1; k <= 64; ++k) {
        double dt = t_min / k;
        bool ok = true;
        for (double t : times) {
            double r = t / dt;
            if (std::fabs(r - std::nearbyint(r)) > 1e-9) {
                ok = false;
                break;
            }
        }
        if (ok) return dt;
    }
    throw std::invalid_argument("probe times do not share a uniform grid");
}

struct TwoSampleSetup {
    TimeGrid grid;
    std::vector<CfProbe> probes_a;
    std::vector<CfProbe> probes_b;
    std::vector<std::string> names;
};

CfCompareReport run_two_sample(const ModelParams& params, const TwoSampleSetup& setup,
                               std::size_t n_samples, const rng::SeedSpec& seed, int threads,
                               double threshold) {
    GgbmSampler sampler(params, setup.grid, FbmMethod::circulant);

    const std::size_t n_blocks = (n_samples + kPathBlock - 1) / kPathBlock;
    std::vector<CfAccumulator> acc_a(n_blocks, CfAccumulator(setup.probes_a));
    std::vector<CfAccumulator> acc_b(n_blocks, CfAccumulator(setup.probes_b));

    run_blocks(n_samples, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        std::size_t b = lo / kPathBlock;
        for (std::size_t i = lo; i < hi; ++i) {
            GgbmPath pa = sampler.sample({seed.master_seed, seed.stream_index + i});
            acc_a[b].add_path(pa);
            GgbmPath pb =
                sampler.sample({seed.master_seed, seed.stream_index + n_samples + i});
            acc_b[b].add_path(pb);
        }
    });
    CfAccumulator total_a(setup.probes_a), total_b(setup.probes_b);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        total_a.merge(acc_a[b]);
        total_b.merge(acc_b[b]);
    }

    CfCompareReport rep;
    rep.threshold = threshold;
    rep.n_samples = n_samples;
    for (std::size_t p = 0; p < setup.probes_a.size(); ++p) {
        auto sa = total_a.stats(p);
        auto sb = total_b.stats(p);
        ProbeZ pz;
        pz.name = setup.names[p];
        double se_re = std::sqrt(sa.se_re * sa.se_re + sb.se_re * sb.se_re);
        double se_im = std::sqrt(sa.se_im * sa.se_im + sb.se_im * sb.se_im);
        pz.z_re = se_re > 0.0 ? (sa.mean.real() - sb.mean.real()) / se_re : 0.0;
        pz.z_im = se_im > 0.0 ? (sa.mean.imag() - sb.mean.imag()) / se_im : 0.0;
        rep.max_abs_z = std::max({rep.max_abs_z, std::fabs(pz.z_re), std::fabs(pz.z_im)});
        rep.probes.push_back(pz);
    }
    rep.pass = rep.max_abs_z <= rep.threshold;
    return rep;
}

// weight patterns over m probe times, scaled per time so the CF stays in a
// well-conditioned band
std::vector<std::vector<double>> weight_patterns(const std::vector<double>& times, double alpha) {
    std::size_t m = times.size();
    std::vector<double> unit(m);
    for (std::size_t j = 0; j < m; ++j) unit[j] = 0.75 / std::pow(times[j], alpha / 2.0);
    std::vector<std::vector<double>> pats;
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> w(m, 0.0);
        w[j] = unit[j];
        pats.push_back(w);
    }
    if (m >= 2) {
        std::vector<double> w(m, 0.0);
        w[0] = 0.7 * unit[0];
        w[1] = 0.7 * unit[1];
        pats.push_back(w);
        std::vector<double> v(m, 0.0);
        v[0] = 0.6 * unit[0];
        v[1] = -0.6 * unit[1];
        pats.push_back(v);
    }
    return pats;
}

}  // namespace

CfCompareReport self_similarity_check(const ModelParams& params, double a,
                                      const std::vector<double>& probe_times,
                                      std::size_t n_samples, const rng::SeedSpec& seed,
                                      int threads) {
    if (!(a >= 0.25) || !(a <= 4.0)) throw std::invalid_argument("a must be in [0.25, 4]");
    if (probe_times.empty()) throw std::invalid_argument("need probe times");

    std::vector<double> all = probe_times;
    for (double t : probe_times) all.push_back(a * t);
    double dt = common_spacing(all);
    double t_max = *std::max_element(all.begin(), all.end());
    auto n = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    if (n > CholeskyFbmSampler::kMaxGridPoints)
        throw std::invalid_argument("probe configuration needs too fine a grid");

    TwoSampleSetup setup{TimeGrid(t_max, n), {}, {}, {}};
    double scale = std::pow(a, params.alpha / 2.0);
    auto pats = weight_patterns(probe_times, params.alpha);
    for (const auto& w : pats) {
        CfProbe pa, pb;
        std::ostringstream nm;
        nm << "ss[";
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] == 0.0) continue;
            pa.push_back({0, setup.grid.index_of(a * probe_times[j]), w[j]});
            pb.push_back({0, setup.grid.index_of(probe_times[j]), scale * w[j]});
            nm << " " << w[j] << "@" << probe_times[j];
        }
        nm << " ]";
        setup.probes_a.push_back(pa);
        setup.probes_b.push_back(pb);
        setup.names.push_back(nm.str());
    }
    return run_two_sample(params, setup, n_samples, seed, threads, 4.0);
}

CfCompareReport stationary_increments_check(const ModelParams& params, double h,
                                            const std::vector<double>& probe_times,
                                            std::size_t n_samples, const rng::SeedSpec& seed,
                                            int threads) {
    if (!(h >= 0.0)) throw std::invalid_argument("h must be >= 0");
    if (probe_times.empty()) throw std::invalid_argument("need probe times");

    std::vector<double> all = probe_times;
    for (double t : probe_times) all.push_back(t + h);
    if (h > 0.0) all.push_back(h);
    double dt = common_spacing(all);
    double t_max = *std::max_element(all.begin(), all.end());
    auto n = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    if (n > CholeskyFbmSampler::kMaxGridPoints)
        throw std::invalid_argument("probe configuration needs too fine a grid");

    TwoSampleSetup setup{TimeGrid(t_max, n), {}, {}, {}};
    auto pats = weight_patterns(probe_times, params.alpha);
    for (const auto& w : pats) {
        CfProbe pa, pb;
        double wsum = 0.0;
        std::ostringstream nm;
        nm << "si[";
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] == 0.0) continue;
            pa.push_back({0, setup.grid.index_of(probe_times[j] + h), w[j]});
            pb.push_back({0, setup.grid.index_of(probe_times[j]), w[j]});
            wsum += w[j];
            nm << " " << w[j] << "@" << probe_times[j];
        }
        nm << " ]";
        if (h > 0.0 && wsum != 0.0) pa.push_back({0, setup.grid.index_of(h), -wsum});
        setup.probes_a.push_back(pa);
        setup.probes_b.push_back(pb);
        setup.names.push_back(nm.str());
    }
    return run_two_sample(params, setup, n_samples, seed, threads, 4.0);
}

CfCompareReport sampler_cross_validation(double alpha, const TimeGrid& grid, std::size_t n_paths,
                                         const rng::SeedSpec& seed, int threads) {
    ModelParams params(1.0, alpha, 1);
    GgbmSampler chol(params, grid, FbmMethod::cholesky);
    GgbmSampler circ(params, grid, FbmMethod::circulant);

    // probe panel: marginals at three grid times, one increment, one joint
    std::vector<std::size_t> idx = {grid.n / 4, grid.n / 2, grid.n - 1};
    std::vector<CfProbe> probes;
    std::vector<std::string> names;
    for (std::size_t i : idx) {
        for (double c : {0.6, 1.2}) {
            double w = c / std::pow(grid.times[i], alpha / 2.0);
            probes.push_back({{0, i, w}});
            std::ostringstream nm;
            nm << "cf@" << grid.times[i] << "/" << c;
            names.push_back(nm.str());
        }
    }
    {
        double w = 0.8 / std::pow(grid.times[idx[2]] - grid.times[idx[1]], alpha / 2.0);
        probes.push_back({{0, idx[2], w}, {0, idx[1], -w}});
        names.push_back("cf-increment");
        double w0 = 0.5 / std::pow(grid.times[idx[0]], alpha / 2.0);
        double w1 = 0.5 / std::pow(grid.times[idx[2]], alpha / 2.0);
        probes.push_back({{0, idx[0], w0}, {0, idx[2], w1}});
        names.push_back("cf-joint");
    }

    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<CfAccumulator> acc_a(n_blocks, CfAccumulator(probes));
    std::vector<CfAccumulator> acc_b(n_blocks, CfAccumulator(probes));
    run_blocks(n_paths, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        std::size_t b = lo / kPathBlock;
        for (std::size_t i = lo; i < hi; ++i) {
            acc_a[b].add_path(chol.sample({seed.master_seed, seed.stream_index + i}));
            acc_b[b].add_path(circ.sample({seed.master_seed, seed.stream_index + n_paths + i}));
        }
    });
    CfAccumulator ta(probes), tb(probes);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        ta.merge(acc_a[b]);
        tb.merge(acc_b[b]);
    }

    CfCompareReport rep;
    // Bonferroni across 8 probes x (re, im) at overall 1%
    rep.threshold = 3.5;
    rep.n_samples = n_paths;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        auto sa = ta.stats(p);
        auto sb = tb.stats(p);
        ProbeZ pz;
        pz.name = names[p];
        double se_re = std::sqrt(sa.se_re * sa.se_re + sb.se_re * sb.se_re);
        double se_im = std::sqrt(sa.se_im * sa.se_im + sb.se_im * sb.se_im);
        pz.z_re = se_re > 0.0 ? (sa.mean.real() - sb.mean.real()) / se_re : 0.0;
        pz.z_im = se_im > 0.0 ? (sa.mean.imag() - sb.mean.imag()) / se_im : 0.0;
        rep.max_abs_z = std::max({rep.max_abs_z, std::fabs(pz.z_re), std::fabs(pz.z_im)});
        rep.probes.push_back(pz);
    }
    rep.pass = rep.max_abs_z <= rep.threshold;
    return rep;
}

CfCompareReport subordination_consistency_check(const ModelParams& params, const TimeGrid& grid,
                                                std::size_t n_paths, const rng::SeedSpec& seed,
                                                int threads) {
    GgbmSampler sampler(params, grid, FbmMethod::circulant);
    std::vector<std::pair<std::size_t, std::size_t>> pairs = {
        {grid.n / 2, grid.n / 2},
        {grid.n - 1, grid.n - 1},
        {grid.n / 4, grid.n - 1},
        {grid.n / 2, grid.n - 1},
    };

    struct Acc {
        double sum = 0.0, sum2 = 0.0;
    };
    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<std::vector<Acc>> block_acc(n_blocks, std::vector<Acc>(pairs.size()));
    run_blocks(n_paths, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        std::size_t b = lo / kPathBlock;
        for (std::size_t i = lo; i < hi; ++i) {
            GgbmPath p = sampler.sample({seed.master_seed, seed.stream_index + i});
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                // pool coordinates: each is an independent witness
                double v = 0.0;
                for (int c = 0; c < params.d; ++c)
                    v += p.value(c, pairs[q].first) * p.value(c, pairs[q].second);
                v /= (params.d * p.tau);
                block_acc[b][q].sum += v;
                block_acc[b][q].sum2 += v * v;
            }
        }
    });

    CfCompareReport rep;
    rep.threshold = 4.0;
    rep.n_samples = n_paths;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            sum += block_acc[b][q].sum;
            sum2 += block_acc[b][q].sum2;
        }
        double nd = static_cast<double>(n_paths);
        double mean = sum / nd;
        double var = std::max(0.0, sum2 / nd - mean * mean);
        double se = std::sqrt(var / nd);
        double target = fracops::cov_kernel(params.alpha, grid.times[pairs[q].first],
                                            grid.times[pairs[q].second]);
        ProbeZ pz;
        std::ostringstream nm;
        nm << "cov(" << grid.times[pairs[q].first] << "," << grid.times[pairs[q].second] << ")";
        pz.name = nm.str();
        pz.z_re = se > 0.0 ? (mean - target) / se : 0.0;
        pz.z_im = 0.0;
        rep.max_abs_z = std::max(rep.max_abs_z, std::fabs(pz.z_re));
        rep.probes.push_back(pz);
    }
    rep.pass = rep.max_abs_z <= rep.threshold;
    return rep;
}

CfCompareReport exchangeability_check(const ModelParams& params, const TimeGrid& grid,
                                      std::size_t n_paths, const rng::SeedSpec& seed,
                                      int threads) {
    if (params.d < 2) throw std::invalid_argument("exchangeability needs d >= 2");
    GgbmSampler sampler(params, grid, FbmMethod::circulant);
    std::size_t ti = grid.n - 1;
    double w = 0.8 / std::pow(grid.times[ti], params.alpha / 2.0);

    struct Acc {
        double dc = 0.0, dc2 = 0.0, ds = 0.0, ds2 = 0.0;
    };
    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<Acc> block_acc(n_blocks);
    run_blocks(n_paths, kPathBlock, threads, [&](std::size_t lo, std::size_t hi) {
        std::size_t b = lo / kPathBlock;
        for (std::size_t i = lo; i < hi; ++i) {
            GgbmPath p = sampler.sample({seed.master_seed, seed.stream_index + i});
            // |phi_j| equal across coordinates: permuting them must not move the CF
            double phase1 = w * p.value(0, ti) + 0.5 * w * p.value(1, ti);
            double phase2 = w * p.value(1, ti) + 0.5 * w * p.value(0, ti);
            double dc = std::cos(phase1) - std::cos(phase2);
            double ds = std::sin(phase1) - std::sin(phase2);
            block_acc[b].dc += dc;
            block_acc[b].dc2 += dc * dc;
            block_acc[b].ds += ds;
            block_acc[b].ds2 += ds * ds;
        }
    });
    double dc = 0.0, dc2 = 0.0, ds = 0.0, ds2 = 0.0;
    for (const auto& a : block_acc) {
        dc += a.dc;
        dc2 += a.dc2;
        ds += a.ds;
        ds2 += a.ds2;
    }
    double nd = static_cast<double>(n_paths);
    CfCompareReport rep;
    rep.threshold = 4.0;
    rep.n_samples = n_paths;
    ProbeZ pz;
    pz.name = "swap(0,1)";
    double mc = dc / nd, msd = ds / nd;
    double se_c = std::sqrt(std::max(0.0, dc2 / nd - mc * mc) / nd);
    double se_s = std::sqrt(std::max(0.0, ds2 / nd - msd * msd) / nd);
    pz.z_re = se_c > 0.0 ? mc / se_c : 0.0;
    pz.z_im = se_s > 0.0 ? msd / se_s : 0.0;
    rep.max_abs_z = std::max(std::fabs(pz.z_re), std::fabs(pz.z_im));
    rep.probes.push_back(pz);
    rep.pass = rep.max_abs_z <= rep.threshold;
    return rep;
}

}  // namespace ggbm::sampler
