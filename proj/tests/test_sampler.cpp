#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ggbm/fracops.hpp"
#include "ggbm/rng.hpp"
#include "ggbm/sampler.hpp"
#include "ggbm/specfun.hpp"

using namespace ggbm;
using namespace ggbm::sampler;

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

template <typename F>
MeanSe mc_mean(std::size_t n, F&& f) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = f(i);
        s += v;
        s2 += v * v;
    }
    double nd = static_cast<double>(n);
    double m = s / nd;
    double var = std::max(0.0, s2 / nd - m * m);
    return {m, std::sqrt(var / nd)};
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
    rng::SeedSpec seed{1234, 7};
    auto g1 = rng::make_stream(seed, 0);
    auto g2 = rng::make_stream(seed, 0);
    for (int i = 0; i < 16; ++i) CHECK(g1.next() == g2.next());

    auto g3 = rng::make_stream(seed, 1);
    auto g4 = rng::make_stream({1234, 8}, 0);
    bool all_same3 = true, all_same4 = true;
    auto g5 = rng::make_stream(seed, 0);
    for (int i = 0; i < 8; ++i) {
        uint64_t base = g5.next();
        all_same3 &= (g3.next() == base);
        all_same4 &= (g4.next() == base);
    }
    CHECK_FALSE(all_same3);
    CHECK_FALSE(all_same4);
}

TEST_CASE("one-sided stable law") {
    // beta = 1 is the unit point mass
    rng::SeedSpec seed{99, 0};
    CHECK(sample_stable_oneside(1.0, seed) == 1.0);

    // positivity
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(sample_stable_oneside(0.5, {42, i}) > 0.0);
    }

    // Laplace transform oracle: E[exp(-2 S)] = exp(-2^beta)
    const std::size_t n = 200000;
    for (double beta : {0.5, 0.8}) {
        auto r = mc_mean(n, [&](std::size_t i) {
            return std::exp(-2.0 * sample_stable_oneside(beta, {7, i}));
        });
        double target = std::exp(-std::pow(2.0, beta));
        CHECK(std::fabs(r.mean - target) < 4.0 * r.se);
    }
}

TEST_CASE("subordinator tau law") {
    CHECK(sample_mwright_tau(1.0, rng::SeedSpec{5, 0}) == 1.0);

    const std::size_t n = 200000;
    // E[tau^k] = k! / Gamma(beta k + 1)
    for (double beta : {0.5, 0.6, 0.75}) {
        for (int k : {1, 2, 3}) {
            auto r = mc_mean(n, [&](std::size_t i) {
                double tau = sample_mwright_tau(beta, rng::SeedSpec{11, i});
                double v = 1.0;
                for (int q = 0; q < k; ++q) v *= tau;
                return v;
            });
            double target = std::exp(std::lgamma(k + 1.0) - std::lgamma(beta * k + 1.0));
            CHECK(std::fabs(r.mean - target) < 4.0 * r.se);
        }
    }

    // Laplace transform against the Mittag-Leffler implementation
    for (double s : {0.5, 1.0, 2.0}) {
        auto r = mc_mean(n, [&](std::size_t i) {
            return std::exp(-s * sample_mwright_tau(0.75, rng::SeedSpec{13, i}));
        });
        double target = specfun::ml_eval(0.75, -s, 1e-11).value;
        CHECK(std::fabs(r.mean - target) < 4.0 * r.se);
    }
}

TEST_CASE("cholesky fbm variance and covariance") {
    TimeGrid grid(1.0, 17);
    const std::size_t n_paths = 50000;
    for (double alpha : {0.8, 1.0, 1.5}) {
        CholeskyFbmSampler s(alpha, grid);
        std::vector<std::vector<double>> paths(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i) {
            auto gen = rng::make_stream({21, i}, 1);
            paths[i] = s.sample(gen);
        }
        // variance at two grid times matches t^alpha
        for (std::size_t idx : {static_cast<std::size_t>(8), static_cast<std::size_t>(16)}) {
            auto r = mc_mean(n_paths, [&](std::size_t i) {
                return paths[i][idx] * paths[i][idx];
            });
            double target = std::pow(grid.times[idx], alpha);
            CHECK(std::fabs(r.mean - target) < 4.0 * r.se);
        }
        // cross-covariance at a pair
        auto r = mc_mean(n_paths, [&](std::size_t i) { return paths[i][4] * paths[i][16]; });
        double target = fracops::cov_kernel(alpha, grid.times[4], grid.times[16]);
        CHECK(std::fabs(r.mean - target) < 4.0 * r.se);
    }
}

TEST_CASE("brownian increments uncorrelated at alpha=1") {
    TimeGrid grid(1.0, 33);
    CholeskyFbmSampler s(1.0, grid);
    const std::size_t n_paths = 50000;
    auto r = mc_mean(n_paths, [&](std::size_t i) {
        auto gen = rng::make_stream({23, i}, 1);
        auto p = s.sample(gen);
        return (p[8] - p[0]) * (p[24] - p[16]);
    });
    CHECK(std::fabs(r.mean) < 4.0 * r.se);
}

TEST_CASE("circulant sampler matches the covariance") {
    TimeGrid grid(2.0, 65);
    for (double alpha : {0.5, 1.2}) {
        CirculantFgnSampler s(alpha, grid);
        CHECK(s.min_eigenvalue_ratio() >= -1e-9);
        const std::size_t n_paths = 50000;
        std::vector<std::vector<double>> paths(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i) {
            auto gen = rng::make_stream({31, i}, 1);
            paths[i] = s.sample(gen);
        }
        auto var_end = mc_mean(n_paths, [&](std::size_t i) {
            return paths[i][64] * paths[i][64];
        });
        CHECK(std::fabs(var_end.mean - std::pow(2.0, alpha)) < 4.0 * var_end.se);

        // increment stationarity: var of B(t+h)-B(t) = h^alpha independent of t
        for (std::size_t start : {static_cast<std::size_t>(0), static_cast<std::size_t>(24)}) {
            auto vi = mc_mean(n_paths, [&](std::size_t i) {
                double d = paths[i][start + 16] - paths[i][start];
                return d * d;
            });
            double h = grid.times[start + 16] - grid.times[start];
            CHECK(std::fabs(vi.mean - std::pow(h, alpha)) < 4.0 * vi.se);
        }
    }
}

TEST_CASE("ggbm sampling is bit-reproducible and starts at the origin") {
    ModelParams params(0.5, 0.8, 2);
    TimeGrid grid(1.0, 33);
    GgbmSampler s(params, grid);
    auto p1 = s.sample({77, 3});
    auto p2 = s.sample({77, 3});
    CHECK(p1.tau == p2.tau);
    CHECK(p1.values == p2.values);
    CHECK(p1.value(0, 0) == 0.0);
    CHECK(p1.value(1, 0) == 0.0);
    CHECK(p1.tau > 0.0);

    auto p3 = s.sample({77, 4});
    CHECK(p1.values != p3.values);

    // beta = 1: tau pinned to 1
    GgbmSampler s1(ModelParams(1.0, 0.8, 1), grid);
    CHECK(s1.sample({77, 5}).tau == 1.0);
}

TEST_CASE("batch results are independent of thread count") {
    ModelParams params(0.7, 1.2, 1);
    TimeGrid grid(1.0, 65);
    GgbmSampler s(params, grid);
    auto b1 = s.sample_batch({5, 0}, 300, 1);
    auto b2 = s.sample_batch({5, 0}, 300, 2);
    REQUIRE(b1.size() == b2.size());
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1[i].values == b2[i].values);
        CHECK(b1[i].tau == b2[i].tau);
    }
}

TEST_CASE("empirical characteristic function equals the Mittag-Leffler target") {
    // (beta, alpha, d) = (0.5, 0.5, 2) at |k|^2 t^alpha / 2 = 1
    ModelParams params(0.5, 0.5, 2);
    TimeGrid grid(1.0, 9);
    GgbmSampler s(params, grid);
    auto paths = s.sample_batch({101, 0}, 60000, 2);

    double t = 1.0;
    double k_mag = std::sqrt(2.0 / std::pow(t, params.alpha));
    std::vector<double> k = {k_mag / std::sqrt(2.0), k_mag / std::sqrt(2.0)};
    auto cf = empirical_char_fn(paths, k, t);
    double target = specfun::ml_eval(0.5, -1.0, 1e-11).value;
    CHECK(std::fabs(cf.mean.real() - target) < 4.0 * cf.se_re);
    CHECK(std::fabs(cf.mean.imag()) < 4.0 * cf.se_im);

    // k = 0 trivial
    auto cf0 = empirical_char_fn(paths, {0.0, 0.0}, 0.5);
    CHECK(cf0.mean.real() == 1.0);
    CHECK(cf0.se_re == 0.0);

    // off-grid time rejected
    CHECK_THROWS_AS(empirical_char_fn(paths, k, 0.51), std::invalid_argument);
}

TEST_CASE("brownian and fbm special cases") {
    // beta = 1, alpha = 1: standard Brownian motion, CF exp(-k^2 t / 2)
    ModelParams bm(1.0, 1.0, 1);
    TimeGrid grid(1.0, 9);
    GgbmSampler s(bm, grid);
    auto paths = s.sample_batch({111, 0}, 60000, 2);
    auto cf = empirical_char_fn(paths, {1.0}, 1.0);
    CHECK(std::fabs(cf.mean.real() - std::exp(-0.5)) < 4.0 * cf.se_re);

    // beta = 0.9, alpha = 1, d = 1 at k=1, t=1: E_0.9(-1/2)
    ModelParams half(0.9, 1.0, 1);
    GgbmSampler s2(half, grid);
    auto paths2 = s2.sample_batch({113, 0}, 60000, 2);
    auto cf2 = empirical_char_fn(paths2, {1.0}, 1.0);
    double target = specfun::ml_eval(0.9, -0.5, 1e-11).value;
    CHECK(std::fabs(cf2.mean.real() - target) < 4.0 * cf2.se_re);
}

TEST_CASE("moment check hits the closed-form moments") {
    // n=1: phi_norm_sq / Gamma(beta+1)
    auto r1 = moment_check(0.6, 2.0, 1, 200000, {201, 0});
    CHECK(std::fabs(r1.even_moment - 2.0 / std::tgamma(1.6)) < 4.0 * r1.even_se);
    CHECK(r1.target == doctest::Approx(2.0 / std::tgamma(1.6)).epsilon(1e-12));
    CHECK(std::fabs(r1.odd_z) < 4.0);

    // beta=1, n=2: Gaussian fourth moment 3 sigma^4
    auto r2 = moment_check(1.0, 1.5, 2, 200000, {203, 0});
    CHECK(r2.target == doctest::Approx(3.0 * 1.5 * 1.5).epsilon(1e-12));
    CHECK(std::fabs(r2.even_z) < 4.0);

    // beta=0.5, n=2, |phi|^2=1: 24/(4 Gamma(2)) = 6
    auto r3 = moment_check(0.5, 1.0, 2, 200000, {205, 0});
    CHECK(r3.target == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(std::fabs(r3.even_z) < 4.0);
    CHECK(std::fabs(r3.odd_z) < 4.0);
}

TEST_CASE("self-similarity and stationarity") {
    // a = 1: identical laws, z within threshold trivially
    ModelParams params(0.5, 0.8, 1);
    auto rep1 = self_similarity_check(params, 1.0, {0.5, 1.0}, 30000, {301, 0}, 2);
    CHECK(rep1.pass);

    auto rep2 = self_similarity_check(params, 2.0, {0.5, 1.0}, 30000, {303, 0}, 2);
    CHECK(rep2.pass);

    // classical Brownian scaling
    auto rep3 = self_similarity_check(ModelParams(1.0, 1.0, 1), 4.0, {0.5, 1.0}, 30000,
                                      {305, 0}, 2);
    CHECK(rep3.pass);

    auto rep4 = stationary_increments_check(params, 0.3, {0.5, 1.0}, 30000, {307, 0}, 2);
    CHECK(rep4.pass);
}

TEST_CASE("cross validation cholesky vs circulant") {
    TimeGrid grid(1.0, 65);
    for (double alpha : {0.5, 1.5}) {
        auto rep = sampler_cross_validation(alpha, grid, 20000, {401, 0}, 2);
        CHECK(rep.pass);
    }
}

TEST_CASE("subordination consistency and exchangeability") {
    TimeGrid grid(1.0, 33);
    auto rep = subordination_consistency_check(ModelParams(0.5, 0.8, 2), grid, 40000, {501, 0}, 2);
    CHECK(rep.pass);

    auto rep2 = exchangeability_check(ModelParams(0.6, 1.0, 3), grid, 40000, {503, 0}, 2);
    CHECK(rep2.pass);

    CHECK_THROWS_AS(exchangeability_check(ModelParams(0.6, 1.0, 1), grid, 100, {1, 0}, 1),
                    std::invalid_argument);
}
