#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ggbm/ddouble.hpp"
#include "ggbm/errors.hpp"
#include "ggbm/quadrature.hpp"
#include "ggbm/specfun.hpp"

using namespace ggbm;
using specfun::ml_deriv;
using specfun::ml_eval;
using specfun::mwright_eval;
using specfun::mwright_laplace_residual;

namespace {

// independent oracle: E_{1/2}(-y) = exp(y^2) erfc(y), switching to the
// scaled asymptotic series once exp(y^2) leaves the double range
double half_beta_closed_form(double y) {
    if (y <= 20.0) return std::exp(y * y) * std::erfc(y);
    double s = 1.0, term = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) / (2.0 * y * y);
        s += term;
    }
    return s / (y * std::sqrt(M_PI));
}

}  // namespace

TEST_CASE("double-double kernel sanity") {
    // lgamma against reflection/recursion identities at dd accuracy
    dd::DD lg_half = dd::lgamma(dd::DD{0.5});
    double ln_sqrt_pi = 0.5 * std::log(M_PI);
    CHECK(std::fabs(lg_half.to_double() - ln_sqrt_pi) < 1e-28);

    // Gamma(x+1) = x Gamma(x) at a non-trivial point
    dd::DD x{0.7};
    dd::DD lhs = dd::lgamma(dd::add(x, dd::DD{1.0}));
    dd::DD rhs = dd::add(dd::lgamma(x), dd::log(x));
    CHECK(std::fabs(dd::sub(lhs, rhs).to_double()) < 1e-29);

    // exp/log round trip
    dd::DD a{1.2345678901234567, 0.0};
    dd::DD rt = dd::log(dd::exp(a));
    CHECK(std::fabs(dd::sub(rt, a).to_double()) < 1e-29);

    // sinpi at an exact pole argument
    CHECK(dd::sinpi(dd::DD{-3.0}).hi == 0.0);
    CHECK(std::fabs(dd::sinpi(dd::DD{0.5}).to_double() - 1.0) < 1e-30);
}

TEST_CASE("ml_eval trivial values") {
    // beta = 1 reduces to exp
    auto r = ml_eval(1.0, 2.0, 1e-12);
    CHECK(r.value == doctest::Approx(std::exp(2.0)).epsilon(1e-13));

    // x = 0: only the n = 0 term survives
    CHECK(ml_eval(0.7, 0.0, 1e-12).value == 1.0);
}

TEST_CASE("ml_eval beta=1/2 against exp(y^2) erfc(y)") {
    // frozen closed-form identity, an implementation-independent route
    auto r = ml_eval(0.5, -1.0, 1e-10);
    CHECK(r.value == doctest::Approx(0.42758357615580705).epsilon(1e-10));
    CHECK(r.est_error <= 1e-10);

    for (double y = 0.0; y <= 10.0; y += 0.25) {
        auto e = ml_eval(0.5, -y, 1e-10);
        double target = half_beta_closed_form(y);
        CHECK(std::fabs(e.value - target) < 1e-8);
    }
}

TEST_CASE("ml_eval agrees with exp for beta=1 across the range") {
    for (double x = -20.0; x <= 20.0; x += 1.0) {
        auto e = ml_eval(1.0, x, 1e-12);
        double rel = std::fabs(e.value - std::exp(x)) / std::max(1.0, std::exp(x));
        CHECK(rel < 1e-12);
    }
}

TEST_CASE("ml_eval bounded and nonincreasing on the negative axis") {
    for (double beta : {0.25, 0.5, 0.75, 0.9, 1.0}) {
        double prev = 1.0 + 1e-12;
        for (double y = 0.0; y <= 60.0; y += 0.5) {
            if (y > specfun::kMlArgMax) break;
            auto e = ml_eval(beta, -y, 1e-11);
            CHECK(e.value > 0.0);
            CHECK(e.value <= 1.0 + e.est_error);
            CHECK(e.value <= prev + 1e-10);
            prev = e.value;
        }
    }
}

TEST_CASE("ml_eval spectral/asymptotic region is consistent with the closed form") {
    // beta = 1/2 has a closed form across every method's region
    for (double y : {6.0, 10.0, 20.0, 40.0, 80.0}) {
        auto e = ml_eval(0.5, -y, 1e-11);
        CHECK(std::fabs(e.value - half_beta_closed_form(y)) < 5e-11);
    }
    // method coverage: large argument must not be served by the plain series
    auto large = ml_eval(0.9, -50.0, 1e-11);
    CHECK(large.method != specfun::Method::series);
}

TEST_CASE("ml_eval rejects bad inputs") {
    CHECK_THROWS_AS(ml_eval(0.0, 1.0, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(ml_eval(1.5, 1.0, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(ml_eval(0.5, 101.0, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(ml_eval(0.5, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ml_eval(0.5, 1.0, 1e-20), tolerance_error);
    // positive arguments overflow once x^(1/beta) passes the double range
    CHECK_THROWS_AS(ml_eval(0.25, 50.0, 1e-10), tolerance_error);
}

TEST_CASE("ml_deriv basics") {
    // zeroth derivative is ml_eval
    auto d0 = ml_deriv(0.6, -1.5, 0, 1e-11);
    auto e0 = ml_eval(0.6, -1.5, 1e-11);
    CHECK(d0.value == doctest::Approx(e0.value).epsilon(1e-12));

    // all derivatives of exp
    auto d3 = ml_deriv(1.0, -1.0, 3, 1e-12);
    CHECK(d3.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));

    // termwise series oracle: positive value forced by complete monotonicity
    auto d2 = ml_deriv(0.5, -2.0, 2, 1e-11);
    CHECK(d2.value > 0.0);
}

TEST_CASE("ml_deriv matches finite differences of ml_eval") {
    const double h = 1e-4;
    for (double beta : {0.4, 0.75}) {
        for (double x : {-0.5, -2.0, -5.0}) {
            auto d1 = ml_deriv(beta, x, 1, 1e-11);
            double fd = (ml_eval(beta, x + h, 1e-13).value - ml_eval(beta, x - h, 1e-13).value) /
                        (2.0 * h);
            CHECK(d1.value == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("complete monotonicity witness") {
    // all derivatives of E_beta are nonnegative on the negative axis
    for (double beta : {0.25, 0.5, 0.75}) {
        for (int n = 0; n <= 4; ++n) {
            for (double y = 0.0; y <= 10.0; y += 1.0) {
                auto d = ml_deriv(beta, -y, n, 1e-10);
                CHECK(d.value >= -d.est_error);
            }
        }
    }
}

TEST_CASE("ml_deriv consistency across series and spectral routes") {
    // beta=0.5, y=4: series (dd) still works; spectral must agree
    for (int n : {1, 2, 3}) {
        auto s = ml_deriv(0.5, -4.0, n, 1e-11);
        // force the spectral route through a large-argument call scaled back
        // by comparing against a central difference of ml_deriv order n-1
        const double h = 1e-4;
        auto up = ml_deriv(0.5, -4.0 + h, n - 1, 1e-12);
        auto dn = ml_deriv(0.5, -4.0 - h, n - 1, 1e-12);
        double fd = (up.value - dn.value) / (2.0 * h);
        CHECK(s.value == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("mwright trivial and Gaussian values") {
    // x = 0: 1/Gamma(1-beta)
    for (double beta : {0.25, 0.5, 0.75}) {
        auto r = mwright_eval(beta, 0.0, 1e-12);
        CHECK(r.value == doctest::Approx(1.0 / std::tgamma(1.0 - beta)).epsilon(1e-13));
    }

    // beta = 1/2 reduces to the Gaussian density exp(-x^2/4)/sqrt(pi)
    auto r = mwright_eval(0.5, 1.2, 1e-12);
    CHECK(r.value == doctest::Approx(std::exp(-0.36) / std::sqrt(M_PI)).epsilon(1e-12));

    for (double x = 0.0; x <= 8.0; x += 0.2) {
        auto e = mwright_eval(0.5, x, 1e-11);
        double target = std::exp(-x * x / 4.0) / std::sqrt(M_PI);
        CHECK(std::fabs(e.value - target) < 1e-10);
    }
}

TEST_CASE("mwright nonnegative and normalized") {
    for (double beta : {0.25, 0.6, 0.75, 0.9}) {
        for (double x = 0.0; x <= 6.0; x += 0.31) {
            auto e = mwright_eval(beta, x, 1e-11);
            CHECK(e.value >= 0.0);
        }
    }

    // integral over [0, inf) equals 1 (Laplace pair at s = 0); oracle =
    // adaptive quadrature of mwright_eval
    double T = specfun::mwright_support_cut(0.75, 1e-16);
    auto q = quad::integrate([&](double t) { return mwright_eval(0.75, t, 1e-12).value; }, 0.0, T,
                             1e-10);
    CHECK(q.ok());
    CHECK(q.value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("mwright rejects bad inputs") {
    CHECK_THROWS_AS(mwright_eval(1.0, 0.5, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(mwright_eval(0.5, -0.1, 1e-10), std::invalid_argument);
}

TEST_CASE("mwright large-x method stays below the asymptotic envelope") {
    auto tail = specfun::mwright_tail(0.6);
    for (double x : {5.0, 8.0, 12.0}) {
        auto e = mwright_eval(0.6, x, 1e-10);
        CHECK(e.value <= tail(x) * 3.0 + 1e-12);
        CHECK(e.value >= 0.0);
    }
}

TEST_CASE("laplace pair residuals") {
    // (beta, s=0): both sides are 1
    CHECK(mwright_laplace_residual(0.6, 0.0) < 1e-8);

    // beta = 1/2, s = 4: sides equal exp(16) erfc(4); residual is the defect
    CHECK(mwright_laplace_residual(0.5, 4.0) <= 1e-8);

    // independent quadrature vs series evaluation deep into the argument range
    CHECK(mwright_laplace_residual(0.25, 10.0) <= 1e-6);

    for (double beta : {0.25, 0.5, 0.75, 0.9}) {
        for (double s : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
            CHECK(mwright_laplace_residual(beta, s) <= 1e-6);
        }
    }
}

TEST_CASE("laplace residual input validation") {
    CHECK_THROWS_AS(mwright_laplace_residual(0.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(mwright_laplace_residual(0.5, 51.0), std::invalid_argument);
    CHECK_THROWS_AS(mwright_laplace_residual(1.0, 1.0), std::invalid_argument);
}
