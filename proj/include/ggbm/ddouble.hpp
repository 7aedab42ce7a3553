#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

// Double-double arithmetic (~31 significant digits), following the
// error-free transformation algorithms of Dekker and Hida/Li/Bailey's QD
// library. Only what the special-function series need is implemented:
// +,-,*,/ plus exp, log, sin(pi x) and log-gamma.

namespace ggbm::dd {

struct DD {
    double hi = 0.0;
    double lo = 0.0;

    DD() = default;
    constexpr DD(double h, double l) : hi(h), lo(l) {}
    constexpr DD(double h) : hi(h), lo(0.0) {}

    double to_double() const { return hi + lo; }
};

inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

// requires |a| >= |b|
inline DD quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DD add(const DD& a, const DD& b) {
    DD s = two_sum(a.hi, b.hi);
    DD t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DD neg(const DD& a) { return {-a.hi, -a.lo}; }

inline DD sub(const DD& a, const DD& b) { return add(a, neg(b)); }

inline DD mul(const DD& a, const DD& b) {
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline DD mul(const DD& a, double b) {
    DD p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

inline DD div(const DD& a, const DD& b) {
    double q1 = a.hi / b.hi;
    DD r = sub(a, mul(b, q1));
    double q2 = r.hi / b.hi;
    r = sub(r, mul(b, q2));
    double q3 = r.hi / b.hi;
    DD q = quick_two_sum(q1, q2);
    return add(q, DD{q3});
}

inline DD div(const DD& a, double b) { return div(a, DD{b}); }

// exact when the scale is a power of two
inline DD mul_pow2(const DD& a, double p2) { return {a.hi * p2, a.lo * p2}; }

inline DD ldexp_dd(const DD& a, int n) { return {std::ldexp(a.hi, n), std::ldexp(a.lo, n)}; }

inline DD abs(const DD& a) { return a.hi < 0.0 ? neg(a) : a; }

inline bool less(const DD& a, const DD& b) {
    return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}

inline constexpr DD kPi{3.141592653589793116e+00, 1.224646799147353207e-16};
inline constexpr DD kLn2{6.931471805599452862e-01, 2.319046813846299558e-17};

inline DD exp(const DD& a) {
    if (a.hi > 709.0) return {std::numeric_limits<double>::infinity(), 0.0};
    if (a.hi < -745.0) return {0.0, 0.0};
    double m = std::nearbyint(a.hi / kLn2.hi);
    DD r = sub(a, mul(kLn2, m));
    r = mul_pow2(r, 1.0 / 512.0);
    // Taylor on |r| <= ~1.4e-3
    DD s{1.0, 0.0};
    DD term{1.0, 0.0};
    for (int k = 1; k <= 14; ++k) {
        term = mul(term, r);
        term = div(term, static_cast<double>(k));
        s = add(s, term);
        if (std::fabs(term.hi) < 1e-40) break;
    }
    for (int k = 0; k < 9; ++k) s = mul(s, s);
    return ldexp_dd(s, static_cast<int>(m));
}

inline DD log(const DD& a) {
    DD y{std::log(a.hi), 0.0};
    // one Newton step: y += a*exp(-y) - 1
    DD e = exp(y);
    y = add(y, div(sub(a, e), e));
    return y;
}

// sin(pi*a); exact integer reduction keeps large arguments accurate
inline DD sinpi(const DD& a) {
    double n = std::nearbyint(a.hi);
    DD r = sub(a, DD{n});
    DD t = mul(kPi, r);
    DD t2 = mul(t, t);
    DD sum = t;
    DD term = t;
    double sgn = -1.0;
    for (int k = 1; k <= 20; ++k) {
        term = mul(term, t2);
        term = div(term, static_cast<double>(2 * k * (2 * k + 1)));
        sum = add(sum, mul(term, sgn));
        sgn = -sgn;
        if (std::fabs(term.hi) < 1e-40) break;
    }
    bool odd = std::fmod(std::fabs(n), 2.0) == 1.0;
    return odd ? neg(sum) : sum;
}

namespace detail {
// B_{2k} / (2k (2k-1)) for the Stirling series, k = 1..13, as exact rationals
inline const DD* stirling_coeffs() {
    static const DD c[13] = {
        div(DD{1.0}, DD{12.0}),
        div(DD{-1.0}, DD{360.0}),
        div(DD{1.0}, DD{1260.0}),
        div(DD{-1.0}, DD{1680.0}),
        div(DD{1.0}, DD{1188.0}),
        div(DD{-691.0}, DD{360360.0}),
        div(DD{1.0}, DD{156.0}),
        div(DD{-3617.0}, DD{122400.0}),
        div(DD{43867.0}, DD{244188.0}),
        div(DD{-174611.0}, DD{125400.0}),
        div(DD{77683.0}, DD{5796.0}),
        div(DD{-236364091.0}, DD{1506960.0}),
        div(DD{657931.0}, DD{300.0}),
    };
    return c;
}
}  // namespace detail

// 0.5*log(2*pi), derived from kPi so the low word is trustworthy
inline const DD& half_ln_2pi() {
    static const DD v = mul_pow2(log(mul_pow2(kPi, 2.0)), 0.5);
    return v;
}

// log Gamma(w) for w >= 0.5: upward recursion into the Stirling regime
inline DD lgamma(DD w) {
    DD acc{0.0, 0.0};
    while (w.hi < 24.0) {
        acc = add(acc, log(w));
        w = add(w, DD{1.0});
    }
    DD z = div(DD{1.0}, w);
    DD z2 = mul(z, z);
    const DD* c = detail::stirling_coeffs();
    DD s{0.0, 0.0};
    for (int k = 12; k >= 0; --k) {
        s = mul(s, z2);
        s = add(s, c[k]);
    }
    s = mul(s, z);
    DD res = mul(sub(w, DD{0.5}), log(w));
    res = sub(res, w);
    res = add(res, half_ln_2pi());
    res = add(res, s);
    return sub(res, acc);
}

// log |1/Gamma(z)| with sign, for arbitrary real z. zero=true marks the
// poles of Gamma (z a nonpositive integer), where 1/Gamma vanishes.
struct LogGammaRecip {
    DD log_mag;
    int sign = 1;
    bool zero = false;
};

inline LogGammaRecip log_gamma_recip(const DD& z) {
    LogGammaRecip out;
    if (z.hi >= 0.5) {
        out.log_mag = neg(lgamma(z));
        return out;
    }
    // reflection: 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi
    DD s = sinpi(z);
    if (s.hi == 0.0) {
        out.zero = true;
        return out;
    }
    out.sign = s.hi > 0.0 ? 1 : -1;
    out.log_mag = add(lgamma(sub(DD{1.0}, z)), log(div(abs(s), kPi)));
    return out;
}

}  // namespace ggbm::dd
