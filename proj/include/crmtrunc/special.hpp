#pragma once

// Special functions needed by the closed-form truncation bounds and the
// inverse-Levy sampler: principal Lambert W, the exponential integral E1
// and its inverse, digamma, log-gamma, and the (regularized) incomplete
// gamma functions.  Everything is pure and keeps no global state.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace crm {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

struct Precision {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_iter = 200;

    Precision() = default;
    Precision(double abs_tol_, double rel_tol_, int max_iter_)
        : abs_tol(abs_tol_), rel_tol(rel_tol_), max_iter(max_iter_) {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1)
            throw std::invalid_argument("Precision: require abs_tol > 0, rel_tol > 0, max_iter >= 1");
    }
};

inline const Precision& default_precision() {
    static const Precision p{};
    return p;
}

[[noreturn]] inline void domain_fail(const std::string& what) {
    throw std::domain_error(what);
}

// Principal branch W_0 on [0, inf): the x >= 0 solving x e^x = y.
inline double lambert_w0(double y, const Precision& prec = default_precision()) {
    if (!(y >= 0.0)) domain_fail("lambert_w0: require y >= 0");
    if (y == 0.0) return 0.0;
    // log(1+y) is within a modest factor of the root for all y >= 0.
    double w = std::log1p(y);
    if (w > 1.0) {
        const double lw = std::log(w);
        w = w - lw + lw / w;
    }
    bool converged = false;
    for (int it = 0; it < prec.max_iter; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - y;
        if (std::abs(f) <= prec.abs_tol * (1.0 + y)) {
            if (converged) return w;
            converged = true;  // one refinement step past the tolerance
        }
        // Halley step
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        w -= f / denom;
        if (w < 0.0) w = 0.0;
    }
    if (converged) return w;
    domain_fail("lambert_w0: no convergence after max_iter");
}

// E1(x) = int_x^inf u^{-1} e^{-u} du, x > 0.
// Power series below 1, Lentz continued fraction above.
inline double exp_integral_e1(double x, const Precision& prec = default_precision()) {
    if (!(x > 0.0)) domain_fail("exp_integral_e1: require x > 0");
    const double tol = 0.001 * prec.rel_tol;  // margin so the result meets rel_tol
    if (x < 1.0) {
        double sum = 0.0, term = 1.0;
        for (int n = 1; n <= prec.max_iter; ++n) {
            term *= -x / n;
            const double add = -term / n;
            sum += add;
            if (std::abs(add) <= tol * (std::abs(sum) + 1e-300))
                return sum - euler_gamma - std::log(x);
        }
        domain_fail("exp_integral_e1: series did not converge");
    }
    // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...))))
    const double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= prec.max_iter * 4; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = a * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= tol) return h * std::exp(-x);
    }
    domain_fail("exp_integral_e1: continued fraction did not converge");
}

// Inverse of E1 on (0, inf): bracketed bisection, then Newton polish.
// E1 is strictly decreasing with range (0, inf).
inline double exp_integral_e1_inverse(double u, const Precision& prec = default_precision()) {
    if (!(u > 0.0)) domain_fail("exp_integral_e1_inverse: require u > 0");
    double lo = 1.0, hi = 1.0;
    if (exp_integral_e1(1.0, prec) >= u) {
        while (exp_integral_e1(hi, prec) > u) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e8) break;  // E1(x) ~ e^{-x}/x decays fast; never reached
        }
    } else {
        while (exp_integral_e1(lo, prec) < u) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) domain_fail("exp_integral_e1_inverse: argument too large");
        }
    }
    for (int it = 0; it < prec.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (exp_integral_e1(mid, prec) > u) lo = mid; else hi = mid;
        if (hi - lo <= prec.abs_tol * (1.0 + hi)) break;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const double f = exp_integral_e1(x, prec) - u;
        if (std::abs(f) <= prec.abs_tol) break;
        const double step = f / (std::exp(-x) / x);  // E1'(x) = -e^{-x}/x
        x += step;
        if (x <= lo || x >= hi) { x = 0.5 * (lo + hi); break; }
    }
    return x;
}

inline double log_gamma(double x) {
    if (!(x > 0.0)) domain_fail("log_gamma: require x > 0");
    return std::lgamma(x);
}

inline double digamma(double x) {
    if (!(x > 0.0)) domain_fail("digamma: require x > 0");
    double acc = 0.0;
    while (x < 12.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double ix = 1.0 / x, ix2 = ix * ix;
    const double tail =
        ix2 * (1.0 / 12.0 -
        ix2 * (1.0 / 120.0 -
        ix2 * (1.0 / 252.0 -
        ix2 * (1.0 / 240.0 -
        ix2 * (1.0 / 132.0)))));
    return acc + std::log(x) - 0.5 * ix - tail;
}

namespace detail {

// Regularized lower incomplete gamma by series, x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 3e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    domain_fail("incomplete gamma: series did not converge");
}

// Regularized upper incomplete gamma by continued fraction, x >= a+1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= 3e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    domain_fail("incomplete gamma: continued fraction did not converge");
}

}  // namespace detail

// Regularized P(a,x) = gamma(a,x)/Gamma(a); P(0, x) := 1 for x > 0.
inline double gamma_p(double a, double x) {
    if (!(x >= 0.0)) domain_fail("gamma_p: require x >= 0");
    if (a == 0.0) return x > 0.0 ? 1.0 : 0.0;
    if (!(a > 0.0)) domain_fail("gamma_p: require a >= 0");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
    if (!(x >= 0.0)) domain_fail("gamma_q: require x >= 0");
    if (a == 0.0) return x > 0.0 ? 0.0 : 1.0;
    if (!(a > 0.0)) domain_fail("gamma_q: require a > 0");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_cf(a, x);
}

// Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt (not regularized), a > 0, x >= 0.
inline double upper_incomplete_gamma(double a, double x) {
    if (!(a > 0.0)) domain_fail("upper_incomplete_gamma: require a > 0");
    if (!(x >= 0.0)) domain_fail("upper_incomplete_gamma: require x >= 0");
    if (x == 0.0) return std::exp(std::lgamma(a));
    return gamma_q(a, x) * std::exp(std::lgamma(a));
}

// Gamma(a, x) extended to a in (-1, 0), used by the gamma-process tail with
// discount d: Gamma(-d, x) = (Gamma(1-d, x) - x^{-d} e^{-x}) / (-d).
inline double upper_incomplete_gamma_neg(double a, double x) {
    if (!(a > -1.0 && a < 0.0)) domain_fail("upper_incomplete_gamma_neg: require -1 < a < 0");
    if (!(x > 0.0)) domain_fail("upper_incomplete_gamma_neg: require x > 0");
    return (upper_incomplete_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

// CDF of Gamma(shape k, rate 1) evaluated at t; F_0 is identically 1.
inline double gamma_k1_cdf(std::uint64_t k, double t) {
    if (k == 0) return 1.0;
    if (t <= 0.0) return 0.0;
    return gamma_p(static_cast<double>(k), t);
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace crm
