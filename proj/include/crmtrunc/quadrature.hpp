#pragma once

// Adaptive Gauss-Kronrod (G7/K15) quadrature.  Integrals over (0, inf) or
// (0, b] go through the substitution theta = e^t so that power-law
// singularities at the origin become smooth exponentials.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace crm {

namespace detail {

// 15-point Kronrod nodes/weights on [-1,1] with the embedded 7-point Gauss rule.
inline constexpr double gk_nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898,  0.0,                0.207784955007898,
     0.405845151377397,  0.586087235467691,  0.741531185599394,
     0.864864423359769,  0.949107912342759,  0.991455371120813};
inline constexpr double gk_wk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double gk_wg[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    double rk = 0.0, rg = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double y = f(c + h * gk_nodes[i]);
        rk += gk_wk[i] * y;
        if (i % 2 == 1) rg += gk_wg[i / 2] * y;
    }
    value = rk * h;
    err = std::abs((rk - rg) * h);
}

struct AdaptCtx {
    double budget_per_width = 0.0;  // absolute error budget per unit width
    double rel_tol = 1e-9;
    long panels_left = 100000;
};

template <class F>
inline double adapt(const F& f, double a, double b, AdaptCtx& ctx, int depth) {
    double v, e;
    gk15(f, a, b, v, e);
    if (e <= ctx.budget_per_width * (b - a) || e <= ctx.rel_tol * std::abs(v) ||
        depth >= 26 || --ctx.panels_left <= 0 || b - a < 1e-13 * (std::abs(a) + 1.0))
        return v;
    const double m = 0.5 * (a + b);
    return adapt(f, a, m, ctx, depth + 1) + adapt(f, m, b, ctx, depth + 1);
}

}  // namespace detail

// Integral over a finite interval [a, b].
template <class F>
inline double integrate(const F& f, double a, double b, double rel_tol = 1e-9,
                        double abs_tol = 1e-300) {
    if (!(b > a)) return 0.0;
    double rough, err0;
    detail::gk15(f, a, b, rough, err0);
    detail::AdaptCtx ctx;
    ctx.rel_tol = rel_tol;
    ctx.budget_per_width =
        std::max(abs_tol, 0.1 * rel_tol * (std::abs(rough) + err0)) / (b - a);
    return detail::adapt(f, a, b, ctx, 0);
}

// Integral of f over (0, inf) via theta = e^t.  Expands the t-window
// symmetrically until the newly added slabs stop contributing.
template <class F>
inline double integrate_positive(const F& f, double rel_tol = 1e-9) {
    auto g = [&](double t) {
        const double theta = std::exp(t);
        const double y = f(theta) * theta;
        return std::isfinite(y) ? y : 0.0;
    };
    double total = integrate(g, -8.0, 8.0, rel_tol);
    double lo = -8.0, hi = 8.0;
    for (int i = 0; i < 60; ++i) {
        const double slab_lo = integrate(g, lo - 8.0, lo, rel_tol);
        const double slab_hi = integrate(g, hi, hi + 8.0, rel_tol);
        lo -= 8.0;
        hi += 8.0;
        total += slab_lo + slab_hi;
        if (std::abs(slab_lo) + std::abs(slab_hi) <=
            rel_tol * (std::abs(total) + 1e-300) && i >= 1)
            break;
    }
    return total;
}

// Integral of f over (lo, b] via theta = e^t, for integrands with a
// power-law singularity at 0 (lo defaults to 0).
template <class F>
inline double integrate_from_zero(const F& f, double b, double rel_tol = 1e-9) {
    if (!(b > 0.0)) return 0.0;
    auto g = [&](double t) {
        const double theta = std::exp(t);
        const double y = f(theta) * theta;
        return std::isfinite(y) ? y : 0.0;
    };
    const double t_hi = std::log(b);
    double total = 0.0;
    double hi = t_hi;
    for (int i = 0; i < 80; ++i) {
        const double slab = integrate(g, hi - 8.0, hi, rel_tol);
        total += slab;
        hi -= 8.0;
        if (std::abs(slab) <= rel_tol * (std::abs(total) + 1e-300) && i >= 1) break;
    }
    return total;
}

}  // namespace crm
