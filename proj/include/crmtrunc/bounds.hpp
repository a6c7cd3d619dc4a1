#pragma once

// Truncation-error bounds for CRM representations: the closed-form catalog,
// Monte-Carlo and quadrature evaluators of the series/superposition master
// bounds, stochastic-mapping and hyperprior wrappers, and bound inversion.
//
// All bounds control (1/2)||p_{N,inf} - p_{N,K}||_1 <= 1 - exp(-B_{N,K}).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "measures.hpp"
#include "reps.hpp"
#include "stats.hpp"

namespace crm {

enum class BoundMethod { ClosedForm, MonteCarlo, Quadrature };

inline const char* bound_method_name(BoundMethod m) {
    switch (m) {
        case BoundMethod::ClosedForm: return "closed";
        case BoundMethod::MonteCarlo: return "mc";
        case BoundMethod::Quadrature: return "quadrature";
    }
    return "?";
}

struct BoundQuery {
    RateMeasureSpec spec;
    LikelihoodSpec lik;
    RepresentationSpec rep;
    std::uint64_t n_obs = 1;   // N
    std::uint64_t level = 0;   // K
    BoundMethod method = BoundMethod::ClosedForm;
    std::uint64_t mc_samples = 100000;
    std::uint64_t seed = 1;
    bool exact_integrand = false;  // integrate 1 - pi^N instead of N (1 - pi)
};

struct BoundResult {
    double b = 0.0;
    double error_bound = 0.0;  // min(1, 1 - e^{-B})
    BoundMethod method_used = BoundMethod::ClosedForm;
    std::optional<double> mc_std_err;
    std::optional<std::string> asymptotic_rate;
};

// Raised when a (process, likelihood, representation) triple has no
// closed-form entry; callers fall back to Monte Carlo.
struct CatalogMiss : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline double crm_error_from_b(double b) {
    return std::clamp(-std::expm1(-b), 0.0, 1.0);
}

inline BoundResult make_bound(double b, BoundMethod m,
                              std::optional<double> se = std::nullopt,
                              std::optional<std::string> tag = std::nullopt) {
    BoundResult r;
    r.b = std::max(b, 0.0);
    r.error_bound = crm_error_from_b(r.b);
    r.method_used = m;
    r.mc_std_err = se;
    r.asymptotic_rate = std::move(tag);
    return r;
}

namespace detail {

// Sum_{n=1}^{N} eta_{K+n}: the size-biased bound, telescoped closed form.
inline double sb_bound(const RateMeasureSpec& s, const LikelihoodSpec& h, std::uint64_t n_obs,
                       std::uint64_t K) {
    const double g = s.mass, d = s.discount;
    const double kk = static_cast<double>(K), nn = static_cast<double>(n_obs);
    switch (s.family) {
        case Family::GammaP: {
            const double l = s.scale;
            if (d > 0.0)
                return g * std::pow(l, 1.0 - d) / d *
                       (std::pow(l + kk + nn, d) - std::pow(l + kk, d));
            return g * l * std::log1p(nn / (l + kk));
        }
        case Family::BetaP: {
            const double a = s.scale;
            const double step = (h.kind == LikelihoodKind::NegBinom)
                                    ? static_cast<double>(h.failures)
                                    : 1.0;
            if (d == 0.0) return g * a * (digamma(a + (kk + nn) * step) - digamma(a + kk * step));
            const double c = g / d * std::exp(log_gamma(a + 1.0) - log_gamma(a + d));
            auto ratio = [&](double m) {
                return std::exp(log_gamma(a + d + m) - log_gamma(a + m));
            };
            return c * (ratio((kk + nn) * step) - ratio(kk * step));
        }
        case Family::BetaPrimeP: {
            const double a = s.scale;
            if (d == 0.0) return g * a * (digamma(a + kk + nn) - digamma(a + kk));
            const double c = g / d * std::exp(log_gamma(a + 1.0) - log_gamma(a + d));
            auto ratio = [&](double m) {
                return std::exp(log_gamma(a + d + m) - log_gamma(a + m));
            };
            return c * (ratio(kk + nn) - ratio(kk));
        }
        case Family::LomaxP:
            break;
    }
    throw CatalogMiss("size-biased bound: unsupported process/likelihood pair");
}

// prod_{k=1}^{K} (alpha + k d) / (alpha + k d - d + 1) via log-gamma.
inline double pl_product(double alpha, double d, std::uint64_t K) {
    if (K == 0) return 1.0;
    const double kk = static_cast<double>(K);
    if (d == 0.0) return std::pow(alpha / (alpha + 1.0), kk);
    return std::exp(log_gamma((alpha + 1.0) / d) - log_gamma(alpha / d + 1.0) +
                    log_gamma(alpha / d + kk + 1.0) - log_gamma(alpha / d + kk + 1.0 / d));
}

// B_{N,0} = N int (1 - pi) nu = N eta_1: the F_0 == 1 value, used at K = 0 by
// the rejection/inverse-Levy entries whose split bounds degenerate there.
inline double level_zero_bound(const RateMeasureSpec& s, const LikelihoodSpec& h,
                               std::uint64_t n_obs) {
    if (s.family == Family::LomaxP) {
        // N int (1 - e^{-x}) g l / (x (1 + l x)) dx = N g l (c_gamma - log l + e^{1/l} E1(1/l))
        const double l = s.scale;
        return static_cast<double>(n_obs) * s.mass * l *
               (euler_gamma - std::log(l) + std::exp(1.0 / l) * exp_integral_e1(1.0 / l));
    }
    return static_cast<double>(n_obs) * sb_bound(s, h, 1, 0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed-form catalog

inline BoundResult bound_closed_form(const BoundQuery& q) {
    const RateMeasureSpec& s = q.spec;
    const LikelihoodSpec& h = q.lik;
    require_compatible(s, h);
    if (q.n_obs == 0) return make_bound(0.0, BoundMethod::ClosedForm);
    const double g = s.mass, d = s.discount;
    const double nn = static_cast<double>(q.n_obs), kk = static_cast<double>(q.level);
    const std::uint64_t K = q.level;

    switch (q.rep.kind) {
        case RepKind::Bondesson: {
            if (d != 0.0) throw CatalogMiss("bondesson bound: requires d = 0");
            double c = 0.0;
            std::string tag;
            switch (s.family) {
                case Family::GammaP:
                    c = g * s.scale;
                    tag = "N*g*(g*l/(1+g*l))^K";
                    break;
                case Family::BetaP:
                    if (s.scale < 1.0)
                        throw CatalogMiss("bondesson beta-process bound: requires alpha >= 1");
                    c = g * s.scale;
                    tag = "N*g*(g*a/(1+g*a))^K";
                    break;
                case Family::BetaPrimeP:
                    c = g * s.scale;
                    tag = "N*g*(g*a/(1+g*a))^K";
                    break;
                default:
                    throw CatalogMiss("bondesson bound: no catalog entry for this process");
            }
            const double b = nn * g * std::pow(c / (1.0 + c), kk);
            return make_bound(b, BoundMethod::ClosedForm, std::nullopt, tag);
        }
        case RepKind::DecoupledBondesson: {
            if (d != 0.0) throw CatalogMiss("decoupled bondesson bound: requires d = 0");
            const double xi = q.rep.xi;
            const double base = std::pow(xi / (1.0 + xi), kk);
            switch (s.family) {
                case Family::GammaP:
                case Family::BetaP:
                    if (s.family == Family::BetaP && s.scale < 1.0)
                        throw CatalogMiss("decoupled bondesson beta-process bound: requires alpha >= 1");
                    return make_bound(nn * g * base, BoundMethod::ClosedForm, std::nullopt,
                                      "N*g*(xi/(1+xi))^K");
                case Family::BetaPrimeP: {
                    const double a = s.scale;
                    if (!(a > 1.0))
                        throw CatalogMiss(
                            "decoupled bondesson beta-prime bound: requires alpha > 1");
                    return make_bound(nn * g * a / (a - 1.0) * base, BoundMethod::ClosedForm,
                                      std::nullopt, "N*g*a/(a-1)*(xi/(1+xi))^K");
                }
                default:
                    throw CatalogMiss("decoupled bondesson bound: no catalog entry");
            }
        }
        case RepKind::SizeBiased: {
            const double b = detail::sb_bound(s, h, q.n_obs, K);
            std::string tag = d > 0.0 ? "N*K^(d-1)" : "N/K";
            return make_bound(b, BoundMethod::ClosedForm, std::nullopt, tag);
        }
        case RepKind::PowerLaw: {
            double mass = 0.0, alpha = 0.0, prefac = 1.0;
            std::string tag;
            switch (s.family) {
                case Family::GammaP:
                    mass = g;
                    alpha = s.scale;
                    tag = d > 0.0 ? "N*g*K^(1-1/d)" : "N*g*(l/(1+l))^K";
                    break;
                case Family::BetaP:
                    mass = g;
                    alpha = s.scale;
                    tag = d > 0.0 ? "N*g*K^(1-1/d)" : "N*g*(a/(1+a))^K";
                    break;
                case Family::BetaPrimeP: {
                    if (!(s.scale > 1.0))
                        throw CatalogMiss("power-law beta-prime bound: requires alpha > 1");
                    mass = g;
                    alpha = 1.0;
                    prefac = s.scale / (s.scale - 1.0);
                    tag = d > 0.0 ? "N*g*a/(a-1)*K^(1-1/d)" : "N*g*a/(a-1)*2^-K";
                    break;
                }
                default:
                    throw CatalogMiss("power-law bound: no catalog entry");
            }
            const double b = nn * mass * prefac * detail::pl_product(alpha, d, K);
            return make_bound(b, BoundMethod::ClosedForm, std::nullopt, tag);
        }
        case RepKind::Rejection: {
            // The W0/split forms are loose at small K; B_{N,K} <= B_{N,0} = N eta_1
            // always, so the level-zero value caps every entry.
            const double b0 = detail::level_zero_bound(s, h, q.n_obs);
            if (K == 0) return make_bound(b0, BoundMethod::ClosedForm);
            auto capped = [b0](BoundResult r) {
                if (r.b > b0) {
                    r.b = b0;
                    r.error_bound = crm_error_from_b(b0);
                }
                return r;
            };
            switch (s.family) {
                case Family::GammaP: {
                    const double l = s.scale;
                    if (d == 0.0) {
                        const double bstar = kk * lambert_w0(1.0 / (3.0 * g * l));
                        return capped(make_bound(2.0 * nn * g / std::expm1(bstar),
                                                 BoundMethod::ClosedForm, std::nullopt,
                                                 "2*N*g*exp(-K*W0(1/(3*g*l)))"));
                    }
                    // split bound with a^{1-d+dK} = (1-d) C2 (3 gp / K)^K,
                    // C2 = Gamma(1-d)/d ((1+l)^d - l^d), gp = g l^{1-d}/(d Gamma(1-d))
                    const double gl1d = std::exp(log_gamma(1.0 - d));
                    const double gp = g * std::pow(l, 1.0 - d) / (d * gl1d);
                    const double c2 = gl1d / d * (std::pow(1.0 + l, d) - std::pow(l, d));
                    const double e1 = (1.0 - d) / ((1.0 - d) + d * kk);
                    const double log_a1d =
                        e1 * (std::log((1.0 - d) * c2) +
                              kk * std::log(3.0 * gp / kk));
                    const double pre = g * std::pow(l, 1.0 - d) / gl1d;
                    const double b = 2.0 * nn * pre / (1.0 - d) * std::exp(log_a1d);
                    return capped(make_bound(b, BoundMethod::ClosedForm, std::nullopt,
                                             "N*K^(-(1-d)/d)"));
                }
                case Family::BetaP: {
                    const double a = s.scale;
                    if (!(a >= 1.0 - d))
                        throw CatalogMiss("rejection beta-process bound: requires alpha >= 1-d");
                    const double gp =
                        g * std::exp(log_gamma(a + 1.0) - log_gamma(1.0 - d) - log_gamma(a + d));
                    if (d == 0.0) {
                        const double bstar = kk * lambert_w0(1.0 / (3.0 * gp));
                        return capped(make_bound(2.0 * nn * gp * std::exp(-bstar),
                                                 BoundMethod::ClosedForm, std::nullopt,
                                                 "2*N*g*a*exp(-K*W0(1/(3*g*a)))"));
                    }
                    // a^{1+dK} = (1-d) (3 gp/(d K))^K
                    const double loga1d = (1.0 - d) / (1.0 + d * kk) *
                                          (std::log1p(-d) + kk * std::log(3.0 * gp / (d * kk)));
                    const double b = 2.0 * nn * gp / (1.0 - d) * std::exp(loga1d);
                    return capped(
                        make_bound(b, BoundMethod::ClosedForm, std::nullopt, "N*K^(-(1-d)/d)"));
                }
                case Family::BetaPrimeP: {
                    const double a = s.scale;
                    if (d == 0.0) {
                        if (!(a >= 1.0))
                            throw CatalogMiss(
                                "rejection beta-prime bound with d = 0: requires alpha >= 1");
                        // b^{K+a} e^b = a (K/(3 g a))^K, i.e. b = (K+a) W0(arg)
                        const double ka = kk + a;
                        const double arg = std::exp(-std::log(ka) + std::log(a) / ka -
                                                    kk / ka * std::log(3.0 * g * a / kk));
                        const double bstar = ka * lambert_w0(arg);
                        return capped(make_bound(2.0 * nn * g * a * std::exp(-bstar),
                                                 BoundMethod::ClosedForm, std::nullopt,
                                                 "2*N*g*a*exp(-(K+a)*W0(1/(3*a*g)))"));
                    }
                    // a^{1+dK} = ((1-d)/alpha) (3 gp / K)^K, gp = g Gamma(a+1)/(d Gamma(1-d) Gamma(a+d))
                    const double A =
                        g * std::exp(log_gamma(a + 1.0) - log_gamma(1.0 - d) - log_gamma(a + d));
                    const double gp = A / d;
                    const double loga1d =
                        (1.0 - d) / (1.0 + d * kk) *
                        (std::log1p(-d) - std::log(a) + kk * std::log(3.0 * gp / kk));
                    const double b = 2.0 * nn * A / (1.0 - d) * std::exp(loga1d);
                    return capped(
                        make_bound(b, BoundMethod::ClosedForm, std::nullopt, "N*K^(-(1-d)/d)"));
                }
                default:
                    throw CatalogMiss("rejection bound: no catalog entry for this process");
            }
        }
        case RepKind::IL: {
            if (s.family != Family::LomaxP)
                throw CatalogMiss("inverse-levy bound: catalogued only for the lomax process");
            if (K == 0)
                return make_bound(detail::level_zero_bound(s, h, q.n_obs),
                                  BoundMethod::ClosedForm);
            const double l = s.scale;
            const double arg = 1.0 / (3.0 * g * std::pow(l, (kk + 2.0) / (kk + 1.0)) *
                                      std::pow(kk + 1.0, 1.0 / (kk + 1.0)));
            const double bstar = kk * lambert_w0(arg);
            const double b = 2.0 * nn * g * (1.0 + 1.0 / (3.0 * g * l)) / std::expm1(bstar);
            const double b0 = detail::level_zero_bound(s, h, q.n_obs);
            return make_bound(std::min(b, b0), BoundMethod::ClosedForm, std::nullopt,
                              "2*N*g*(1+1/(3*g*l))*exp(-K*W0(1/(3*g*l)))");
        }
        case RepKind::Thinning:
            throw CatalogMiss("thinning bound: no closed form; evaluate by quadrature or mc");
    }
    throw CatalogMiss("bound_closed_form: no catalog entry");
}

// ---------------------------------------------------------------------------
// Quadrature evaluation of the series-representation bounds
// (F_K-weighted reductions; deterministic)

namespace detail {

// factor(theta, omt) with omt = 1 - theta held exactly near the beta-process
// upper endpoint
inline std::function<double(double, double)> pi_power_factor(const LikelihoodSpec& h,
                                                             std::uint64_t n_obs, bool exact) {
    if (exact)
        return [h, n_obs](double th, double omt) {
            return h.one_minus_pi_pow2(th, omt, static_cast<double>(n_obs));
        };
    return [h, n_obs](double th, double omt) {
        return static_cast<double>(n_obs) * h.one_minus_pi2(th, omt);
    };
}

// int f(theta, 1-theta) nu(dtheta) over the support of s
template <class F>
inline double integrate_against_nu(const RateMeasureSpec& s, const F& f, double rel_tol) {
    auto lower = [&](double th) { return f(th, 1.0 - th) * nu_density(s, th); };
    if (s.upper_bounded_support()) {
        auto upper = [&](double u) { return f(1.0 - u, u) * nu_density_beta_upper(s, u); };
        return integrate_from_zero(lower, 0.5, rel_tol) +
               integrate_from_zero(upper, 0.5, rel_tol);
    }
    return integrate_positive(lower, rel_tol);
}

}  // namespace detail

inline BoundResult bound_series_quadrature(const BoundQuery& q,
                                           const std::function<double(double)>* pi_override = nullptr,
                                           const Precision& prec = default_precision()) {
    const RateMeasureSpec& s = q.spec;
    if (q.n_obs == 0 && pi_override == nullptr) return make_bound(0.0, BoundMethod::Quadrature);
    std::function<double(double, double)> factor;
    if (pi_override != nullptr)
        factor = [pi_override](double th, double) { return 1.0 - (*pi_override)(th); };
    else
        factor = detail::pi_power_factor(q.lik, q.n_obs, q.exact_integrand);
    const std::uint64_t K = q.level;
    const double rel_tol = 1e-9;

    switch (q.rep.kind) {
        case RepKind::IL: {
            auto f = [&](double th, double omt) {
                return gamma_k1_cdf(K, nu_tail(s, th, prec)) * factor(th, omt);
            };
            return make_bound(detail::integrate_against_nu(s, f, rel_tol),
                              BoundMethod::Quadrature);
        }
        case RepKind::Rejection: {
            const RateMeasureSpec& mu = *q.rep.mu;
            auto f = [&](double th, double omt) {
                return gamma_k1_cdf(K, nu_tail(mu, th, prec)) * factor(th, omt);
            };
            return make_bound(detail::integrate_against_nu(s, f, rel_tol),
                              BoundMethod::Quadrature);
        }
        case RepKind::Thinning: {
            const AuxDensity& g = *q.rep.g;
            auto f = [&](double v, double omv, double gd) {
                if (!(gd > 0.0)) return 0.0;
                const double w =
                    (s.family == Family::BetaP ? nu_density_beta_upper(s, omv)
                                               : nu_density(s, v)) /
                    gd;
                // int_0^w F_K(u) du = w P(K, w) - K P(K+1, w)
                const double inner = w * gamma_k1_cdf(K, w) -
                                     static_cast<double>(K) * gamma_k1_cdf(K + 1, w);
                return factor(v, omv) * inner * gd;
            };
            double b;
            if (g.kind == AuxDensity::Kind::Beta) {
                // the beta density, like the measure, needs 1-v exact at both ends
                auto dens_upper = [&](double u) {
                    return std::exp((g.a - 1.0) * std::log1p(-u) + (g.b - 1.0) * std::log(u) -
                                    log_beta(g.a, g.b));
                };
                auto flo = [&](double v) { return f(v, 1.0 - v, g.density(v)); };
                auto fup = [&](double u) { return f(1.0 - u, u, dens_upper(u)); };
                b = integrate_from_zero(flo, 0.5, rel_tol) +
                    integrate_from_zero(fup, 0.5, rel_tol);
            } else {
                auto flo = [&](double v) { return f(v, 1.0 - v, g.density(v)); };
                b = integrate_positive(flo, rel_tol);
            }
            return make_bound(b, BoundMethod::Quadrature);
        }
        default:
            throw std::invalid_argument(
                "bound_series_quadrature: supported for inverse-levy, thinning and rejection");
    }
}

// Tight Bondesson bound for the gamma process by 1-D quadrature over G_K;
// equals what the exact-integrand Monte-Carlo path estimates.
//   exact:      B = c E[log(1 + N e^{-G_K/c} / lambda)]
//   simplified: B = N c E[log(1 + e^{-G_K/c} / lambda)]
inline double bondesson_gamma_tight_bound(double mass, double lambda, std::uint64_t n_obs,
                                          std::uint64_t K, bool exact) {
    const double c = mass * lambda;
    const double nn = static_cast<double>(n_obs);
    auto val = [&](double gk) {
        const double e = std::exp(-gk / c);
        return exact ? c * std::log1p(nn * e / lambda) : nn * c * std::log1p(e / lambda);
    };
    if (K == 0) return val(0.0);
    auto f = [&](double gk) {
        const double logdens = (static_cast<double>(K) - 1.0) * std::log(gk) - gk -
                               log_gamma(static_cast<double>(K));
        return val(gk) * std::exp(logdens);
    };
    return integrate_positive(f, 1e-10);
}

// ---------------------------------------------------------------------------
// Monte-Carlo evaluation of the series bounds

namespace detail {

// int_0^cap factor(x) nu(dx), with closed forms for the gamma-Poisson pair.
inline double truncated_nu_integral(const RateMeasureSpec& s, const LikelihoodSpec& h,
                                    std::uint64_t n_obs, bool exact, double cap,
                                    const Precision& prec) {
    if (!(cap > 0.0)) return 0.0;
    const double nn = static_cast<double>(n_obs);
    if (s.family == Family::GammaP && s.discount == 0.0 &&
        h.kind == LikelihoodKind::Poisson) {
        const double l = s.scale;
        const double gl = s.mass * l;
        auto e1_safe = [&](double x) { return x > 700.0 ? 0.0 : exp_integral_e1(x, prec); };
        auto piece = [&](double a) {
            // int_0^cap x^{-1} e^{-l x} (1 - e^{-a x}) dx
            return std::log1p(a / l) - (e1_safe(l * cap) - e1_safe((l + a) * cap));
        };
        return exact ? gl * piece(nn) : nn * gl * piece(1.0);
    }
    auto factor = pi_power_factor(h, n_obs, exact);
    auto f = [&](double th) { return factor(th, 1.0 - th) * nu_density(s, th); };
    if (s.upper_bounded_support()) {
        const double upper = std::min(cap, 1.0);
        if (upper <= 0.5) return integrate_from_zero(f, upper, 1e-8);
        auto fu = [&](double u) {
            return factor(1.0 - u, u) * nu_density_beta_upper(s, u);
        };
        const double skip = (upper < 1.0) ? integrate_from_zero(fu, 1.0 - upper, 1e-8) : 0.0;
        return integrate_from_zero(f, 0.5, 1e-8) + integrate_from_zero(fu, 0.5, 1e-8) - skip;
    }
    return integrate_from_zero(f, cap, 1e-8);
}

// c * int_0^cap factor(x) x^{-1} dx for the Bondesson exact integrand.
inline double bondesson_inner(const LikelihoodSpec& h, std::uint64_t n_obs, double cap,
                              const Precision& prec) {
    if (!(cap > 0.0)) return 0.0;
    const double nn = static_cast<double>(n_obs);
    switch (h.kind) {
        case LikelihoodKind::Poisson:
            // int_0^s (1 - e^{-n x})/x dx = log(n s) + c_gamma + E1(n s)
            return std::log(nn * cap) + euler_gamma + exp_integral_e1(nn * cap, prec);
        default: {
            auto f = [&](double x) {
                return h.one_minus_pi_pow(x, nn) / x;
            };
            return integrate_from_zero(f, cap, 1e-9);
        }
    }
}

}  // namespace detail

inline BoundResult bound_series_mc(const BoundQuery& q,
                                   const Precision& prec = default_precision()) {
    const RateMeasureSpec& s = q.spec;
    if (!is_series(q.rep.kind))
        throw std::invalid_argument("bound_series_mc: representation is not a series kind");
    if (q.mc_samples == 0) throw std::invalid_argument("bound_series_mc: sample budget is 0");
    if (q.n_obs == 0) return make_bound(0.0, BoundMethod::MonteCarlo, 0.0);

    Rng rng(q.seed);
    RunningMoments mom;
    const std::uint64_t K = q.level;
    const double nn = static_cast<double>(q.n_obs);

    for (std::uint64_t i = 0; i < q.mc_samples; ++i) {
        const double gk = (K == 0) ? 0.0 : rng.gamma_raw(static_cast<double>(K), 1.0);
        double y = 0.0;
        switch (q.rep.kind) {
            case RepKind::IL: {
                const double cap = K == 0 ? (s.upper_bounded_support() ? 1.0 : 1e12)
                                          : nu_tail_inverse(s, gk, prec);
                y = detail::truncated_nu_integral(s, q.lik, q.n_obs, q.exact_integrand, cap, prec);
                break;
            }
            case RepKind::Rejection: {
                const RateMeasureSpec& mu = *q.rep.mu;
                const double cap = K == 0 ? (s.upper_bounded_support() ? 1.0 : 1e12)
                                          : nu_tail_inverse(mu, gk, prec);
                y = detail::truncated_nu_integral(s, q.lik, q.n_obs, q.exact_integrand, cap, prec);
                break;
            }
            case RepKind::Thinning: {
                const AuxDensity& g = *q.rep.g;
                const double v = g.sample(rng);
                const double gd = g.density(v);
                const double w = gd > 0.0 ? nu_density(s, v) / gd : 0.0;
                const double excess = w - gk;
                if (excess > 0.0) {
                    const double f = q.exact_integrand
                                         ? q.lik.one_minus_pi_pow(v, nn)
                                         : nn * q.lik.one_minus_pi(v);
                    y = f * excess;
                }
                break;
            }
            case RepKind::Bondesson: {
                if (q.exact_integrand) {
                    const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                    const double cap = v * std::exp(-gk / q.rep.c_nu);
                    y = q.rep.c_nu * detail::bondesson_inner(q.lik, q.n_obs, cap, prec);
                } else {
                    // relaxed form matching the catalog: N gamma E[e^{-G_K/c}]
                    y = nn * s.mass * std::exp(-gk / q.rep.c_nu);
                }
                break;
            }
            default:
                break;
        }
        mom.add(y);
    }
    return make_bound(mom.mean, BoundMethod::MonteCarlo, mom.std_err());
}

// ---------------------------------------------------------------------------
// Superposition bounds

inline BoundResult bound_superposition(const BoundQuery& q,
                                       const Precision& prec = default_precision()) {
    const RateMeasureSpec& s = q.spec;
    if (is_series(q.rep.kind))
        throw std::invalid_argument("bound_superposition: representation is not a superposition kind");
    if (q.n_obs == 0) return make_bound(0.0, BoundMethod::ClosedForm);

    if (q.rep.kind == RepKind::SizeBiased) {
        // nu_K^+ = pi^K nu, so B = sum_{n=1}^N eta_{K+n}, exactly.
        const double b = detail::sb_bound(s, q.lik, q.n_obs, q.level);
        auto r = make_bound(b, BoundMethod::ClosedForm);
        r.asymptotic_rate = s.discount > 0.0 ? "N*K^(d-1)" : "N/K";
        return r;
    }

    if (q.method != BoundMethod::MonteCarlo) {
        return bound_closed_form(q);  // DB/PL closed forms; throws CatalogMiss outside catalog
    }

    // Monte-Carlo fallback over the tail expectation bounds.
    Rng rng(q.seed);
    RunningMoments mom;
    const double nn = static_cast<double>(q.n_obs);
    const std::uint64_t kmax_hard = q.level + 20000;
    for (std::uint64_t i = 0; i < q.mc_samples; ++i) {
        double y = 0.0;
        if (q.rep.kind == RepKind::DecoupledBondesson) {
            const double rate = q.rep.c_nu / q.rep.xi;
            for (std::uint64_t k = q.level + 1; k <= kmax_hard; ++k) {
                const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                const double t = rng.gamma_raw(static_cast<double>(k), q.rep.xi);
                const double term = rate * q.lik.one_minus_pi(v * std::exp(-t));
                y += term;
                const double geom = std::pow(q.rep.xi / (1.0 + q.rep.xi),
                                             static_cast<double>(k));
                if (rate * geom < 1e-14 * (y + 1e-300)) break;
            }
            y *= nn;
        } else {  // PowerLaw
            const double d = s.discount;
            double logstick = 0.0;
            for (std::uint64_t k = 1; k <= kmax_hard; ++k) {
                const double u = rng.beta_raw(1.0 - d, q.rep.pl_alpha + static_cast<double>(k) * d);
                if (k > q.level) {
                    const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                    const double th = v * u * std::exp(logstick);
                    y += q.rep.pl_mass * q.lik.one_minus_pi(th);
                    if (q.rep.pl_mass * std::exp(logstick) < 1e-14 * (y + 1e-300)) break;
                }
                logstick += std::log1p(-u);
            }
            y *= nn;
        }
        mom.add(y);
    }
    return make_bound(mom.mean, BoundMethod::MonteCarlo, mom.std_err());
}

// ---------------------------------------------------------------------------
// Dispatcher

inline BoundResult evaluate_bound(const BoundQuery& q,
                                  const Precision& prec = default_precision()) {
    if (q.n_obs == 0) return make_bound(0.0, q.method);
    switch (q.method) {
        case BoundMethod::ClosedForm:
            if (q.rep.kind == RepKind::SizeBiased) return bound_superposition(q, prec);
            return bound_closed_form(q);
        case BoundMethod::Quadrature:
            if (is_series(q.rep.kind)) {
                if (q.rep.kind == RepKind::Bondesson)
                    throw std::invalid_argument(
                        "quadrature bound: not available for bondesson; use closed or mc");
                return bound_series_quadrature(q, nullptr, prec);
            }
            return bound_superposition(q, prec);
        case BoundMethod::MonteCarlo:
            if (is_series(q.rep.kind)) return bound_series_mc(q, prec);
            return bound_superposition(q, prec);
    }
    throw std::invalid_argument("evaluate_bound: unknown method");
}

// ---------------------------------------------------------------------------
// Stochastic mapping: B_{1,K}(pi_{kappa,N~}) with
// pi_{kappa,N~}(theta) = int h~(0|u)^{N~} kappa(theta, du).

inline std::function<double(double)> effective_pi(const KernelSpec& kernel,
                                                  const LikelihoodSpec& h_tilde,
                                                  std::uint64_t n_tilde,
                                                  std::uint64_t mc_budget = 4096,
                                                  std::uint64_t seed = 991) {
    const double nt = static_cast<double>(n_tilde);
    switch (kernel.kind) {
        case KernelSpec::Kind::Identity:
            return [h_tilde, nt](double th) { return std::pow(h_tilde.pi(th), nt); };
        case KernelSpec::Kind::GammaToBeta: {
            const double a = kernel.alpha;
            return [a, h_tilde, nt](double th) {
                auto f = [&](double g) {
                    const double dens =
                        std::exp(a * std::log(a) + (a - 1.0) * std::log(g) - a * g - log_gamma(a));
                    return std::pow(h_tilde.pi(th / (th + g)), nt) * dens;
                };
                return integrate_positive(f, 1e-9);
            };
        }
        case KernelSpec::Kind::GammaToBetaPrime: {
            const double shape = kernel.alpha + kernel.discount;
            return [shape, h_tilde, nt](double th) {
                auto f = [&](double g) {
                    const double dens = std::exp((shape - 1.0) * std::log(g) - g - log_gamma(shape));
                    return std::pow(h_tilde.pi(th / g), nt) * dens;
                };
                return integrate_positive(f, 1e-9);
            };
        }
        case KernelSpec::Kind::Custom: {
            auto fn = kernel.custom;
            return [fn, h_tilde, nt, mc_budget, seed](double th) {
                std::uint64_t bits;
                static_assert(sizeof(bits) == sizeof(th));
                std::memcpy(&bits, &th, sizeof(bits));
                Rng rng(derive_seed(seed, bits));
                double acc = 0.0;
                for (std::uint64_t i = 0; i < mc_budget; ++i)
                    acc += std::pow(h_tilde.pi(fn(th, rng)), nt);
                return acc / static_cast<double>(mc_budget);
            };
        }
    }
    return [](double) { return 1.0; };
}

inline BoundResult bound_with_kernel(const BoundQuery& q, const KernelSpec& kernel,
                                     std::uint64_t n_tilde,
                                     const Precision& prec = default_precision()) {
    if (n_tilde == 0) return make_bound(0.0, q.method);
    auto pi_eff = effective_pi(kernel, q.lik, n_tilde);

    switch (q.rep.kind) {
        case RepKind::IL:
        case RepKind::Thinning:
        case RepKind::Rejection: {
            BoundQuery q1 = q;
            q1.n_obs = 1;
            return bound_series_quadrature(q1, &pi_eff, prec);
        }
        case RepKind::SizeBiased: {
            // B_{1,K}(pi_eff) = eta^{eff}_{K+1}
            const double b = eta_k_quadrature(q.spec, pi_eff, q.level + 1, 1e-9);
            return make_bound(b, BoundMethod::Quadrature);
        }
        case RepKind::Bondesson:
        case RepKind::DecoupledBondesson:
        case RepKind::PowerLaw: {
            Rng rng(q.seed);
            RunningMoments mom;
            const std::uint64_t n_samp = std::max<std::uint64_t>(q.mc_samples / 16, 1024);
            for (std::uint64_t i = 0; i < n_samp; ++i) {
                double y = 0.0;
                if (q.rep.kind == RepKind::Bondesson) {
                    const double gk = (q.level == 0)
                                          ? 0.0
                                          : rng.gamma_raw(static_cast<double>(q.level), 1.0);
                    const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                    const double cap = v * std::exp(-gk / q.rep.c_nu);
                    auto f = [&](double x) { return (1.0 - pi_eff(x)) / x; };
                    y = q.rep.c_nu * integrate_from_zero(f, cap, 1e-7);
                } else if (q.rep.kind == RepKind::DecoupledBondesson) {
                    const double rate = q.rep.c_nu / q.rep.xi;
                    for (std::uint64_t k = q.level + 1; k <= q.level + 4000; ++k) {
                        const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                        const double t = rng.gamma_raw(static_cast<double>(k), q.rep.xi);
                        y += rate * (1.0 - pi_eff(v * std::exp(-t)));
                        if (rate * std::pow(q.rep.xi / (1.0 + q.rep.xi), static_cast<double>(k)) <
                            1e-12 * (y + 1e-300))
                            break;
                    }
                } else {
                    const double d = q.spec.discount;
                    double logstick = 0.0;
                    for (std::uint64_t k = 1; k <= q.level + 4000; ++k) {
                        const double u =
                            rng.beta_raw(1.0 - d, q.rep.pl_alpha + static_cast<double>(k) * d);
                        if (k > q.level) {
                            const double v = q.rep.g->draws() ? q.rep.g->sample(rng) : 1.0;
                            y += q.rep.pl_mass * (1.0 - pi_eff(v * u * std::exp(logstick)));
                            if (q.rep.pl_mass * std::exp(logstick) < 1e-12 * (y + 1e-300)) break;
                        }
                        logstick += std::log1p(-u);
                    }
                }
                mom.add(y);
            }
            return make_bound(mom.mean, BoundMethod::MonteCarlo, mom.std_err());
        }
    }
    throw std::invalid_argument("bound_with_kernel: unsupported representation");
}

// ---------------------------------------------------------------------------
// Hyperpriors on the mass parameter

struct HyperpriorSpec {
    enum class Prior { Gamma, Lomax, PointMass };
    Prior prior = Prior::Gamma;
    double a = 1.0;
    double b = 1.0;  // Gamma rate; unused for Lomax(a, 1) and PointMass

    static HyperpriorSpec gamma(double a_, double b_) {
        if (!(a_ > 0.0) || !(b_ > 0.0))
            throw std::invalid_argument("hyperprior: require a > 0 and b > 0");
        return {Prior::Gamma, a_, b_};
    }
    static HyperpriorSpec lomax(double a_) {
        if (!(a_ > 0.0)) throw std::invalid_argument("hyperprior: require a > 0");
        return {Prior::Lomax, a_, 1.0};
    }
    static HyperpriorSpec point_mass(double g0) {
        if (!(g0 > 0.0)) throw std::invalid_argument("hyperprior: require gamma0 > 0");
        return {Prior::PointMass, g0, 1.0};
    }
};

// Entries whose B is affine (proportional) in the mass parameter gamma.
inline bool bound_affine_in_mass(const BoundQuery& q) {
    switch (q.rep.kind) {
        case RepKind::DecoupledBondesson:
        case RepKind::SizeBiased:
        case RepKind::PowerLaw:
            return true;
        default:
            return false;
    }
}

inline BoundResult bound_with_hyperprior(const BoundQuery& q, const HyperpriorSpec& hp,
                                         const Precision& prec = default_precision()) {
    if (q.n_obs == 0) return make_bound(0.0, q.method);
    auto at_mass = [&](double g0) {
        BoundQuery q2 = q;
        q2.spec = RateMeasureSpec(q.spec.family, g0, q.spec.scale, q.spec.discount);
        // keep representation parameters tied to the substituted mass
        q2.rep = make_representation(q2.spec, q.rep.kind, &q2.lik,
                                     q.rep.kind == RepKind::DecoupledBondesson
                                         ? std::optional<double>(q.rep.xi)
                                         : std::nullopt);
        q2.method = BoundMethod::ClosedForm;
        return evaluate_bound(q2, prec).b;
    };
    switch (hp.prior) {
        case HyperpriorSpec::Prior::PointMass:
            return make_bound(at_mass(hp.a), BoundMethod::ClosedForm);
        case HyperpriorSpec::Prior::Gamma: {
            if (bound_affine_in_mass(q))
                return make_bound(at_mass(hp.a / hp.b), BoundMethod::ClosedForm);
            if (q.method == BoundMethod::MonteCarlo) {
                Rng rng(q.seed);
                RunningMoments mom;
                const std::uint64_t n = std::max<std::uint64_t>(q.mc_samples / 100, 256);
                for (std::uint64_t i = 0; i < n; ++i)
                    mom.add(at_mass(rng.gamma_raw(hp.a, hp.b)));
                return make_bound(mom.mean, BoundMethod::MonteCarlo, mom.std_err());
            }
            throw std::invalid_argument(
                "bound_with_hyperprior: B is not affine in gamma for this entry; "
                "use a monte-carlo budget");
        }
        case HyperpriorSpec::Prior::Lomax:
            throw std::invalid_argument(
                "bound_with_hyperprior: lomax mass priors are shipped for the normalized "
                "dirichlet-process bound only");
    }
    throw std::invalid_argument("bound_with_hyperprior: unsupported prior");
}

// ---------------------------------------------------------------------------
// Bound inversion: smallest K with error_bound(K) <= eps.

inline std::uint64_t invert_bound(const BoundQuery& proto, double eps,
                                  const Precision& prec = default_precision()) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("invert_bound: require eps in (0,1)");
    constexpr std::uint64_t k_max = 1000000;
    auto err_at = [&](std::uint64_t k) {
        BoundQuery q = proto;
        q.level = k;
        const BoundResult r = evaluate_bound(q, prec);
        // MC estimates use the upper edge of a 3-sigma interval
        const double b = r.b + (r.mc_std_err ? 3.0 * *r.mc_std_err : 0.0);
        return crm_error_from_b(b);
    };
    if (err_at(0) <= eps) return 0;
    std::uint64_t lo = 0, hi = 1;
    while (err_at(hi) > eps) {
        lo = hi;
        hi *= 2;
        if (hi > k_max)
            throw std::runtime_error("invert_bound: eps unreachable below K = 1e6");
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (err_at(mid) <= eps) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace crm
