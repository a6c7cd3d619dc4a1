#pragma once

// Parametric rate-measure families and trait-count likelihoods, plus the
// derived quantities every representation and bound consumes: Lebesgue
// densities, tail integrals nu([x, inf)) with their inverses, and the
// size-biased integrals eta_k / eta_kx.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "quadrature.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace crm {

enum class Family { GammaP, BetaP, BetaPrimeP, LomaxP };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::GammaP: return "gamma";
        case Family::BetaP: return "beta";
        case Family::BetaPrimeP: return "betaprime";
        case Family::LomaxP: return "lomax";
    }
    return "?";
}

struct RateMeasureSpec {
    Family family = Family::GammaP;
    double mass = 1.0;      // gamma
    double scale = 1.0;     // lambda for GammaP/LomaxP, alpha for BetaP/BetaPrimeP
    double discount = 0.0;  // d in [0,1)

    RateMeasureSpec() = default;
    RateMeasureSpec(Family f, double gamma_, double scale_, double d_ = 0.0)
        : family(f), mass(gamma_), scale(scale_), discount(d_) {
        validate();
    }

    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("rate measure: require mass gamma > 0");
        if (!(discount >= 0.0 && discount < 1.0))
            throw std::invalid_argument("rate measure: require discount d in [0,1)");
        switch (family) {
            case Family::GammaP:
                if (!(scale > 0.0)) throw std::invalid_argument("gamma process: require lambda > 0");
                break;
            case Family::LomaxP:
                if (!(scale > 0.0)) throw std::invalid_argument("lomax process: require lambda > 0");
                if (discount != 0.0)
                    throw std::invalid_argument("lomax process: discount d must be 0");
                break;
            case Family::BetaP:
            case Family::BetaPrimeP:
                if (!(scale > -discount))
                    throw std::invalid_argument("beta/beta-prime process: require alpha > -d");
                break;
        }
    }

    bool upper_bounded_support() const { return family == Family::BetaP; }
    double support_upper() const { return family == Family::BetaP ? 1.0 : std::numeric_limits<double>::infinity(); }

    // gamma * Gamma(alpha+1) / (Gamma(1-d) Gamma(alpha+d)) for the beta families.
    double beta_like_const() const {
        return mass * std::exp(log_gamma(scale + 1.0) - log_gamma(1.0 - discount) -
                               log_gamma(scale + discount));
    }
};

// Lebesgue density of nu at theta.
inline double nu_density(const RateMeasureSpec& s, double theta) {
    if (!(theta > 0.0)) domain_fail("nu_density: require theta > 0");
    const double g = s.mass, d = s.discount;
    switch (s.family) {
        case Family::GammaP: {
            const double l = s.scale;
            return g * std::pow(l, 1.0 - d) / std::exp(log_gamma(1.0 - d)) *
                   std::pow(theta, -d - 1.0) * std::exp(-l * theta);
        }
        case Family::LomaxP: {
            const double l = s.scale;
            return g * l / (theta * (1.0 + l * theta));
        }
        case Family::BetaP: {
            if (theta > 1.0) return 0.0;
            const double a = s.scale;
            return s.beta_like_const() * std::pow(theta, -1.0 - d) *
                   std::pow(1.0 - theta, a + d - 1.0);
        }
        case Family::BetaPrimeP: {
            const double a = s.scale;
            return s.beta_like_const() * std::pow(theta, -1.0 - d) *
                   std::pow(1.0 + theta, -a);
        }
    }
    return 0.0;
}

// Beta-process density at theta = 1 - u, taking the distance to the upper
// endpoint directly so (1 - theta) never cancels.
inline double nu_density_beta_upper(const RateMeasureSpec& s, double u) {
    if (!(u > 0.0) || u > 1.0) return 0.0;
    const double d = s.discount;
    return s.beta_like_const() * std::pow(1.0 - u, -1.0 - d) *
           std::pow(u, s.scale + d - 1.0);
}

namespace detail {

inline double beta_tail_quadrature(const RateMeasureSpec& s, double x, double rel_tol) {
    // nu([x,1]) for the beta process; integrable singularities at both ends.
    auto g = [&](double u) { return nu_density_beta_upper(s, u); };
    if (x >= 0.5) return integrate_from_zero(g, 1.0 - x, rel_tol);
    auto h = [&](double t) {
        const double th = std::exp(t);
        return nu_density(s, th) * th;
    };
    const double mid = integrate(h, std::log(x), std::log(0.5), rel_tol);
    return mid + integrate_from_zero(g, 0.5, rel_tol);
}

inline double betaprime_tail_quadrature(const RateMeasureSpec& s, double x, double rel_tol) {
    auto h = [&](double t) {
        const double th = std::exp(t);
        return nu_density(s, th) * th;
    };
    double total = 0.0;
    double lo = std::log(x);
    for (int i = 0; i < 80; ++i) {
        const double slab = integrate(h, lo, lo + 8.0, rel_tol);
        total += slab;
        lo += 8.0;
        if (std::abs(slab) <= rel_tol * (total + 1e-300) && i >= 1) break;
    }
    return total;
}

}  // namespace detail

// nu([x, inf)); closed form where available, quadrature otherwise.
inline double nu_tail(const RateMeasureSpec& s, double x,
                      const Precision& prec = default_precision()) {
    if (!(x > 0.0)) domain_fail("nu_tail: require x > 0");
    const double g = s.mass, d = s.discount;
    switch (s.family) {
        case Family::GammaP: {
            const double l = s.scale;
            if (d == 0.0) return g * l * exp_integral_e1(l * x, prec);
            return g * l / std::exp(log_gamma(1.0 - d)) *
                   upper_incomplete_gamma_neg(-d, l * x);
        }
        case Family::LomaxP: {
            const double l = s.scale;
            return g * l * std::log1p(1.0 / (l * x));
        }
        case Family::BetaP: {
            if (x >= 1.0) return 0.0;
            const double a = s.scale;
            if (a + d == 1.0) {  // pure power measure on (0,1]
                const double c = s.beta_like_const();
                return d > 0.0 ? c * (std::pow(x, -d) - 1.0) / d : -c * std::log(x);
            }
            return detail::beta_tail_quadrature(s, x, prec.rel_tol);
        }
        case Family::BetaPrimeP: {
            const double a = s.scale;
            if (a == 0.0) {  // pure power measure (dominating measure use)
                const double c = s.beta_like_const();
                return c * std::pow(x, -d) / d;
            }
            return detail::betaprime_tail_quadrature(s, x, prec.rel_tol);
        }
    }
    return 0.0;
}

// Generalized inverse nu^{<-}(u) = inf{x : nu([x, inf)) <= u}.
inline double nu_tail_inverse(const RateMeasureSpec& s, double u,
                              const Precision& prec = default_precision()) {
    if (!(u > 0.0)) domain_fail("nu_tail_inverse: require u > 0");
    const double g = s.mass, d = s.discount;
    switch (s.family) {
        case Family::GammaP: {
            const double l = s.scale;
            if (d == 0.0) return exp_integral_e1_inverse(u / (g * l), prec) / l;
            break;
        }
        case Family::LomaxP: {
            const double l = s.scale;
            return 1.0 / (l * std::expm1(u / (g * l)));
        }
        case Family::BetaP: {
            const double a = s.scale;
            if (a + d == 1.0) {
                const double c = s.beta_like_const();
                return d > 0.0 ? std::pow(1.0 + d * u / c, -1.0 / d) : std::exp(-u / c);
            }
            break;
        }
        case Family::BetaPrimeP: {
            const double a = s.scale;
            if (a == 0.0) {
                const double c = s.beta_like_const();
                return std::pow(c / (d * u), 1.0 / d);
            }
            break;
        }
    }
    // Monotone bisection on the tail.
    double hi = s.upper_bounded_support() ? 1.0 : 1.0;
    double lo = hi;
    if (!s.upper_bounded_support()) {
        while (nu_tail(s, hi, prec) > u && hi < 1e12) hi *= 2.0;
    }
    while (nu_tail(s, lo, prec) <= u) {
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);  // geometric mean: tails live on log scale
        if (nu_tail(s, mid, prec) > u) lo = mid; else hi = mid;
        if (hi / lo - 1.0 < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

// E[Theta(Psi)] = int theta nu(dtheta); infinite for the Lomax process.
inline double campbell_first_moment(const RateMeasureSpec& s) {
    switch (s.family) {
        case Family::GammaP: return s.mass;
        case Family::BetaP: return s.mass;
        case Family::BetaPrimeP: {
            const double a = s.scale, d = s.discount;
            if (!(a + d > 1.0)) return std::numeric_limits<double>::infinity();
            return s.mass * a / (a + d - 1.0);
        }
        case Family::LomaxP: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Likelihood processes

enum class LikelihoodKind { Poisson, Bernoulli, NegBinom, OddsBernoulli };

inline const char* likelihood_name(LikelihoodKind k) {
    switch (k) {
        case LikelihoodKind::Poisson: return "poisson";
        case LikelihoodKind::Bernoulli: return "bernoulli";
        case LikelihoodKind::NegBinom: return "negbinom";
        case LikelihoodKind::OddsBernoulli: return "oddsbernoulli";
    }
    return "?";
}

struct LikelihoodSpec {
    LikelihoodKind kind = LikelihoodKind::Poisson;
    std::uint64_t failures = 1;  // s for NegBinom

    LikelihoodSpec() = default;
    explicit LikelihoodSpec(LikelihoodKind k, std::uint64_t s = 1) : kind(k), failures(s) {
        if (k == LikelihoodKind::NegBinom && s < 1)
            throw std::invalid_argument("negbinom likelihood: require s >= 1");
    }

    // pi(theta) = h(0 | theta)
    double pi(double theta) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return std::exp(-theta);
            case LikelihoodKind::Bernoulli: return 1.0 - theta;
            case LikelihoodKind::NegBinom:
                return std::pow(1.0 - theta, static_cast<double>(failures));
            case LikelihoodKind::OddsBernoulli: return 1.0 / (1.0 + theta);
        }
        return 1.0;
    }

    // log pi(theta), exact for small theta
    double log_pi(double theta) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return -theta;
            case LikelihoodKind::Bernoulli: return std::log1p(-theta);
            case LikelihoodKind::NegBinom:
                return static_cast<double>(failures) * std::log1p(-theta);
            case LikelihoodKind::OddsBernoulli: return -std::log1p(theta);
        }
        return 0.0;
    }

    // 1 - pi(theta) without cancellation as theta -> 0
    double one_minus_pi(double theta) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return -std::expm1(-theta);
            case LikelihoodKind::Bernoulli: return theta;
            case LikelihoodKind::NegBinom:
                return -std::expm1(static_cast<double>(failures) * std::log1p(-theta));
            case LikelihoodKind::OddsBernoulli: return theta / (1.0 + theta);
        }
        return 0.0;
    }

    // 1 - pi(theta)^n without cancellation
    double one_minus_pi_pow(double theta, double n) const {
        return -std::expm1(n * log_pi(theta));
    }

    // Variants taking omt = 1 - theta exactly, for integrands anchored at the
    // upper endpoint of the beta-process support.
    double log_pi2(double theta, double omt) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return -theta;
            case LikelihoodKind::Bernoulli: return std::log(omt);
            case LikelihoodKind::NegBinom:
                return static_cast<double>(failures) * std::log(omt);
            case LikelihoodKind::OddsBernoulli: return -std::log1p(theta);
        }
        return 0.0;
    }
    double one_minus_pi2(double theta, double omt) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return -std::expm1(-theta);
            case LikelihoodKind::Bernoulli: return theta;
            case LikelihoodKind::NegBinom:
                return -std::expm1(static_cast<double>(failures) * std::log(omt));
            case LikelihoodKind::OddsBernoulli: return theta / (1.0 + theta);
        }
        return 0.0;
    }
    double one_minus_pi_pow2(double theta, double omt, double n) const {
        return -std::expm1(n * log_pi2(theta, omt));
    }

    // One trait count x ~ h(. | theta).  Raw draws, not ledger-counted.
    std::uint64_t sample_count(double theta, Rng& rng) const {
        switch (kind) {
            case LikelihoodKind::Poisson: return rng.poisson_raw(theta);
            case LikelihoodKind::Bernoulli: return rng.u01() < theta ? 1 : 0;
            case LikelihoodKind::NegBinom: {
                // gamma-Poisson mixture representation of the negative binomial
                const double rate = (1.0 - theta) / theta;
                return rng.poisson_raw(rng.gamma_raw(static_cast<double>(failures), rate));
            }
            case LikelihoodKind::OddsBernoulli:
                return rng.u01() < theta / (1.0 + theta) ? 1 : 0;
        }
        return 0;
    }

    // Event {x_{nk} >= 1 for some n <= N}, drawn through the aggregate of the
    // N independent counts (Poisson sums are Poisson, Bernoulli sums are
    // binomial, negative binomial sums add their failure counts).
    bool any_expressed(double theta, std::uint64_t n_obs, Rng& rng) const {
        if (n_obs == 0) return false;
        switch (kind) {
            case LikelihoodKind::Poisson:
                return rng.poisson_raw(theta * static_cast<double>(n_obs)) > 0;
            case LikelihoodKind::Bernoulli: {
                for (std::uint64_t n = 0; n < n_obs; ++n)
                    if (rng.u01() < theta) return true;
                return false;
            }
            case LikelihoodKind::NegBinom: {
                const double rate = (1.0 - theta) / theta;
                const double shape = static_cast<double>(failures * n_obs);
                return rng.poisson_raw(rng.gamma_raw(shape, rate)) > 0;
            }
            case LikelihoodKind::OddsBernoulli: {
                const double p = theta / (1.0 + theta);
                for (std::uint64_t n = 0; n < n_obs; ++n)
                    if (rng.u01() < p) return true;
                return false;
            }
        }
        return false;
    }
};

inline bool compatible(const RateMeasureSpec& s, const LikelihoodSpec& h) {
    switch (s.family) {
        case Family::GammaP:
        case Family::LomaxP: return h.kind == LikelihoodKind::Poisson;
        case Family::BetaP:
            return h.kind == LikelihoodKind::Bernoulli || h.kind == LikelihoodKind::NegBinom;
        case Family::BetaPrimeP: return h.kind == LikelihoodKind::OddsBernoulli;
    }
    return false;
}

inline void require_compatible(const RateMeasureSpec& s, const LikelihoodSpec& h) {
    if (!compatible(s, h))
        throw std::invalid_argument(std::string("incompatible process/likelihood pair: ") +
                                    family_name(s.family) + " with " + likelihood_name(h.kind));
}

// ---------------------------------------------------------------------------
// Size-biased integrals

struct SizeBiasedWeights {
    std::function<double(std::uint64_t)> eta_k;
    std::function<double(std::uint64_t, std::uint64_t)> eta_kx;
};

inline SizeBiasedWeights size_biased_weights(const RateMeasureSpec& s, const LikelihoodSpec& h) {
    require_compatible(s, h);
    const double g = s.mass, d = s.discount;
    switch (s.family) {
        case Family::GammaP: {
            const double l = s.scale;
            auto eta = [g, l, d](std::uint64_t k) {
                const double kk = static_cast<double>(k);
                if (d > 0.0)
                    return g * std::pow(l, 1.0 - d) / d *
                           (std::pow(l + kk, d) - std::pow(l + kk - 1.0, d));
                return g * l * std::log1p(1.0 / (l + kk - 1.0));
            };
            auto etax = [g, l, d](std::uint64_t k, std::uint64_t x) {
                if (x == 0) return 0.0;
                const double kk = static_cast<double>(k), xx = static_cast<double>(x);
                return g * std::exp((1.0 - d) * std::log(l) + log_gamma(xx - d) -
                                    log_gamma(xx + 1.0) - log_gamma(1.0 - d) -
                                    (xx - d) * std::log(l + kk));
            };
            return {eta, etax};
        }
        case Family::BetaP: {
            const double a = s.scale;
            if (h.kind == LikelihoodKind::Bernoulli) {
                auto eta = [g, a, d](std::uint64_t k) {
                    const double kk = static_cast<double>(k);
                    if (d == 0.0) return g * a / (a + kk - 1.0);
                    return g * std::exp(log_gamma(a + 1.0) - log_gamma(a + d) +
                                        log_gamma(a + d + kk - 1.0) - log_gamma(a + kk));
                };
                auto etax = [eta](std::uint64_t k, std::uint64_t x) {
                    return x == 1 ? eta(k) : 0.0;  // z_{ki} = 1 almost surely
                };
                return {eta, etax};
            }
            const double sfail = static_cast<double>(h.failures);
            auto eta = [g, a, d, sfail](std::uint64_t k) {
                const double kk = static_cast<double>(k);
                if (d == 0.0)
                    return g * a * (digamma(a + kk * sfail) - digamma(a + (kk - 1.0) * sfail));
                const double c = g / d * std::exp(log_gamma(a + 1.0) - log_gamma(a + d));
                return c * (std::exp(log_gamma(a + d + kk * sfail) - log_gamma(a + kk * sfail)) -
                            std::exp(log_gamma(a + d + (kk - 1.0) * sfail) -
                                     log_gamma(a + (kk - 1.0) * sfail)));
            };
            const double cbl = s.beta_like_const();
            auto etax = [cbl, a, d, sfail](std::uint64_t k, std::uint64_t x) {
                if (x == 0) return 0.0;
                const double kk = static_cast<double>(k), xx = static_cast<double>(x);
                const double logchoose =
                    log_gamma(xx + sfail) - log_gamma(xx + 1.0) - log_gamma(sfail);
                return cbl * std::exp(logchoose + log_beta(xx - d, kk * sfail + a + d));
            };
            return {eta, etax};
        }
        case Family::BetaPrimeP: {
            const double a = s.scale;
            auto eta = [g, a, d](std::uint64_t k) {  // same gamma-ratio as beta-Bernoulli
                const double kk = static_cast<double>(k);
                if (d == 0.0) return g * a / (a + kk - 1.0);
                return g * std::exp(log_gamma(a + 1.0) - log_gamma(a + d) +
                                    log_gamma(a + d + kk - 1.0) - log_gamma(a + kk));
            };
            auto etax = [eta](std::uint64_t k, std::uint64_t x) {
                return x == 1 ? eta(k) : 0.0;
            };
            return {eta, etax};
        }
        case Family::LomaxP:
            break;
    }
    throw std::invalid_argument("size_biased_weights: unsupported process/likelihood pair");
}

// eta_k by direct quadrature of int pi^{k-1} (1 - pi) nu(dtheta); test oracle
// and generic fallback for transformed likelihoods.
inline double eta_k_quadrature(const RateMeasureSpec& s, const std::function<double(double)>& pi,
                               std::uint64_t k, double rel_tol = 1e-10) {
    auto f = [&](double th) {
        const double p = pi(th);
        const double w = (k > 1) ? std::pow(p, static_cast<double>(k - 1)) : 1.0;
        return w * (1.0 - p) * nu_density(s, th);
    };
    if (s.upper_bounded_support()) {
        auto g = [&](double u) { return f(1.0 - u); };
        return integrate_from_zero(f, 0.5, rel_tol) + integrate_from_zero(g, 0.5, rel_tol);
    }
    return integrate_positive(f, rel_tol);
}

// Same, with the cancellation-free 1 - pi of a shipped likelihood.
inline double eta_k_quadrature(const RateMeasureSpec& s, const LikelihoodSpec& h, std::uint64_t k,
                               double rel_tol = 1e-10) {
    const double km1 = static_cast<double>(k - 1);
    auto f = [&](double th) {
        const double w = (k > 1) ? std::exp(km1 * h.log_pi(th)) : 1.0;
        return w * h.one_minus_pi(th) * nu_density(s, th);
    };
    if (s.upper_bounded_support()) {
        auto g = [&](double u) {
            const double th = 1.0 - u;
            const double w = (k > 1) ? std::exp(km1 * h.log_pi2(th, u)) : 1.0;
            return w * h.one_minus_pi2(th, u) * nu_density_beta_upper(s, u);
        };
        return integrate_from_zero(f, 0.5, rel_tol) + integrate_from_zero(g, 0.5, rel_tol);
    }
    return integrate_positive(f, rel_tol);
}

}  // namespace crm
