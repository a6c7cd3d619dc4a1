#pragma once

// Normalization of truncated CRMs, finite Gumbel-max categorical sampling,
// and the closed-form normalized truncation bounds (Dirichlet process via
// the Bondesson and decoupled Bondesson representations, normalized gamma
// process via the size-biased representation), with the Lomax-mass
// hyperprior variant.
//
// Normalized bounds control (1/2)||p_{N,inf} - p_{N,K}||_1 <= 1 - (1-B_K)^N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "reps.hpp"

namespace crm {

struct NormalizedMeasure {
    struct Atom {
        std::uint64_t outer = 0;
        double prob = 0.0;
        double label = 0.0;
    };
    std::vector<Atom> atoms;
    std::uint64_t source_level = 0;
};

inline NormalizedMeasure normalize(const AtomicMeasure& m) {
    const double total = m.total_mass();
    if (!(total > 0.0))
        throw std::invalid_argument("normalize: measure has no positive atoms");
    NormalizedMeasure out;
    out.source_level = m.truncation_level;
    out.atoms.reserve(m.atoms.size());
    for (const auto& a : m.atoms) out.atoms.push_back({a.outer, a.weight / total, a.label});
    return out;
}

// n categorical draws: argmax_k (log p_k + Gumbel(0,1)).  The argmax is
// invariant to the normalizing constant, so any positive weights work.
inline std::vector<std::size_t> gumbel_max_sample(const NormalizedMeasure& m, std::uint64_t n,
                                                  std::uint64_t seed) {
    if (m.atoms.empty()) throw std::invalid_argument("gumbel_max_sample: empty measure");
    Rng rng(seed);
    std::vector<double> logp(m.atoms.size());
    for (std::size_t k = 0; k < m.atoms.size(); ++k)
        logp[k] = m.atoms[k].prob > 0.0 ? std::log(m.atoms[k].prob)
                                        : -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> out(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < logp.size(); ++k) {
            const double v = logp[k] + rng.gumbel();
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        out[i] = arg;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form normalized bounds

enum class NcrmFamily { DP_BRep, DP_DBRep, NGammaP_SBRep };

struct NcrmBoundResult {
    double b_k = 0.0;          // clamped to [0,1]
    double error_bound = 0.0;  // 1 - (1 - B_K)^N, clamped
    std::optional<double> free_param_a;
    std::optional<std::string> asymptotic_rate;
};

inline double ncrm_error_from_b(double b_k, std::uint64_t n_obs) {
    const double b = std::clamp(b_k, 0.0, 1.0);
    return std::clamp(1.0 - std::pow(1.0 - b, static_cast<double>(n_obs)), 0.0, 1.0);
}

namespace detail {

// golden-section minimum of f on [lo, hi] to absolute width tol
template <class F>
inline double golden_section_min(const F& f, double lo, double hi, double tol) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

struct NcrmParams {
    double mass = 1.0;    // gamma (DP concentration / NGammaP mass)
    double scale = 1.0;   // lambda for NGammaP
    double discount = 0.0;
    double xi = 1.0;      // DP_DBRep only
};

inline NcrmBoundResult ncrm_bound_closed_form(NcrmFamily family, const NcrmParams& p,
                                              std::uint64_t n_obs, std::uint64_t K) {
    NcrmBoundResult r;
    const double g = p.mass;
    const double kk = static_cast<double>(K);
    if (!(g > 0.0)) throw std::invalid_argument("ncrm bound: require gamma > 0");
    switch (family) {
        case NcrmFamily::DP_BRep: {
            r.b_k = std::pow(g / (1.0 + g), kk);
            r.asymptotic_rate = "N*(g/(1+g))^K";
            break;
        }
        case NcrmFamily::DP_DBRep: {
            const double xi = p.xi;
            if (!(xi > 0.0)) throw std::invalid_argument("ncrm bound: require xi > 0");
            // B_K(a) = g/(a(g-a)) (xi/(xi+a))^K over a in (0,1] intersect (0,g)
            auto logb = [&](double a) {
                return std::log(g) - std::log(a) - std::log(g - a) +
                       kk * (std::log(xi) - std::log(xi + a));
            };
            const double hi = std::min(1.0, g - 1e-12);
            const double a_star = detail::golden_section_min(logb, 1e-12, hi, 1e-10);
            r.b_k = std::min(1.0, std::exp(logb(a_star)));
            r.free_param_a = a_star;
            r.asymptotic_rate = "N*g/(a*(g-a))*(xi/(xi+a))^K";
            break;
        }
        case NcrmFamily::NGammaP_SBRep: {
            const double l = p.scale, d = p.discount;
            if (!(l > 0.0)) throw std::invalid_argument("ncrm bound: require lambda > 0");
            if (d > 0.0) {
                const double sigma = g * l / d;
                const double c = std::exp(sigma) * std::pow(sigma, 1.0 - 1.0 / d) *
                                 std::pow(l, 1.0 - d) * upper_incomplete_gamma(1.0 / d, sigma);
                r.b_k = std::min(1.0, c * std::pow(kk + l, d - 1.0));
                r.asymptotic_rate = "N*C(g,l,d)*K^(d-1)";
            } else {
                const double gl = g * l;
                const double pre = g * std::pow(l, 1.0 + gl);
                if (gl == 1.0) {
                    r.b_k = (K == 0) ? 1.0
                                     : std::min(1.0, l / kk * std::log((kk + l) / l));
                    r.asymptotic_rate = "N*l*log(K)/K";
                } else {
                    const double v = std::pow(kk + l, -gl) / (gl * (1.0 - gl)) -
                                     std::pow(l, 1.0 - gl) / ((kk + l) * (1.0 - gl));
                    r.b_k = std::min(1.0, pre * v);
                    r.asymptotic_rate = "N*C(g,l)*K^(-min(1,g*l))";
                }
            }
            break;
        }
    }
    r.b_k = std::clamp(r.b_k, 0.0, 1.0);
    r.error_bound = ncrm_error_from_b(r.b_k, n_obs);
    return r;
}

// E[B_K] for the Dirichlet process (Bondesson route) with gamma ~ Lomax(a, 1):
// E[(gamma/(1+gamma))^K] = Gamma(a+1) Gamma(K+1) / Gamma(a+K+1)
//                        = prod_{j=1}^{K} j/(a+j).
inline NcrmBoundResult ncrm_bound_with_hyperprior(NcrmFamily family, const HyperpriorSpec& hp,
                                                  std::uint64_t n_obs, std::uint64_t K) {
    if (family != NcrmFamily::DP_BRep || hp.prior != HyperpriorSpec::Prior::Lomax)
        throw std::invalid_argument(
            "ncrm_bound_with_hyperprior: shipped for the dirichlet process (bondesson "
            "route) with a lomax mass prior");
    NcrmBoundResult r;
    const double a = hp.a;
    if (K <= 100000) {
        double prod = 1.0;
        for (std::uint64_t j = 1; j <= K; ++j)
            prod *= static_cast<double>(j) / (a + static_cast<double>(j));
        r.b_k = prod;
    } else {
        r.b_k = std::exp(log_gamma(a + 1.0) + log_gamma(static_cast<double>(K) + 1.0) -
                         log_gamma(a + static_cast<double>(K) + 1.0));
    }
    r.b_k = std::clamp(r.b_k, 0.0, 1.0);
    r.error_bound = ncrm_error_from_b(r.b_k, n_obs);
    r.asymptotic_rate = "N*Gamma(a+1)*(K+1)^-a";
    return r;
}

}  // namespace crm
