#pragma once

// Independent empirical oracles: simulate from the representation, draw
// trait counts from the likelihood, and check the bounds / distributional
// identities by brute force.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "ncrm.hpp"
#include "reps.hpp"
#include "stats.hpp"

namespace crm {

struct CoverageEstimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    std::uint64_t replicates = 0;
};

namespace detail {

// Monotone log-log interpolation table for numeric tail inverses, so the
// coverage loops do not pay a bisection per tail atom.
class TailInverseTable {
  public:
    TailInverseTable(const RateMeasureSpec& s, double u_lo, double u_hi, const Precision& prec)
        : spec_(s), prec_(prec) {
        u_lo_ = std::max(u_lo, 1e-8);
        u_hi_ = std::max(u_hi, u_lo_ * 2.0);
        const int n = 4096;
        log_u_.resize(n);
        log_x_.resize(n);
        const double l0 = std::log(u_lo_), l1 = std::log(u_hi_);
        for (int i = 0; i < n; ++i) {
            log_u_[i] = l0 + (l1 - l0) * i / (n - 1);
            log_x_[i] = std::log(nu_tail_inverse(spec_, std::exp(log_u_[i]), prec_));
        }
    }

    double operator()(double u) const {
        if (u <= u_lo_ || u >= u_hi_) return nu_tail_inverse(spec_, u, prec_);
        const double lu = std::log(u);
        const double step = (log_u_.back() - log_u_.front()) / (log_u_.size() - 1);
        const std::size_t i = std::min(
            log_u_.size() - 2, static_cast<std::size_t>((lu - log_u_.front()) / step));
        const double w = (lu - log_u_[i]) / (log_u_[i + 1] - log_u_[i]);
        return std::exp(log_x_[i] * (1.0 - w) + log_x_[i + 1] * w);
    }

  private:
    RateMeasureSpec spec_;
    Precision prec_;
    double u_lo_ = 0.0, u_hi_ = 0.0;
    std::vector<double> log_u_, log_x_;
};

inline bool tail_inverse_is_closed(const RateMeasureSpec& s) {
    switch (s.family) {
        case Family::GammaP: return s.discount == 0.0;
        case Family::LomaxP: return true;
        case Family::BetaP: return s.scale + s.discount == 1.0;
        case Family::BetaPrimeP: return s.scale == 0.0;
    }
    return false;
}

}  // namespace detail

// Default K_big: smallest level whose bound is below 1e-3 x the bound at K,
// capped at 1e5 atoms.
inline std::uint64_t default_k_big(const BoundQuery& proto, std::uint64_t K,
                                   const Precision& prec = default_precision()) {
    constexpr std::uint64_t cap = 100000;
    BoundQuery q = proto;
    q.level = K;
    const double err = evaluate_bound(q, prec).error_bound;
    const double target = 1e-3 * err;
    if (!(target > 1e-14)) return std::min<std::uint64_t>(cap, K + 256);
    try {
        return std::min<std::uint64_t>(cap, std::max(invert_bound(proto, target, prec), K + 1));
    } catch (const std::exception&) {
        return cap;
    }
}

// P(some atom with outer index > K carries a count >= 1 among N draws),
// estimated by continuing the representation past K up to K_big.  The
// truncated head is independent of the tail, so only the tail is sampled:
// for series kinds Gamma_K ~ Gam(K,1) seeds the remaining jumps, and for
// superposition kinds the outer blocks are independent.
inline CoverageEstimate estimate_crm_coverage(const RateMeasureSpec& s, const LikelihoodSpec& h,
                                              const RepresentationSpec& rep, std::uint64_t n_obs,
                                              std::uint64_t K, std::uint64_t k_big,
                                              std::uint64_t replicates, std::uint64_t seed,
                                              const Precision& prec = default_precision()) {
    if (k_big < K) throw std::invalid_argument("estimate_crm_coverage: require K_big >= K");
    require_compatible(s, h);
    std::uint64_t hits = 0;

    // interpolated tail inverse for families without a closed-form inverse
    std::unique_ptr<detail::TailInverseTable> il_table;
    std::unique_ptr<detail::TailInverseTable> rej_table;
    if (rep.kind == RepKind::IL && !detail::tail_inverse_is_closed(s) && k_big > K) {
        const double u_hi = static_cast<double>(k_big) +
                            12.0 * std::sqrt(static_cast<double>(k_big)) + 64.0;
        il_table = std::make_unique<detail::TailInverseTable>(s, 1e-6, u_hi, prec);
    }
    if (rep.kind == RepKind::Rejection && !detail::tail_inverse_is_closed(*rep.mu) && k_big > K) {
        const double u_hi = static_cast<double>(k_big) +
                            12.0 * std::sqrt(static_cast<double>(k_big)) + 64.0;
        rej_table = std::make_unique<detail::TailInverseTable>(*rep.mu, 1e-6, u_hi, prec);
    }

    for (std::uint64_t r = 0; r < replicates; ++r) {
        Rng rng(derive_seed(seed, r));
        bool hit = false;
        if (n_obs == 0 || k_big == K) {
            // no observations or no tail: the event cannot fire
        } else if (is_series(rep.kind)) {
            double gamma_k = (K == 0) ? 0.0 : rng.gamma_raw(static_cast<double>(K), 1.0);
            for (std::uint64_t k = K + 1; k <= k_big && !hit; ++k) {
                gamma_k += -std::log(rng.u01());
                double w = 0.0;
                switch (rep.kind) {
                    case RepKind::IL:
                        w = il_table ? (*il_table)(gamma_k) : nu_tail_inverse(s, gamma_k, prec);
                        break;
                    case RepKind::Bondesson: {
                        const double v = rep.g->draws() ? rep.g->sample(rng) : 1.0;
                        w = v * std::exp(-gamma_k / rep.c_nu);
                        break;
                    }
                    case RepKind::Thinning: {
                        const double v = rep.g->sample(rng);
                        const double ratio = nu_density(s, v) / rep.g->density(v);
                        w = ratio >= gamma_k ? v : 0.0;
                        break;
                    }
                    case RepKind::Rejection: {
                        const double v = rej_table ? (*rej_table)(gamma_k)
                                                   : nu_tail_inverse(*rep.mu, gamma_k, prec);
                        w = density_ratio(s, *rep.mu, v) >= rng.u01() ? v : 0.0;
                        break;
                    }
                    default:
                        break;
                }
                if (w > 0.0 && h.any_expressed(w, n_obs, rng)) hit = true;
            }
        } else {
            detail::SizeBiasedSampler sb;
            if (rep.kind == RepKind::SizeBiased)
                sb = {&s, &h, size_biased_weights(s, h)};
            for (std::uint64_t k = K + 1; k <= k_big && !hit; ++k) {
                double rate = 0.0;
                switch (rep.kind) {
                    case RepKind::DecoupledBondesson: rate = rep.c_nu / rep.xi; break;
                    case RepKind::SizeBiased: rate = sb.w.eta_k(k); break;
                    case RepKind::PowerLaw: rate = rep.pl_mass; break;
                    default: break;
                }
                const std::uint64_t c = rng.poisson_raw(rate);
                for (std::uint64_t i = 0; i < c && !hit; ++i) {
                    double w = 0.0;
                    if (rep.kind == RepKind::DecoupledBondesson) {
                        const double v = rep.g->draws() ? rep.g->sample(rng) : 1.0;
                        w = v * std::exp(-rng.gamma_raw(static_cast<double>(k), rep.xi));
                    } else if (rep.kind == RepKind::SizeBiased) {
                        Rng& r2 = rng;
                        const std::uint64_t z = sb.sample_z(k, r2);
                        w = sb.sample_weight(k, z, r2);
                    } else {
                        const double d = s.discount;
                        const double v = rep.g->draws() ? rep.g->sample(rng) : 1.0;
                        double logstick = 0.0;
                        for (std::uint64_t j = 1; j + 1 <= k; ++j)
                            logstick += std::log1p(
                                -rng.beta_raw(1.0 - d, rep.pl_alpha + static_cast<double>(j) * d));
                        w = v * rng.beta_raw(1.0 - d, rep.pl_alpha + static_cast<double>(k) * d) *
                            std::exp(logstick);
                    }
                    if (w > 0.0 && h.any_expressed(w, n_obs, rng)) hit = true;
                }
            }
        }
        if (hit) ++hits;
    }
    CoverageEstimate e;
    e.replicates = replicates;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(replicates);
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(replicates));
    return e;
}

// P(some of N categorical draws from the normalized truncation at K_big
// lands beyond the first K outer indices).
inline CoverageEstimate estimate_ncrm_coverage(const RateMeasureSpec& s,
                                               const RepresentationSpec& rep, std::uint64_t n_obs,
                                               std::uint64_t K, std::uint64_t k_big,
                                               std::uint64_t replicates, std::uint64_t seed,
                                               const LikelihoodSpec* lik = nullptr,
                                               const Precision& prec = default_precision()) {
    if (k_big < K) throw std::invalid_argument("estimate_ncrm_coverage: require K_big >= K");
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        bool hit = false;
        if (n_obs > 0 && k_big > K) {
            auto [m, ledger] = simulate(s, rep, k_big, derive_seed(seed, 2 * r), lik, prec);
            (void)ledger;
            if (!m.atoms.empty()) {
                const auto nm = normalize(m);
                const auto idx = gumbel_max_sample(nm, n_obs, derive_seed(seed, 2 * r + 1));
                for (const auto i : idx)
                    if (nm.atoms[i].outer > K) hit = true;
            }
        }
        if (hit) ++hits;
    }
    CoverageEstimate e;
    e.replicates = replicates;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(replicates);
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(replicates));
    return e;
}

// KS p-value of the simulated total masses against Gamma(gamma*lambda, lambda),
// the total-mass law of the d = 0 gamma process.
inline double ks_total_mass(const RateMeasureSpec& s, const RepresentationSpec& rep,
                            std::uint64_t K, std::uint64_t replicates, std::uint64_t seed,
                            const LikelihoodSpec* lik = nullptr,
                            const Precision& prec = default_precision()) {
    if (s.family != Family::GammaP || s.discount != 0.0)
        throw std::invalid_argument("ks_total_mass: requires the gamma process with d = 0");
    if (replicates < 100)
        throw std::invalid_argument("ks_total_mass: require at least 100 replicates");
    std::vector<double> masses(replicates);
    for (std::uint64_t r = 0; r < replicates; ++r) {
        auto [m, ledger] = simulate(s, rep, K, derive_seed(seed, r), lik, prec);
        (void)ledger;
        masses[r] = m.total_mass();
    }
    const double shape = s.mass * s.scale, rate = s.scale;
    return ks_test_pvalue(std::move(masses),
                          [shape, rate](double x) { return gamma_cdf(shape, rate, x); });
}

// Least-squares slope of log E[K_N] against log N for the power-law
// representation; K_N counts atoms expressed at least once by N observations
// under the Poisson likelihood (first-expression times are Exp(theta)).
inline double powerlaw_slope(const RateMeasureSpec& s, const std::vector<std::uint64_t>& n_grid,
                             std::uint64_t replicates, std::uint64_t seed,
                             std::uint64_t k_outer_cap = 2500) {
    if (!(s.discount > 0.0))
        throw std::invalid_argument("powerlaw_slope: requires discount d > 0");
    if (n_grid.size() < 2) throw std::invalid_argument("powerlaw_slope: degenerate N grid");
    RepresentationSpec rep = make_representation(s, RepKind::PowerLaw);
    const double n_max = static_cast<double>(n_grid.back());
    // outer truncation: expected expressed-atom loss below 0.5 absolute
    std::uint64_t k_outer = 200;
    while (k_outer < k_outer_cap &&
           rep.pl_mass * n_max * detail::pl_product(rep.pl_alpha, s.discount, k_outer) > 0.5)
        k_outer += 200;

    std::vector<double> mean_counts(n_grid.size(), 0.0);
    const double d = s.discount;
    for (std::uint64_t r = 0; r < replicates; ++r) {
        Rng rng(derive_seed(seed, r));
        for (std::uint64_t k = 1; k <= k_outer; ++k) {
            const std::uint64_t c = rng.poisson_raw(rep.pl_mass);
            for (std::uint64_t i = 0; i < c; ++i) {
                const double v = rep.g->draws() ? rep.g->sample(rng) : 1.0;
                double logstick = 0.0;
                for (std::uint64_t j = 1; j + 1 <= k; ++j)
                    logstick +=
                        std::log1p(-rng.beta_raw(1.0 - d, rep.pl_alpha + static_cast<double>(j) * d));
                const double th = v *
                                  rng.beta_raw(1.0 - d, rep.pl_alpha + static_cast<double>(k) * d) *
                                  std::exp(logstick);
                const double t_first = -std::log(rng.u01()) / th;
                for (std::size_t g = 0; g < n_grid.size(); ++g)
                    if (t_first <= static_cast<double>(n_grid[g])) mean_counts[g] += 1.0;
            }
        }
    }
    std::vector<double> lx, ly;
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        lx.push_back(std::log(static_cast<double>(n_grid[g])));
        ly.push_back(std::log(mean_counts[g] / static_cast<double>(replicates)));
    }
    return least_squares_slope(lx, ly);
}

}  // namespace crm
