#pragma once

// Seeded RNG with a draw ledger.  The ledger counts one entry per random
// variable the representation logically draws (matching the cost models),
// not the raw uniforms a rejection sampler consumes internally.  Samplers
// are hand-rolled on top of std::mt19937_64 so the draw sequence is a
// deterministic function of the seed on every platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace crm {

struct DrawLedger {
    std::uint64_t uniforms = 0;
    std::uint64_t exponentials = 0;
    std::uint64_t gammas = 0;
    std::uint64_t betas = 0;
    std::uint64_t poissons = 0;
    std::uint64_t aux = 0;
    std::uint64_t rejected_atoms = 0;

    // Total random variables sampled (rejected atoms are bookkeeping, not draws).
    std::uint64_t total_draws() const {
        return uniforms + exponentials + gammas + betas + poissons + aux;
    }
    DrawLedger& operator+=(const DrawLedger& o) {
        uniforms += o.uniforms;
        exponentials += o.exponentials;
        gammas += o.gammas;
        betas += o.betas;
        poissons += o.poissons;
        aux += o.aux;
        rejected_atoms += o.rejected_atoms;
        return *this;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent per-replicate seed derived from a root seed (splittable counter scheme).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(splitmix64(root) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed) | 1ULL) {}

    DrawLedger& ledger() { return ledger_; }
    const DrawLedger& ledger() const { return ledger_; }

    // --- raw draws (not counted) ---
    double u01() {  // uniform on (0,1)
        const std::uint64_t r = eng_();
        const double u = (r >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // --- counted draws ---
    double uniform() {
        ++ledger_.uniforms;
        return u01();
    }
    double exponential(double rate = 1.0) {
        ++ledger_.exponentials;
        return -std::log(u01()) / rate;
    }
    double normal_raw() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * m;
        have_cached_ = true;
        return u * m;
    }
    double gamma_raw(double shape, double rate = 1.0) {
        if (!(shape > 0.0) || !(rate > 0.0))
            throw std::invalid_argument("gamma draw: require shape > 0 and rate > 0");
        if (shape < 1.0) {
            // boost: Gam(a) = Gam(a+1) * U^{1/a}
            const double g = gamma_raw(shape + 1.0, 1.0);
            return g * std::pow(u01(), 1.0 / shape) / rate;
        }
        // Marsaglia-Tsang squeeze
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal_raw();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = u01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }
    double gamma(double shape, double rate = 1.0) {
        ++ledger_.gammas;
        return gamma_raw(shape, rate);
    }
    double beta_raw(double a, double b) {
        if (a == 1.0) return 1.0 - std::pow(u01(), 1.0 / b);
        if (b == 1.0) return std::pow(u01(), 1.0 / a);
        const double x = gamma_raw(a);
        const double y = gamma_raw(b);
        return x / (x + y);
    }
    double beta(double a, double b) {
        ++ledger_.betas;
        return beta_raw(a, b);
    }
    // Beta-prime(a, b): X/(1-X) for X ~ Beta(a, b); one logical draw.
    double beta_prime(double a, double b) {
        ++ledger_.betas;
        const double x = beta_raw(a, b);
        return x / (1.0 - x);
    }
    std::uint64_t poisson(double mean) {
        ++ledger_.poissons;
        return poisson_raw(mean);
    }
    double gumbel() {
        ++ledger_.aux;
        return -std::log(-std::log(u01()));
    }
    // One categorical / auxiliary draw backed by a single uniform.
    double aux_uniform() {
        ++ledger_.aux;
        return u01();
    }

    std::uint64_t poisson_raw(double mean) {
        if (!(mean >= 0.0)) throw std::invalid_argument("poisson draw: require mean >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) {
            // Knuth inversion by uniform products
            const double limit = std::exp(-mean);
            std::uint64_t k = 0;
            double prod = u01();
            while (prod > limit) {
                ++k;
                prod *= u01();
            }
            return k;
        }
        // PTRS transformed rejection (Hormann), exact for large means
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        const double lmu = std::log(mean);
        for (;;) {
            const double u = u01() - 0.5;
            const double v = u01();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * lmu - mean - std::lgamma(kf + 1.0))
                return static_cast<std::uint64_t>(kf);
        }
    }

  private:
    std::mt19937_64 eng_;
    DrawLedger ledger_{};
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace crm
