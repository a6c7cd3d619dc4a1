#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crmtrunc/measures.hpp"

using namespace crm;

namespace {
const RateMeasureSpec gamma110(Family::GammaP, 1.0, 1.0, 0.0);
const LikelihoodSpec poisson{LikelihoodKind::Poisson};
}  // namespace

TEST_CASE("spec validation", "[measures]") {
    CHECK_THROWS(RateMeasureSpec(Family::GammaP, -1.0, 1.0));
    CHECK_THROWS(RateMeasureSpec(Family::GammaP, 1.0, 0.0));
    CHECK_THROWS(RateMeasureSpec(Family::GammaP, 1.0, 1.0, 1.0));
    CHECK_THROWS(RateMeasureSpec(Family::BetaP, 1.0, -0.5, 0.25));
    CHECK_THROWS(RateMeasureSpec(Family::LomaxP, 1.0, 1.0, 0.5));
    CHECK_NOTHROW(RateMeasureSpec(Family::BetaP, 1.0, -0.2, 0.5));
}

TEST_CASE("nu density values", "[measures]") {
    CHECK_THAT(nu_density(gamma110, 1.0), Catch::Matchers::WithinRel(std::exp(-1.0), 1e-12));
    const RateMeasureSpec bp(Family::BetaP, 1.0, 2.0, 0.0);
    CHECK(nu_density(bp, 1.5) == 0.0);  // outside [0,1] support
    const RateMeasureSpec lom(Family::LomaxP, 1.0, 1.0);
    CHECK_THAT(nu_density(lom, 1.0), Catch::Matchers::WithinRel(0.5, 1e-12));
    CHECK_THROWS(nu_density(gamma110, 0.0));
}

TEST_CASE("gamma process tail is gamma-scaled E1", "[measures]") {
    for (double x : {0.01, 0.4, 2.0}) {
        CHECK_THAT(nu_tail(gamma110, x),
                   Catch::Matchers::WithinRel(exp_integral_e1(x), 1e-10));
        const double u = nu_tail(gamma110, x);
        CHECK_THAT(nu_tail_inverse(gamma110, u), Catch::Matchers::WithinAbs(x, 1e-8));
    }
}

TEST_CASE("lomax tail inverse closed form", "[measures]") {
    const RateMeasureSpec lom(Family::LomaxP, 2.0, 1.5);
    for (double u : {0.1, 1.0, 7.0}) {
        const double x = nu_tail_inverse(lom, u);
        CHECK_THAT(x, Catch::Matchers::WithinRel(
                          1.0 / (1.5 * std::expm1(u / (2.0 * 1.5))), 1e-12));
        CHECK_THAT(nu_tail(lom, x), Catch::Matchers::WithinRel(u, 1e-10));
    }
}

TEST_CASE("tails decrease to zero and round trip", "[measures]") {
    const RateMeasureSpec specs[] = {
        gamma110,
        RateMeasureSpec(Family::GammaP, 2.0, 3.0, 0.5),
        RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.0),
        RateMeasureSpec(Family::BetaP, 1.5, 1.0, 0.3),
        RateMeasureSpec(Family::BetaPrimeP, 1.0, 2.0, 0.0),
        RateMeasureSpec(Family::LomaxP, 1.0, 1.0),
    };
    for (const auto& s : specs) {
        double prev = std::numeric_limits<double>::infinity();
        const double hi = s.upper_bounded_support() ? 0.99 : 50.0;
        for (double x = 1e-4; x < hi; x *= 4.0) {
            const double t = nu_tail(s, x);
            CHECK(t < prev);
            prev = t;
            const double back = nu_tail_inverse(s, t);
            CHECK_THAT(back, Catch::Matchers::WithinRel(x, 1e-6));
        }
        if (!s.upper_bounded_support()) CHECK(nu_tail(s, 1e7) < 1e-4);
    }
}

TEST_CASE("integrability of min(1,theta)", "[measures]") {
    const RateMeasureSpec specs[] = {
        gamma110,
        RateMeasureSpec(Family::GammaP, 1.0, 2.0, 0.5),
        RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.25),
        RateMeasureSpec(Family::BetaPrimeP, 1.0, 2.0, 0.25),
        RateMeasureSpec(Family::LomaxP, 1.0, 1.0),
    };
    for (const auto& s : specs) {
        auto f = [&](double th) { return std::min(1.0, th) * nu_density(s, th); };
        double v;
        if (s.upper_bounded_support()) {
            v = integrate_from_zero(f, 1.0, 1e-9);
        } else {
            v = integrate_positive(f, 1e-9);
        }
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
}

TEST_CASE("campbell first moment by quadrature", "[measures]") {
    const RateMeasureSpec specs[] = {
        RateMeasureSpec(Family::GammaP, 1.7, 2.3, 0.0),
        RateMeasureSpec(Family::GammaP, 0.8, 1.1, 0.4),
        RateMeasureSpec(Family::BetaP, 2.2, 3.0, 0.0),
        RateMeasureSpec(Family::BetaP, 1.3, 1.5, 0.6),
        RateMeasureSpec(Family::BetaPrimeP, 1.0, 2.5, 0.3),
    };
    for (const auto& s : specs) {
        auto f = [&](double th) { return th * nu_density(s, th); };
        const double q = s.upper_bounded_support() ? integrate_from_zero(f, 1.0, 1e-11)
                                                   : integrate_positive(f, 1e-11);
        CHECK_THAT(q, Catch::Matchers::WithinRel(campbell_first_moment(s), 1e-8));
    }
}

TEST_CASE("size-biased weights match quadrature", "[measures]") {
    struct Case {
        RateMeasureSpec s;
        LikelihoodSpec h;
    };
    const Case cases[] = {
        {gamma110, poisson},
        {RateMeasureSpec(Family::GammaP, 2.0, 1.5, 0.5), poisson},
        {RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.0), LikelihoodSpec(LikelihoodKind::Bernoulli)},
        {RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.4), LikelihoodSpec(LikelihoodKind::Bernoulli)},
        {RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.0), LikelihoodSpec(LikelihoodKind::NegBinom, 3)},
        {RateMeasureSpec(Family::BetaP, 1.0, 2.5, 0.3), LikelihoodSpec(LikelihoodKind::NegBinom, 2)},
        {RateMeasureSpec(Family::BetaPrimeP, 1.0, 2.0, 0.0),
         LikelihoodSpec(LikelihoodKind::OddsBernoulli)},
        {RateMeasureSpec(Family::BetaPrimeP, 1.5, 2.5, 0.4),
         LikelihoodSpec(LikelihoodKind::OddsBernoulli)},
    };
    for (const auto& c : cases) {
        auto w = size_biased_weights(c.s, c.h);
        auto pi = [&](double th) { return c.h.pi(th); };
        (void)pi;
        for (std::uint64_t k : {1, 2, 5, 12, 20}) {
            const double closed = w.eta_k(k);
            const double quad = eta_k_quadrature(c.s, c.h, k, 1e-11);
            CHECK_THAT(closed, Catch::Matchers::WithinRel(quad, 1e-8));
        }
        // eta_k decreasing to 0
        CHECK(w.eta_k(40) < w.eta_k(5));
        CHECK(w.eta_k(4000000) < 0.05 * w.eta_k(40));
    }
}

TEST_CASE("gamma-poisson eta_1 is log 2 and eta_kx sums to eta_k", "[measures]") {
    auto w = size_biased_weights(gamma110, poisson);
    CHECK_THAT(w.eta_k(1), Catch::Matchers::WithinRel(std::log(2.0), 1e-12));
    for (std::uint64_t k : {1, 3, 9}) {
        double sum = 0.0;
        for (std::uint64_t x = 1; x <= 220; ++x) sum += w.eta_kx(k, x);
        CHECK_THAT(sum, Catch::Matchers::WithinRel(w.eta_k(k), 1e-10));
    }
}

TEST_CASE("beta-bernoulli z is degenerate", "[measures]") {
    const RateMeasureSpec bp(Family::BetaP, 1.0, 2.0, 0.3);
    auto w = size_biased_weights(bp, LikelihoodSpec(LikelihoodKind::Bernoulli));
    CHECK(w.eta_kx(4, 2) == 0.0);
    CHECK(w.eta_kx(4, 1) == w.eta_k(4));
}

TEST_CASE("compatibility matrix enforced", "[measures]") {
    CHECK_THROWS(require_compatible(gamma110, LikelihoodSpec(LikelihoodKind::Bernoulli)));
    CHECK_THROWS(size_biased_weights(RateMeasureSpec(Family::BetaP, 1.0, 2.0, 0.0), poisson));
    CHECK_NOTHROW(require_compatible(RateMeasureSpec(Family::LomaxP, 1.0, 1.0), poisson));
}
