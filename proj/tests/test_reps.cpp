#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "crmtrunc/reps.hpp"
#include "crmtrunc/stats.hpp"

using namespace crm;

namespace {
const RateMeasureSpec g110(Family::GammaP, 1.0, 1.0, 0.0);
const LikelihoodSpec poisson{LikelihoodKind::Poisson};

const RepKind all_kinds[] = {RepKind::IL,        RepKind::Bondesson, RepKind::Thinning,
                             RepKind::Rejection, RepKind::DecoupledBondesson,
                             RepKind::SizeBiased, RepKind::PowerLaw};
}  // namespace

TEST_CASE("seed determinism and K=0", "[reps]") {
    for (RepKind k : all_kinds) {
        auto rep = make_representation(g110, k, &poisson);
        auto [m0, l0] = simulate(g110, rep, 0, 7, &poisson);
        CHECK(m0.atoms.empty());
        CHECK(l0.total_draws() == 0);
        auto [m1, l1] = simulate(g110, rep, 25, 42, &poisson);
        auto [m2, l2] = simulate(g110, rep, 25, 42, &poisson);
        REQUIRE(m1.atoms.size() == m2.atoms.size());
        for (std::size_t i = 0; i < m1.atoms.size(); ++i) {
            CHECK(m1.atoms[i].weight == m2.atoms[i].weight);
            CHECK(m1.atoms[i].label == m2.atoms[i].label);
        }
        CHECK(l1.total_draws() == l2.total_draws());
        auto [m3, l3] = simulate(g110, rep, 25, 43, &poisson);
        (void)l3;
        bool same = m3.atoms.size() == m1.atoms.size();
        if (same && !m1.atoms.empty()) same = m3.atoms[0].weight == m1.atoms[0].weight;
        CHECK_FALSE(same);
    }
}

TEST_CASE("inverse-levy weights are nonincreasing", "[reps]") {
    auto rep = make_representation(g110, RepKind::IL);
    auto [m, l] = simulate(g110, rep, 64, 3, &poisson);
    (void)l;
    REQUIRE(m.atoms.size() == 64);
    for (std::size_t i = 1; i < m.atoms.size(); ++i)
        CHECK(m.atoms[i].weight <= m.atoms[i - 1].weight);
}

TEST_CASE("bondesson construction for the gamma process", "[reps]") {
    const RateMeasureSpec s(Family::GammaP, 2.0, 3.0, 0.0);
    auto rep = make_representation(s, RepKind::Bondesson);
    CHECK(rep.c_nu == 6.0);  // c = gamma*lambda
    REQUIRE(rep.g.has_value());
    CHECK(rep.g->kind == AuxDensity::Kind::Exponential);
    CHECK(rep.g->a == 3.0);  // Exp(lambda)
    CHECK_THROWS(make_representation(RateMeasureSpec(Family::GammaP, 1.0, 1.0, 0.5),
                                     RepKind::Bondesson));
}

TEST_CASE("rejection defaults", "[reps]") {
    auto rep = make_representation(g110, RepKind::Rejection);
    REQUIRE(rep.mu.has_value());
    CHECK(rep.mu->family == Family::LomaxP);
    const RateMeasureSpec sp(Family::GammaP, 1.0, 2.0, 0.4);
    auto repd = make_representation(sp, RepKind::Rejection);
    CHECK(repd.mu->family == Family::BetaPrimeP);
    CHECK(repd.mu->scale == 0.0);
    // dnu/dmu = e^{-lambda x} <= 1 on a grid
    for (double x : {0.01, 0.5, 3.0})
        CHECK_THAT(density_ratio(sp, *repd.mu, x),
                   Catch::Matchers::WithinRel(std::exp(-2.0 * x), 1e-9));
}

TEST_CASE("mean total mass matches the Campbell moment", "[reps][statistical]") {
    const RateMeasureSpec s(Family::GammaP, 2.0, 3.0, 0.0);
    for (RepKind k : all_kinds) {
        // thinning and size-biased tails shed mean mass like 1/K; the others
        // are geometric
        const std::uint64_t K =
            (k == RepKind::Thinning || k == RepKind::SizeBiased) ? 8000 : 120;
        auto rep = make_representation(s, k, &poisson);
        RunningMoments mom;
        for (std::uint64_t r = 0; r < 2000; ++r) {
            auto [m, l] = simulate(s, rep, K, derive_seed(11 + 1000 * (int)k, r), &poisson);
            (void)l;
            mom.add(m.total_mass());
        }
        INFO("rep " << rep_name(k));
        CHECK_THAT(mom.mean, Catch::Matchers::WithinAbs(2.0, 3.0 * mom.std_err() + 2e-3));
    }
}

TEST_CASE("db mean atom count per outer index", "[reps][statistical]") {
    const RateMeasureSpec s(Family::GammaP, 1.5, 2.0, 0.0);
    auto rep = make_representation(s, RepKind::DecoupledBondesson, nullptr, 2.0);
    const double expect = rep.c_nu / rep.xi;  // 1.5
    RunningMoments mom;
    for (std::uint64_t r = 0; r < 4000; ++r) {
        auto [m, l] = simulate(s, rep, 1, derive_seed(5, r));
        (void)l;
        mom.add(static_cast<double>(m.atoms.size()));
    }
    CHECK_THAT(mom.mean, Catch::Matchers::WithinAbs(expect, 3.0 * mom.std_err()));
}

TEST_CASE("size-biased block counts are Poisson(eta_k)", "[reps][statistical]") {
    auto w = size_biased_weights(g110, poisson);
    const double eta1 = w.eta_k(1);
    auto rep = make_representation(g110, RepKind::SizeBiased, &poisson);
    std::map<std::uint64_t, int> counts;
    const int runs = 2000;
    for (int r = 0; r < runs; ++r) {
        auto [m, l] = simulate(g110, rep, 1, derive_seed(17, r), &poisson);
        (void)l;
        counts[m.atoms.size()] += 1;
    }
    // chi-square against Poisson(log 2) with cells {0,1,2,3+}
    std::vector<double> obs(4, 0.0), expd(4, 0.0);
    for (auto& [k, c] : counts) obs[std::min<std::uint64_t>(k, 3)] += c;
    const double p0 = std::exp(-eta1);
    expd[0] = runs * p0;
    expd[1] = runs * p0 * eta1;
    expd[2] = runs * p0 * eta1 * eta1 / 2.0;
    expd[3] = runs - expd[0] - expd[1] - expd[2];
    CHECK(chi_square_gof_pvalue(obs, expd) > 0.005);
}

TEST_CASE("kernels", "[reps][statistical]") {
    const double alpha = 2.0;
    const RateMeasureSpec s(Family::GammaP, 1.0, alpha, 0.0);
    auto rep = make_representation(s, RepKind::Bondesson);
    auto [m, l] = simulate(s, rep, 200, 9);
    (void)l;
    auto same = apply_kernel(m, KernelSpec::identity(), 1);
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        CHECK(same.atoms[i].weight == m.atoms[i].weight);
        CHECK(same.atoms[i].label == m.atoms[i].label);
    }
    // GammaP(g, a, 0) -> BP(g, a, 0): weights in (0,1), labels kept, mean
    // mass matches the beta-process Campbell moment gamma
    RunningMoments mom;
    for (std::uint64_t r = 0; r < 2000; ++r) {
        auto [mm, ll] = simulate(s, rep, 150, derive_seed(23, r));
        (void)ll;
        auto bp = apply_kernel(mm, KernelSpec::gamma_to_beta(alpha), derive_seed(29, r));
        for (std::size_t i = 0; i < bp.atoms.size(); ++i) {
            CHECK(bp.atoms[i].weight > 0.0);
            CHECK(bp.atoms[i].weight < 1.0);
            CHECK(bp.atoms[i].label == mm.atoms[i].label);
        }
        mom.add(bp.total_mass());
    }
    CHECK_THAT(mom.mean, Catch::Matchers::WithinAbs(1.0, 3.0 * mom.std_err() + 1e-3));
}

TEST_CASE("expected rejections closed forms", "[reps]") {
    // gamma process, d = 0, lomax dominating measure: gamma*lambda*c_gamma
    const RateMeasureSpec s(Family::GammaP, 1.3, 2.0, 0.0);
    auto rep = make_representation(s, RepKind::Rejection);
    CHECK_THAT(expected_rejections(s, *rep.mu),
               Catch::Matchers::WithinRel(1.3 * 2.0 * euler_gamma, 1e-12));
    // gamma process, d > 0, power dominating measure, at lambda = 1: gamma/d
    const RateMeasureSpec sd(Family::GammaP, 1.5, 1.0, 0.5);
    auto repd = make_representation(sd, RepKind::Rejection);
    CHECK_THAT(expected_rejections(sd, *repd.mu), Catch::Matchers::WithinRel(1.5 / 0.5, 1e-12));
    // beta prime, d = 0: gamma*alpha*(c_gamma + psi(alpha)); zero at alpha = 1
    const RateMeasureSpec pp1(Family::BetaPrimeP, 2.0, 1.0, 0.0);
    auto repp1 = make_representation(pp1, RepKind::Rejection);
    CHECK_THAT(expected_rejections(pp1, *repp1.mu), Catch::Matchers::WithinAbs(0.0, 1e-12));
    const RateMeasureSpec pp(Family::BetaPrimeP, 1.0, 2.0, 0.0);
    auto repp = make_representation(pp, RepKind::Rejection);
    CHECK_THAT(expected_rejections(pp, *repp.mu),
               Catch::Matchers::WithinRel(2.0 * (euler_gamma + digamma(2.0)), 1e-12));
    // quadrature route (beta process has no closed form here)
    const RateMeasureSpec bp(Family::BetaP, 1.0, 2.0, 0.0);
    auto repb = make_representation(bp, RepKind::Rejection);
    const double q = expected_rejections(bp, *repb.mu);
    CHECK(q > 0.0);
    CHECK(std::isfinite(q));
}

TEST_CASE("expected cost formulas", "[reps]") {
    CHECK(expected_cost(g110, make_representation(g110, RepKind::IL), 100) == 200.0);
    auto pl = make_representation(g110, RepKind::PowerLaw);
    CHECK_THAT(expected_cost(g110, pl, 10), Catch::Matchers::WithinRel(85.0, 1e-12));
    auto sb = make_representation(g110, RepKind::SizeBiased, &poisson);
    const double r1 = expected_cost(g110, sb, 2000, &poisson) / 2000.0;
    const double r2 = expected_cost(g110, sb, 40000, &poisson) / 40000.0;
    CHECK(std::abs(r2 - 1.0) < std::abs(r1 - 1.0));  // E[R]/K -> 1
    CHECK(r2 < 1.01);
    auto db = make_representation(g110, RepKind::DecoupledBondesson, nullptr, 0.5);
    CHECK_THAT(expected_cost(g110, db, 7),
               Catch::Matchers::WithinRel((3.0 * 1.0 / 0.5 + 1.0) * 7, 1e-12));
}

TEST_CASE("observed ledger totals match expected cost", "[reps][statistical]") {
    const std::uint64_t K = 30;
    for (RepKind k : all_kinds) {
        auto rep = make_representation(g110, k, &poisson);
        RunningMoments mom;
        RunningMoments rej;
        for (std::uint64_t r = 0; r < 3000; ++r) {
            auto [m, l] = simulate(g110, rep, K, derive_seed(31 + 1000 * (int)k, r), &poisson);
            (void)m;
            mom.add(static_cast<double>(l.total_draws()));
            rej.add(static_cast<double>(l.rejected_atoms));
        }
        const double expect = expected_cost(g110, rep, K, &poisson);
        INFO("rep " << rep_name(k));
        CHECK_THAT(mom.mean, Catch::Matchers::WithinAbs(expect, 3.0 * mom.std_err() + 1e-9));
        if (k == RepKind::Rejection) {
            const double er = expected_rejections(g110, *rep.mu);
            CHECK_THAT(rej.mean, Catch::Matchers::WithinAbs(er, 3.0 * rej.std_err()));
        }
    }
}

TEST_CASE("incompatible pairs are rejected", "[reps]") {
    CHECK_THROWS(make_representation(RateMeasureSpec(Family::LomaxP, 1.0, 1.0),
                                     RepKind::Bondesson));
    CHECK_THROWS(make_representation(RateMeasureSpec(Family::BetaP, 1.0, 0.5, 0.0),
                                     RepKind::DecoupledBondesson));
    CHECK_THROWS(make_representation(RateMeasureSpec(Family::BetaP, 1.0, 0.3, 0.2),
                                     RepKind::Rejection));  // alpha < 1-d
    CHECK_THROWS(make_representation(g110, RepKind::SizeBiased));  // needs a likelihood
}

TEST_CASE("paisley split for the beta process with small alpha", "[reps][statistical]") {
    const RateMeasureSpec bp(Family::BetaP, 1.0, 0.5, 0.0);
    auto rep = make_representation(bp, RepKind::Bondesson);
    CHECK(rep.paisley);
    RunningMoments mom;
    for (std::uint64_t r = 0; r < 3000; ++r) {
        auto [m, l] = simulate(bp, rep, 150, derive_seed(41, r));
        (void)l;
        mom.add(m.total_mass());
    }
    // Campbell moment of BP(1, 0.5, 0) is gamma = 1
    CHECK_THAT(mom.mean, Catch::Matchers::WithinAbs(1.0, 3.0 * mom.std_err() + 2e-3));
}
