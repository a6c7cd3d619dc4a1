#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crmtrunc/validate.hpp"

using namespace crm;

namespace {
const RateMeasureSpec g110(Family::GammaP, 1.0, 1.0, 0.0);
const LikelihoodSpec poisson{LikelihoodKind::Poisson};
}  // namespace

TEST_CASE("coverage trivial cases", "[validate]") {
    auto rep = make_representation(g110, RepKind::Bondesson);
    auto e = estimate_crm_coverage(g110, poisson, rep, 1, 5, 5, 200, 1);
    CHECK(e.p_hat == 0.0);  // K = K_big: no tail
    e = estimate_crm_coverage(g110, poisson, rep, 0, 2, 50, 200, 1);
    CHECK(e.p_hat == 0.0);  // N = 0
    CHECK_THROWS(estimate_crm_coverage(g110, poisson, rep, 1, 5, 4, 10, 1));
}

TEST_CASE("bondesson coverage below the bound", "[validate][statistical]") {
    auto rep = make_representation(g110, RepKind::Bondesson);
    BoundQuery q;
    q.spec = g110;
    q.lik = poisson;
    q.rep = rep;
    q.n_obs = 1;
    q.level = 5;
    const double bound = evaluate_bound(q).error_bound;  // 1 - e^{-2^-5}
    auto e = estimate_crm_coverage(g110, poisson, rep, 1, 5, default_k_big(q, 5), 10000, 21);
    CHECK(e.p_hat <= bound + 3.0 * e.std_err);
    // the oracle is not vacuous: the event does happen
    CHECK(e.p_hat > 0.0);
}

TEST_CASE("coverage nonincreasing in K", "[validate][statistical]") {
    auto rep = make_representation(g110, RepKind::SizeBiased, &poisson);
    double prev = 1.0;
    for (std::uint64_t k : {1, 4, 16}) {
        auto e = estimate_crm_coverage(g110, poisson, rep, 1, k, k + 4000, 4000, 33);
        CHECK(e.p_hat <= prev + 3.0 * e.std_err);
        prev = e.p_hat;
    }
}

TEST_CASE("ncrm coverage for the dirichlet process", "[validate][statistical]") {
    auto rep = make_representation(g110, RepKind::Bondesson);
    auto e = estimate_ncrm_coverage(g110, rep, 1, 10, 40, 8000, 55);
    CHECK(e.p_hat <= std::pow(0.5, 10.0) + 3.0 * e.std_err);
    auto e0 = estimate_ncrm_coverage(g110, rep, 1, 12, 12, 500, 55);
    CHECK(e0.p_hat == 0.0);
}

TEST_CASE("total mass distribution", "[validate][statistical]") {
    // gamma-process total mass is Gamma(g l, l); a deliberately wrong
    // reference must be rejected decisively
    auto rep = make_representation(g110, RepKind::Bondesson);
    const double p = ks_total_mass(g110, rep, 400, 500, 77);
    CHECK(p > 0.01);
    std::vector<double> masses(500);
    for (std::uint64_t r = 0; r < 500; ++r) {
        auto [m, l] = simulate(g110, rep, 400, derive_seed(77, r));
        (void)l;
        masses[r] = m.total_mass();
    }
    const double p_wrong =
        ks_test_pvalue(std::move(masses), [](double x) { return gamma_cdf(0.5, 1.0, x); });
    CHECK(p_wrong < 1e-6);
    CHECK_THROWS(ks_total_mass(g110, rep, 10, 50, 1));  // too few replicates
    CHECK_THROWS(ks_total_mass(RateMeasureSpec(Family::GammaP, 1.0, 1.0, 0.5), rep, 10, 500, 1));
}

TEST_CASE("power-law slope", "[validate][statistical]") {
    const RateMeasureSpec s(Family::GammaP, 1.0, 1.0, 0.5);
    const std::vector<std::uint64_t> grid = {16, 32, 64, 128, 256};
    const double slope = powerlaw_slope(s, grid, 60, 91, 1200);
    CHECK(slope > 0.35);
    CHECK(slope < 0.65);
    CHECK_THROWS(powerlaw_slope(g110, grid, 10, 1));  // requires d > 0
    // slope increases with d
    const RateMeasureSpec s25(Family::GammaP, 1.0, 1.0, 0.25);
    const RateMeasureSpec s75(Family::GammaP, 1.0, 1.0, 0.75);
    const double lo = powerlaw_slope(s25, grid, 60, 92, 1200);
    const double hi = powerlaw_slope(s75, grid, 60, 93, 1200);
    CHECK(lo < slope);
    CHECK(slope < hi);
}

TEST_CASE("default K_big targets a fraction of the bound", "[validate]") {
    BoundQuery q;
    q.spec = g110;
    q.lik = poisson;
    q.rep = make_representation(g110, RepKind::Bondesson);
    q.n_obs = 1;
    const std::uint64_t kb = default_k_big(q, 5);
    CHECK(kb > 5);
    q.level = kb;
    const double err_kb = evaluate_bound(q).error_bound;
    q.level = 5;
    const double err_k = evaluate_bound(q).error_bound;
    CHECK(err_kb <= 1e-3 * err_k * (1.0 + 1e-9));
}
