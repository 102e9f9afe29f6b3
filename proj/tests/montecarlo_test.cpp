#include "fblb/errors.hpp"
#include "fblb/montecarlo.hpp"
#include "fblb/saddlepoint.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace fblb;

namespace {

const ChannelConfig kFig3 = ChannelConfig::from_db(12, 14, 6.0);

double part1(const ChannelConfig& c, double tau, const CgfBundle& b) {
    return std::exp(c.L * (b.psi - tau * b.psi1)) * (psi_fn(tau, c.L, b.psi2) + k_fn(tau, c.L, b) / std::sqrt(c.L));
}

double part2(const ChannelConfig& c, double tau, const CgfBundle& b) {
    return std::exp(c.L * (b.psi - tau * b.psi1)) *
           (psi_fn(tau, c.L, b.psi2) + psi_fn(1.0 - tau, c.L, b.psi2) +
            (k_fn(tau, c.L, b) - k_fn(1.0 - tau, c.L, b)) / std::sqrt(c.L));
}

bool same(const McEstimate& a, const McEstimate& b) {
    return a.value == b.value && a.std_err == b.std_err && a.n_samples == b.n_samples;
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("certain and impossible events") {
    const auto one = tail_prob(kFig3, 1.0, -1e10, true, 10000, 3);
    CHECK(one.value == 1.0);
    CHECK(one.std_err == 0.0);
    CHECK(tail_prob(kFig3, 1.0, 1e10, true, 10000, 3).value == 0.0);
    CHECK(tail_prob(kFig3, 1.0, 1e10, false, 10000, 3).n_samples == 10000);
}

TEST_CASE("too few samples is a contract violation") {
    CHECK_THROWS_AS(tail_prob(kFig3, 1.0, 0.0, false, 9999, 1), ContractViolation);
    CHECK_THROWS_AS(mc_bound_mc(kFig3, 1.0, 0.5, {}, 10000, 1), ContractViolation);
    CHECK_THROWS_AS(rcus_mc(kFig3, 1.0, -0.1, 10000, 1), DomainError);
}

TEST_CASE("estimates are reproducible and independent of the worker count") {
    const auto a = rcus_mc(kFig3, 0.9, 0.5, 200000, 42, 1);
    const auto b = rcus_mc(kFig3, 0.9, 0.5, 200000, 42, 4);
    const auto c = rcus_mc(kFig3, 0.9, 0.5, 200000, 42, 1);
    CHECK(same(a, b));
    CHECK(same(a, c));
    CHECK(a.seed == 42);
    CHECK_FALSE(same(a, rcus_mc(kFig3, 0.9, 0.5, 200000, 43, 1)));
    const auto m1 = mc_bound_mc(kFig3, 0.9, 0.6, {1.0, 5.0}, 200000, 42, 1, 0.2);
    const auto m3 = mc_bound_mc(kFig3, 0.9, 0.6, {1.0, 5.0}, 200000, 42, 3, 0.2);
    CHECK(same(m1, m3));
    CHECK(m1.log_xi == m3.log_xi);
}

TEST_CASE("standard error is binomial") {
    const long n = 50000;
    const auto e = rcus_mc(kFig3, 1.0, 0.9, n, 8);
    CHECK(e.value > 0.0);
    CHECK(e.value < 1.0);
    CHECK(e.std_err == doctest::Approx(std::sqrt(e.value * (1 - e.value) / n)).epsilon(1e-6));
    CHECK(e.std_err <= 0.5 / std::sqrt(double(n)));
}

TEST_CASE("achievability estimate is monotone in the rate") {
    double prev = 0.0;
    for (double R = 0.3; R <= 1.2; R += 0.05) {
        const double v = rcus_mc(kFig3, 1.0, R, 20000, 9).value;
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(prev > 0.5);
}

TEST_CASE("rate zero and rates above capacity") {
    const auto small = ChannelConfig::from_db(2, 1, 0.0);
    const double v = rcus_mc(small, 1.0, 0.0, 100000, 4).value;
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    const double above = 1.2 * stats(kFig3, 1.0).I / kFig3.T;
    double prev = 0.0;
    for (int L : {5, 50, 500}) {
        const double p = rcus_mc(ChannelConfig::from_db(12, L, 6.0), 1.0, above, 10000, 4).value;
        CHECK(p >= prev);
        prev = p;
    }
    CHECK(prev > 0.99);
}

TEST_CASE("ladder maximum and the vacuous ladder") {
    const double R = 0.6;
    const std::vector<double> ladder{2.0, 4.0, 6.0, 8.0, 10.0};
    const auto best = mc_bound_mc(kFig3, 1.0, R, ladder, 100000, 6);
    for (double x : ladder) CHECK(best.value >= mc_bound_mc(kFig3, 1.0, R, {x}, 100000, 6).value);
    // log xi = 2 L T R makes the subtrahend exceed one
    const auto v = mc_bound_mc(kFig3, 1.0, R, {2.0 * kFig3.n() * R}, 10000, 6);
    CHECK(v.value == 0.0);
}

TEST_CASE("sample bank matches the direct estimators") {
    const SampleBank bank(kFig3, 0.9, 100000, 21);
    CHECK(bank.size() == 100000);
    for (double R : {0.4, 0.55, 0.7}) {
        CHECK(same(bank.rcus(R), rcus_mc(kFig3, 0.9, R, 100000, 21)));
        CHECK(same(bank.converse(R, {3.0, 7.0}), mc_bound_mc(kFig3, 0.9, R, {3.0, 7.0}, 100000, 21)));
    }
    const double r = bank.rcus_rate_at_eps(1e-2);
    CHECK(bank.rcus(r).value <= 1e-2);
    CHECK(bank.rcus(r + 0.01).value > 1e-2);
}

TEST_CASE("tail probability agrees with the first saddlepoint expansion") {
    const double tau = 0.11;
    const auto b = cgf_bundle(kFig3, {1.0, tau});
    const double sp = part1(kFig3, tau, b);
    const auto mc = tail_prob(kFig3, 1.0, kFig3.L * b.psi1, false, 1000000, 5);
    CHECK(sp > 5e-4);
    CHECK(sp < 2e-3);
    CHECK(std::abs(mc.value - sp) <= 3.0 * mc.std_err);
}

TEST_CASE("achievability estimate against the expansions") {
    const auto p = optimize_rcus(kFig3, Target::eps(1e-3));
    const auto b = cgf_bundle(kFig3, {p.s, p.tau});
    const auto mc = rcus_mc(kFig3, p.s, p.rate, 1000000, 17);
    // the two-correction expansion tracks the exact bound; the corollary form
    // drops below it when the third cumulant is negative
    CHECK(std::abs(mc.value - part2(kFig3, p.tau, b)) <= 3.0 * mc.std_err + 0.03 * mc.value);
    CHECK(std::abs(mc.value - p.eps) <= 0.2 * mc.value);
}

TEST_CASE("converse estimate against its expansion") {
    const auto p = optimize_mc(kFig3, Target::eps(1e-4));
    const auto single = mc_bound_mc(kFig3, p.s, p.rate, {p.log_xi}, 1000000, 19);
    CHECK(std::abs(single.value - p.eps) <= 3.0 * single.std_err);
    const auto ladder = mc_bound_mc(kFig3, p.s, p.rate, {p.log_xi - 1.0, p.log_xi + 1.0}, 1000000, 19, 1, p.tau);
    CHECK(ladder.value >= single.value);
    CHECK(ladder.log_xi == doctest::Approx(p.log_xi).epsilon(1e-9));
}

TEST_CASE("confidence intervals cover the saddlepoint value") {
    const double tau = 0.1;
    const auto b = cgf_bundle(kFig3, {1.0, tau});
    const double sp = part1(kFig3, tau, b);
    int covered = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto e = tail_prob(kFig3, 1.0, kFig3.L * b.psi1, false, 10000, 1000 + seed);
        if (std::abs(e.value - sp) <= 3.0 * e.std_err) ++covered;
    }
    CHECK(covered >= 95);
}

}
