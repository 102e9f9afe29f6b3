#include "fblb/asymptotics.hpp"
#include "fblb/bounds.hpp"
#include "fblb/errors.hpp"
#include "fblb/saddlepoint.hpp"
#include "fblb/special_functions.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fblb;

namespace {

const ChannelConfig kFig3 = ChannelConfig::from_db(12, 14, 6.0);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

// Three-term bracket of the third-cumulant correction, evaluated naively in 50 digits.
double bracket_extended(double x) {
    using F = boost::multiprecision::cpp_bin_float_50;
    const F X = x, c = 1 / sqrt(2 * boost::math::constants::pi<F>());
    const F q = erfc(X / sqrt(F(2))) / 2;
    return static_cast<double>(-c + X * X * c - X * X * X * exp(X * X / 2) * q);
}

double part2_bracket(int L, double tau, const CgfBundle& b) {
    return psi_fn(tau, L, b.psi2) + psi_fn(1.0 - tau, L, b.psi2) +
           (k_fn(tau, L, b) - k_fn(1.0 - tau, L, b)) / std::sqrt(L);
}

}  // namespace

TEST_SUITE("saddlepoint") {

TEST_CASE("psi function") {
    CHECK(psi_fn(0.0, 7, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    // u sqrt(L psi2) = 1
    CHECK(psi_fn(0.5, 4, 1.0) == doctest::Approx(0.261578291865123).epsilon(1e-13));
    double prev = 1.0;
    for (double u = 0.0; u < 50.0; u += 0.37) {
        const double v = psi_fn(u, 14, 3.0);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    CHECK(std::isfinite(psi_fn(1e3, 1000, 10.0)));
}

TEST_CASE("third-cumulant correction") {
    CHECK(k_fn(0.4, 14, {0.0, 0.0, 2.0, 0.0}) == 0.0);
    const CgfBundle b{0.0, 0.0, 2.0, -0.7};
    CHECK(k_fn(0.0, 14, b) == doctest::Approx(0.7 / (6.0 * std::pow(2.0, 1.5)) * kInvSqrt2Pi).epsilon(1e-14));
    // unit bundle: K equals the bracket at x = u
    const CgfBundle unit{0.0, 0.0, 1.0, 6.0};
    for (double x : {0.5, 2.0, 7.9, 8.0, 8.1, 10.0, 20.0, 50.0}) {
        CAPTURE(x);
        CHECK(k_fn(x, 1, unit) == doctest::Approx(bracket_extended(x)).epsilon(1e-6));
    }
}

TEST_CASE("k_hat") {
    CHECK(k_hat({0.0, 0.0, 3.0, 0.0}) == 0.0);
    CHECK(k_hat({0.0, 0.0, 1.0, 6.0}) == doctest::Approx(kInvSqrt2Pi).epsilon(1e-15));
    CHECK(k_hat({0.0, 0.0, 2.0, -1.0}) < 0.0);
    CHECK(k_hat({0.0, 0.0, 2.0, 1.0}) > 0.0);
}

TEST_CASE("achievability expansion at the edges of tau") {
    const auto st = stats(kFig3, 1.0);
    const auto p = rcus_sp(kFig3, 1.0, 0.0);
    CHECK(p.rate == doctest::Approx(st.I / kFig3.T).epsilon(1e-14));
    // zero exponent: the prefactor is Psi(0) + Psi(1) + K_hat/sqrt(L), about one half
    const auto b = cgf_bundle(kFig3, {1.0, 0.0});
    CHECK(p.exponent == 0.0);
    CHECK(p.eps == doctest::Approx(0.5 + psi_fn(1.0, kFig3.L, b.psi2) + k_hat(b) / std::sqrt(kFig3.L)).epsilon(1e-14));
    CHECK(p.eps < 1.0);
    CHECK_NOTHROW(rcus_sp(kFig3, 1.0, 0.99));
    CHECK_THROWS_AS(rcus_sp(kFig3, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(rcus_sp(kFig3, 1.0, -0.01), DomainError);
}

TEST_CASE("converse expansion is flagged vacuous where the subtrahend wins") {
    const auto st = stats(kFig3, 1.0);
    const auto at_capacity = mc_sp(kFig3, 1.0, 0.0, st.I / kFig3.T);
    CHECK(at_capacity.vacuous);
    CHECK(at_capacity.eps == 0.0);
    CHECK(mc_sp(kFig3, 1.0, 0.05, 0.0).vacuous);
    CHECK_FALSE(mc_sp(kFig3, 1.0, 0.5, 0.5).vacuous);
    CHECK_THROWS_AS(mc_sp(kFig3, 1.0, 0.5, -1.0), DomainError);
}

TEST_CASE("exponent is nonpositive") {
    for (double s : {0.3, 1.0, 1.8})
        for (double f : {0.0, 0.2, 0.6, 1.0}) {
            const double tau = f * tau_domain(kFig3, s).capped(kDefaultTauMargin);
            const auto terms = expansion_terms(tau, 14, tau, cgf_bundle(kFig3, {s, tau}));
            CHECK(terms.exponent <= 0.0);
            CHECK(terms.psi_u_tau > 0.0);
            CHECK(terms.psi_u_tau <= 0.5);
        }
}

TEST_CASE("optimizers dominate the s = 1 evaluation") {
    const auto st = stats(kFig3, 1.0);
    for (double R : {0.4, 0.5, 0.6}) {
        CAPTURE(R);
        const double tau = solve_saddle(kFig3, 1.0, st.I - kFig3.T * R);
        const auto a = optimize_rcus(kFig3, Target::rate(R));
        CHECK(a.eps <= rcus_sp(kFig3, 1.0, tau).eps * (1 + 1e-12));
        const auto c = optimize_mc(kFig3, Target::rate(R));
        CHECK(c.eps >= mc_sp(kFig3, 1.0, tau, R).eps * (1 - 1e-12));
    }
}

TEST_CASE("fast s shortcut stays close to the full optimization") {
    OptimizerOptions fast;
    fast.fast_s = true;
    const double R = optimize_rcus(kFig3, Target::eps(1e-5)).rate;
    const double full = optimize_rcus(kFig3, Target::rate(R)).eps;
    const double quick = optimize_rcus(kFig3, Target::rate(R), shared_evaluator(), fast).eps;
    CHECK(full == doctest::Approx(1e-5).epsilon(1e-6));
    CHECK(std::abs(quick - full) <= 0.05 * full);
}

TEST_CASE("infeasible targets report the reachable interval") {
    try {
        optimize_rcus(kFig3, Target::rate(5.0));
        FAIL("expected an infeasible target");
    } catch (const InfeasibleTarget& e) {
        // rate units: up to the largest I_s / T on the s grid
        CHECK(e.feasible_lo >= 0.0);
        CHECK(e.feasible_hi < 5.0);
        CHECK(e.feasible_hi >= stats(kFig3, 1.0).I / kFig3.T);
        CHECK(e.feasible_lo <= e.feasible_hi);
    }
    CHECK_THROWS_AS(optimize_rcus(kFig3, Target::eps(1.5)), DomainError);
}

TEST_CASE("converse vacuous everywhere is flagged, not an error") {
    const auto p = optimize_mc(ChannelConfig::from_db(12, 1, 6.0), Target::rate(0.0));
    CHECK(p.vacuous);
    CHECK(p.eps == 0.0);
}

TEST_CASE("converse lies above achievability across error probabilities") {
    double prev = 0.0;
    for (double le = -8.0; le <= -1.0; le += 1.0) {
        const double eps = std::pow(10.0, le);
        CAPTURE(eps);
        const auto a = optimize_rcus(kFig3, Target::eps(eps));
        const auto c = optimize_mc(kFig3, Target::eps(eps));
        CHECK(c.rate >= a.rate);
        CHECK(a.rate > prev);
        prev = a.rate;
    }
}

TEST_CASE("corollary bound dominates the two-correction expansion") {
    // The K difference lies within |K_hat|, so the bound holds with |K_hat|.
    // With the signed K_hat it holds wherever the third cumulant is nonnegative.
    int checked = 0;
    for (double rho_db : {0.0, 6.0})
        for (double tau : {0.05, 0.2, 0.4, 0.6, 0.8}) {
            const auto cfg = ChannelConfig::from_db(12, 14, rho_db);
            const auto b = cgf_bundle(cfg, {1.0 / (1.0 + tau), tau});
            const double base = psi_fn(tau, cfg.L, b.psi2) + psi_fn(1.0 - tau, cfg.L, b.psi2);
            const double p2 = part2_bracket(cfg.L, tau, b);
            CAPTURE(tau);
            CHECK(p2 <= base + std::abs(k_hat(b)) / std::sqrt(cfg.L));
            if (b.psi3 >= 0.0) CHECK(p2 <= base + k_hat(b) / std::sqrt(cfg.L));
            ++checked;
        }
    CHECK(checked == 10);
}

TEST_CASE("prefactor bounds sandwich") {
    for (double tau : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        const auto p = prefactor_bounds(kFig3, tau);
        CAPTURE(tau);
        CHECK(p.eps_lower <= p.eps_upper);
        CHECK(p.a_lower > 0.0);
        CHECK(p.s == doctest::Approx(1.0 / (1.0 + tau)));
        // a_lower scales like L^{-(1+tau)/2}
        const auto q = prefactor_bounds(ChannelConfig::from_db(12, 140, 6.0), tau);
        CHECK(std::log(p.a_lower / q.a_lower) / std::log(10.0) == doctest::Approx((1.0 + tau) / 2.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(prefactor_bounds(kFig3, 0.0), DomainError);
    CHECK_THROWS_AS(prefactor_bounds(kFig3, 1.0), DomainError);
}

TEST_CASE("prefactor upper bound is a conservative version of the expansion") {
    // Same exponent, but the prefactor uses asymptotic tails and |K_hat| at a tied s.
    // It therefore never beats the optimized expansion; measured gap is 2-6 %.
    for (double le = -8.0; le <= -1.0; le += 1.0) {
        const double eps = std::pow(10.0, le);
        const double sp = optimize_rcus(kFig3, Target::eps(eps)).rate;
        const double pe = rate_at_eps(BoundKind::PeeaUpper, kFig3, eps).rate;
        CAPTURE(eps);
        CHECK(pe <= sp);
        CHECK(pe >= 0.93 * sp);
    }
}

TEST_CASE("log-domain evaluation survives very negative exponents") {
    const auto cfg = ChannelConfig::from_db(12, 10000, 6.0);
    const auto p = rcus_sp(cfg, 1.0, 0.3);
    CHECK(p.exponent < -1e4);
    CHECK(std::isfinite(p.log_eps));
    CHECK(p.eps >= 0.0);
    CHECK_FALSE(std::isnan(p.eps));
    const auto q = mc_sp(cfg, 1.0, 0.3, p.rate + 0.2);
    CHECK_FALSE(q.vacuous);
    CHECK(std::isfinite(q.log_eps));
    CHECK(q.log_eps < -1e4);
}

}
