#include "fblb/asymptotics.hpp"
#include "fblb/bounds.hpp"
#include "fblb/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace fblb;

namespace {

const ChannelConfig kFig3 = ChannelConfig::from_db(12, 14, 6.0);
// The high-SNR approximation is meaningless at 6 dB and is tested at 40 dB below.
const std::vector<BoundKind> kDeterministic{BoundKind::RcusSp, BoundKind::McSp,      BoundKind::Na,
                                            BoundKind::Eea,    BoundKind::EeaPref,   BoundKind::PeeaUpper,
                                            BoundKind::PeeaLower};

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("kind names round trip") {
    for (BoundKind k : all_kinds()) CHECK(parse_kind(kind_name(k)) == k);
    CHECK_FALSE(parse_kind("rcus").has_value());
    CHECK(all_kinds().size() == 10);
}

TEST_CASE("rate and error probability inversions agree") {
    for (BoundKind k : kDeterministic) {
        for (double eps : {1e-6, 1e-3, 1e-1}) {
            CAPTURE(kind_name(k));
            CAPTURE(eps);
            const auto fwd = rate_at_eps(k, kFig3, eps);
            const auto back = eps_at_rate(k, kFig3, fwd.rate);
            CHECK(back.eps == doctest::Approx(eps).epsilon(0.02));
            CHECK(fwd.kind == k);
        }
    }
}

TEST_CASE("achievability rate lies below capacity") {
    const auto c = ChannelConfig::from_db(12, 14, 6.0);
    const double cap = capacity_dispersion(c).C / c.T;
    for (BoundKind k : kDeterministic) {
        const double r = rate_at_eps(k, c, 1e-5).rate;
        CAPTURE(kind_name(k));
        CHECK(r > 0.0);
        CHECK(r < cap);
    }
}

TEST_CASE("rates increase with the error probability") {
    for (BoundKind k : kDeterministic) {
        double prev = -1.0;
        for (double le = -8.0; le <= -1.0; le += 0.5) {
            const double r = rate_at_eps(k, kFig3, std::pow(10.0, le)).rate;
            CAPTURE(kind_name(k));
            CAPTURE(le);
            CHECK(r > prev);
            prev = r;
        }
    }
}

TEST_CASE("normal approximations below zero are flagged") {
    const auto low = rate_at_eps(BoundKind::Hsna, kFig3, 1e-5);
    CHECK(low.vacuous);
    CHECK(low.rate == 0.0);
    const auto na = rate_at_eps(BoundKind::Na, ChannelConfig::from_db(12, 14, 0.0), 1e-5);
    CHECK(na.vacuous);
    CHECK(na.rate == 0.0);
    const auto c = ChannelConfig::from_db(12, 25, 40.0);
    const auto hs = rate_at_eps(BoundKind::Hsna, c, 1e-3);
    CHECK_FALSE(hs.vacuous);
    CHECK(eps_at_rate(BoundKind::Hsna, c, hs.rate).eps == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK(hs.rate == doctest::Approx(rate_at_eps(BoundKind::Na, c, 1e-3).rate).epsilon(0.01));
}

TEST_CASE("witness fields follow the kind") {
    const auto a = rate_at_eps(BoundKind::RcusSp, kFig3, 1e-3);
    CHECK(std::isfinite(a.s));
    CHECK(std::isfinite(a.tau));
    CHECK(std::isnan(a.log_xi));
    const auto c = rate_at_eps(BoundKind::McSp, kFig3, 1e-3);
    CHECK(std::isfinite(c.log_xi));
    const auto n = rate_at_eps(BoundKind::Na, kFig3, 1e-3);
    CHECK(std::isnan(n.tau));
}

TEST_CASE("domain and solvability errors") {
    CHECK_THROWS_AS(rate_at_eps(BoundKind::Hsna, ChannelConfig::from_db(1, 14, 6.0), 1e-3), DomainError);
    CHECK_THROWS_AS(rate_at_eps(BoundKind::PeeaUpper, kFig3, 1e-250), NoSolution);
    CHECK_THROWS_AS(rate_at_eps(BoundKind::RcusSp, kFig3, 0.0), DomainError);
}

TEST_CASE("Monte-Carlo kinds are reproducible and bracket the saddlepoint") {
    EvalContext ctx;
    ctx.mc.samples = 200000;
    ctx.mc.seed = 5;
    const auto a = rate_at_eps(BoundKind::RcusMc, kFig3, 1e-2, ctx);
    const auto b = rate_at_eps(BoundKind::RcusMc, kFig3, 1e-2, ctx);
    CHECK(a.rate == b.rate);
    CHECK(a.n_samples == 200000);
    const double sp = rate_at_eps(BoundKind::RcusSp, kFig3, 1e-2).rate;
    CHECK(std::abs(a.rate - sp) < 0.02 * sp);
    const auto m = rate_at_eps(BoundKind::McMc, kFig3, 1e-2, ctx);
    CHECK(m.rate >= a.rate);
    const auto e = eps_at_rate(BoundKind::RcusMc, kFig3, a.rate, ctx);
    // s is re-optimized for the rate target, so only statistical agreement holds
    CHECK(e.std_err > 0.0);
    CHECK(e.eps <= 1e-2 + 3.0 * e.std_err);
}

}
