#include "fblb/cgf.hpp"
#include "fblb/channel.hpp"
#include "fblb/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace fblb;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0;
    long n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        var += d * (x - mean);
    }
    [[nodiscard]] double variance() const { return var / (n - 1); }
    [[nodiscard]] double std_err() const { return std::sqrt(variance() / n); }
};

std::vector<double> generator_draws(const ChannelConfig& c, double s, int n, std::uint64_t seed) {
    Engine g = make_stream(seed, 0);
    std::vector<double> v(n);
    for (auto& x : v) x = info_density(c, s, sample_gamma_pair(g, c.T));
    return v;
}

// m_sphere = 0 selects the quadrature input average instead of the Monte-Carlo one.
std::vector<double> direct_draws(const ChannelConfig& c, double s, int n, int m_sphere, std::uint64_t seed) {
    Engine g = make_stream(seed, 1);
    std::vector<double> v(n);
    for (auto& x : v) {
        const BlockSample b = sample_ustm_block(g, c);
        x = m_sphere > 0 ? info_density_direct(c, s, b, m_sphere, g) : oracle::info_density_block(c, s, b);
    }
    return v;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("configuration") {
    CHECK(ChannelConfig{12, 14, 1.0}.n() == 168);
    CHECK(db_to_linear(6.0) == std::pow(10.0, 0.6));
    CHECK(ChannelConfig::from_db(12, 14, 6.0).rho == std::pow(10.0, 0.6));
    CHECK_THROWS_AS((ChannelConfig{0, 1, 1.0}.validate()), DomainError);
    CHECK_THROWS_AS((ChannelConfig{2, 0, 1.0}.validate()), DomainError);
    CHECK_THROWS_AS((ChannelConfig{2, 1, -1.0}.validate()), DomainError);
}

TEST_CASE("information density matches the term-by-term form") {
    const ChannelConfig c{2, 1, 1.0};
    CHECK(info_density(c, 1.0, {1.0, 1.0}) ==
          doctest::Approx(oracle::info_density_terms(c, 1.0, 1.0, 1.0)).epsilon(1e-13));
    // value written out by hand: log 2 - 2/3 + log(4/3) - log P(1, 8/3)
    CHECK(info_density(c, 1.0, {1.0, 1.0}) ==
          doctest::Approx(std::log(2.0) - 2.0 / 3.0 + std::log(4.0 / 3.0) - std::log(-std::expm1(-8.0 / 3.0))).epsilon(1e-13));

    Engine g = make_stream(5, 0);
    for (int T : {2, 3, 12, 40})
        for (double rho : {0.1, 1.0, 4.0, 100.0})
            for (double s : {0.3, 1.0, 1.7})
                for (int k = 0; k < 20; ++k) {
                    const GammaPair p = sample_gamma_pair(g, T);
                    const ChannelConfig cfg{T, 1, rho};
                    const double ref = oracle::info_density_terms(cfg, s, p.u1, p.u2);
                    CHECK(info_density(cfg, s, p) == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
                }
}

TEST_CASE("T = 1 carries no information") {
    Engine g = make_stream(1, 0);
    for (int k = 0; k < 100; ++k) {
        const GammaPair p = sample_gamma_pair(g, 1);
        CHECK(p.u2 == 0.0);
        CHECK(info_density({1, 1, 3.0}, 0.7, p) == 0.0);
    }
    const InfoDensityStats st = stats({1, 5, 3.0}, 1.0);
    CHECK(st.I == 0.0);
    CHECK(st.V == 0.0);
}

TEST_CASE("gamma pair sampler moments") {
    Engine g = make_stream(11, 0);
    constexpr int n = 1000000;
    Moments u1, u2;
    for (int k = 0; k < n; ++k) {
        const GammaPair p = sample_gamma_pair(g, 12);
        u1.add(p.u1);
        u2.add(p.u2);
    }
    CHECK(std::abs(u2.mean - 11.0) < 3.0 * std::sqrt(11.0 / n));
    CHECK(std::abs(u1.variance() - 1.0) < 3.0 * std::sqrt(8.0 / n));
    CHECK(std::abs(u1.mean - 1.0) < 3.0 / std::sqrt(n));
}

TEST_CASE("empirical mean of i_s agrees with the quadrature mean") {
    const ChannelConfig c{12, 1, 4.0};
    Engine g = make_stream(21, 0);
    Moments m;
    for (int k = 0; k < 1000000; ++k) m.add(info_density(c, 1.0, sample_gamma_pair(g, 12)));
    const InfoDensityStats st = stats(c, 1.0);
    CHECK(std::abs(m.mean - st.I) < 3.0 * m.std_err());
    CHECK(std::abs(m.variance() / st.V - 1.0) < 0.01);
}

TEST_CASE("conditional density") {
    const ChannelConfig c{3, 1, 2.0};
    Engine g = make_stream(3, 0);
    const BlockSample b = sample_ustm_block(g, c);
    std::vector<cplx> zero(3, cplx{});
    CHECK(log_cond_pdf(c, b.x, zero) ==
          doctest::Approx(-3 * std::log(std::numbers::pi) - std::log1p(3 * 2.0)).epsilon(1e-14));

    const cplx phase = std::polar(1.0, 0.83);
    std::vector<cplx> x2 = b.x, y2 = b.y;
    for (auto& v : x2) v *= phase;
    for (auto& v : y2) v *= phase;
    CHECK(log_cond_pdf(c, x2, y2) == doctest::Approx(log_cond_pdf(c, b.x, b.y)).epsilon(1e-13));

    std::vector<cplx> short_y(2);
    CHECK_THROWS_AS(log_cond_pdf(c, b.x, short_y), ContractViolation);
}

TEST_CASE("conditional density integrates to one") {
    // importance sampling from CN(0, v I) with v = 1 + T rho, which dominates every direction
    const ChannelConfig c{2, 1, 1.0};
    Engine g = make_stream(8, 0);
    const BlockSample b = sample_ustm_block(g, c);
    const double v = 1.0 + c.T * c.rho;
    constexpr int n = 200000;
    Moments w;
    for (int k = 0; k < n; ++k) {
        std::vector<cplx> y(c.T);
        double q = -c.T * std::log(std::numbers::pi * v);
        for (auto& z : y) {
            z = std::sqrt(v / 2) * cplx(standard_normal(g), standard_normal(g));
            q -= std::norm(z) / v;
        }
        w.add(std::exp(log_cond_pdf(c, b.x, y) - q));
    }
    CHECK(std::abs(w.mean - 1.0) < 0.01);
}

TEST_CASE("USTM blocks") {
    const ChannelConfig c{12, 1, 4.0};
    Engine g = make_stream(4, 0);
    Moments y2;
    constexpr int n = 1000000;
    for (int k = 0; k < n; ++k) {
        const BlockSample b = sample_ustm_block(g, c);
        double x2 = 0.0, yy = 0.0;
        for (int t = 0; t < c.T; ++t) {
            x2 += std::norm(b.x[t]);
            yy += std::norm(b.y[t]);
        }
        if (k < 1000) CHECK(std::abs(x2 / (c.T * c.rho) - 1.0) < 1e-12);
        y2.add(yy);
    }
    CHECK(std::abs(y2.mean - (c.T * c.rho + c.T)) < 3.0 * y2.std_err());
}

TEST_CASE("direct information density") {
    Engine g = make_stream(6, 0);
    const ChannelConfig one{1, 1, 2.0};
    const BlockSample b = sample_ustm_block(g, one);
    CHECK(std::abs(info_density_direct(one, 1.0, b, 1000, g)) < 1e-12);
    CHECK_THROWS_AS(info_density_direct(one, 1.0, b, 999, g), ContractViolation);
}

TEST_CASE("law of i_s: gamma-pair generator vs channel simulation") {
    constexpr int n = 10000;
    struct Case {
        int T;
        double s, rho;
        int m_sphere;
    };
    // At T = 12 the sphere average is dominated by inputs nearly aligned with y,
    // which a plain Monte-Carlo mean essentially never draws; those cases average
    // over the input by quadrature instead (m_sphere = 0).
    for (const Case k : {Case{2, 1.0, 1.0, 1000}, Case{2, 0.5, 1.0, 1000}, Case{2, 1.0, 4.0, 1000},
                         Case{2, 0.5, 4.0, 1000}, Case{12, 1.0, 1.0, 0}, Case{12, 0.5, 1.0, 0},
                         Case{12, 1.0, 4.0, 0}, Case{12, 0.5, 4.0, 0}}) {
        CAPTURE(k.T);
        CAPTURE(k.s);
        CAPTURE(k.rho);
        const ChannelConfig c{k.T, 1, k.rho};
        const double d = oracle::ks_statistic(generator_draws(c, k.s, n, 100 + k.T),
                                              direct_draws(c, k.s, n, k.m_sphere, 200 + k.T));
        CHECK(d < oracle::ks_critical_1pct(n, n));
    }
}

TEST_CASE("mu(s)") {
    for (const ChannelConfig c : {ChannelConfig{2, 1, 1.0}, ChannelConfig{12, 1, 4.0}, ChannelConfig{12, 1, 1e3}})
        CHECK(std::abs(mu_factor(c, 1.0) - 1.0) < 1e-6);

    SUBCASE("identity against direct normalization") {
        for (const ChannelConfig c : {ChannelConfig{2, 1, 1.0}, ChannelConfig{2, 1, 10.0}, ChannelConfig{3, 1, 2.0}})
            for (double s : {0.5, 1.0, 1.5}) {
                CAPTURE(c.T);
                CAPTURE(s);
                CHECK(mu_factor(c, s) == doctest::Approx(oracle::mu_by_normalization(c, s)).epsilon(1e-7));
            }
    }
    SUBCASE("s = 0.5 against Monte-Carlo") {
        const ChannelConfig c{12, 1, 4.0};
        Engine g = make_stream(77, 0);
        Moments m;
        for (int k = 0; k < 10000000; ++k) m.add(std::exp(-2.0 * info_density(c, 0.5, sample_gamma_pair(g, 12))));
        CHECK(std::abs(m.mean - mu_factor(c, 0.5)) < 3.0 * m.std_err());
    }
    for (double s : {0.05, 0.3, 1.0, 2.0}) CHECK(mu_factor({12, 1, 4.0}, s) > 0.0);
    CHECK_THROWS_AS(mu_factor({2, 1, 1.0}, 0.0), DomainError);
}

}
