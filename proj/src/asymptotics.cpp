#include "fblb/asymptotics.hpp"

#include "fblb/errors.hpp"
#include "fblb/special_functions.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace fblb {

namespace {

// Interior of (0, 1) used by the tau parametrization.
constexpr double kTauLo = 1e-9;
constexpr double kTauHi = 1.0 - 1e-9;

double bisect_tau(const std::function<double(double)>& f) {
    // 1e-6 absolute tolerance on tau
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-6; };
    const auto r = boost::math::tools::bisect(f, kTauLo, kTauHi, tol);
    return 0.5 * (r.first + r.second);
}

void require_info(const ChannelConfig& cfg) {
    cfg.validate();
    if (cfg.T < 2) throw DomainError("T=1 carries no information; this approximation needs T >= 2");
}

}  // namespace

CapacityDispersion capacity_dispersion(const ChannelConfig& cfg, CgfEvaluator& ev) {
    const InfoDensityStats st = ev.stats(cfg, 1.0);
    return {st.I, st.V};
}

CapacityDispersion high_snr_capacity_dispersion(const ChannelConfig& cfg) {
    require_info(cfg);
    const double a = cfg.T - 1.0;
    const double trho = cfg.T * cfg.rho;
    const double z = trho / (1.0 + trho);
    const double C = a * std::log(trho) - log_gamma(cfg.T) -
                     a * (std::log1p(trho) + z - digamma(a)) + hyp2f1_1b(a, cfg.T, z);
    const double V = a * a * std::numbers::pi * std::numbers::pi / 6.0 + a;
    return {C, V};
}

namespace {

double na_rate(const ChannelConfig& cfg, CapacityDispersion cd, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    const double T = cfg.T;
    return cd.C / T - std::sqrt(cd.V / (cfg.L * T * T)) * q_inv(eps);
}

}  // namespace

double normal_approx(const ChannelConfig& cfg, double eps, CgfEvaluator& ev) {
    require_info(cfg);
    return na_rate(cfg, capacity_dispersion(cfg, ev), eps);
}

double high_snr_na(const ChannelConfig& cfg, double eps) {
    return na_rate(cfg, high_snr_capacity_dispersion(cfg), eps);
}

Reliability reliability_function(const ChannelConfig& cfg, double tau, CgfEvaluator& ev) {
    require_info(cfg);
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("reliability_function: tau must lie in (0, 1)");
    const double s = 1.0 / (1.0 + tau);
    const CgfBundle b = ev.bundle(cfg, {s, tau});
    return {tau * b.psi1 - b.psi, (ev.stats(cfg, s).I - b.psi1) / cfg.T};
}

namespace {

double log_prefactor(const ChannelConfig& cfg, double tau, EeaVariant v) {
    return v == EeaVariant::Plain ? 0.0 : -0.5 * (1.0 + tau) * std::log(static_cast<double>(cfg.L));
}

EeaPoint make_point(const ChannelConfig& cfg, double tau, EeaVariant v, CgfEvaluator& ev) {
    const Reliability r = reliability_function(cfg, tau, ev);
    EeaPoint p;
    p.tau = tau;
    p.rate = r.R;
    p.exponent = -cfg.L * r.E_r;
    p.prefactor = std::exp(log_prefactor(cfg, tau, v));
    p.eps = std::exp(p.exponent + log_prefactor(cfg, tau, v));
    return p;
}

}  // namespace

EeaPoint eea_rate(const ChannelConfig& cfg, double eps, EeaVariant v, CgfEvaluator& ev) {
    require_info(cfg);
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    const double le = std::log(eps);
    // log of the approximation minus log eps; decreasing in tau
    auto g = [&](double tau) {
        return -cfg.L * reliability_function(cfg, tau, ev).E_r + log_prefactor(cfg, tau, v) - le;
    };
    const double g_lo = g(kTauLo), g_hi = g(kTauHi);
    if (g_lo < 0.0 || g_hi > 0.0) {
        const double e_hi = std::exp(g_lo + le), e_lo = std::exp(g_hi + le);
        std::ostringstream os;
        os << "eps=" << eps << " is outside the range [" << e_lo << ", " << e_hi
           << "] reachable with tau in (0, 1)";
        throw NoSolution(os.str(), e_lo, e_hi);
    }
    return make_point(cfg, bisect_tau(g), v, ev);
}

double tau_at_rate(const ChannelConfig& cfg, double R, CgfEvaluator& ev) {
    require_info(cfg);
    auto h = [&](double tau) { return reliability_function(cfg, tau, ev).R - R; };
    const double h_lo = h(kTauLo), h_hi = h(kTauHi);
    if (h_lo < 0.0 || h_hi > 0.0) {
        std::ostringstream os;
        os << "rate " << R << " is outside the range [" << h_hi + R << ", " << h_lo + R
           << "] covered by tau in (0, 1)";
        throw NoSolution(os.str(), h_hi + R, h_lo + R);
    }
    return bisect_tau(h);
}

EeaPoint eea_eps(const ChannelConfig& cfg, double R, EeaVariant v, CgfEvaluator& ev) {
    return make_point(cfg, tau_at_rate(cfg, R, ev), v, ev);
}

}  // namespace fblb
