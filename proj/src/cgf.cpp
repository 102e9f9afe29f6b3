#include "fblb/cgf.hpp"

#include "fblb/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace fblb {

namespace {

bool close(double x, double y, double tol) {
    return std::abs(x - y) <= tol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
}

InfoDensityStats stats_once(const ChannelConfig& cfg, double s, const QuadratureSpec& quad) {
    const TiltedMoments m0 = tilted_moments(cfg, s, 0.0, quad);
    const TiltedMoments mu = tilted_moments(cfg, s, 1.0 / s, quad);
    return {m0.mean, m0.var, mu.log_mgf + m0.mean / s, std::exp(mu.log_mgf)};
}

}  // namespace

TauInterval tau_domain(const ChannelConfig& cfg, double s) {
    cfg.validate();
    if (!(s > 0.0)) throw DomainError("tau_domain: s must be positive");
    const double trho = cfg.T * cfg.rho;
    double hi = (1.0 + trho) / (s * trho);
    if (cfg.T >= 2) hi = std::min(hi, cfg.T / (cfg.T - 1.0));
    return {0.0, hi};
}

InfoDensityStats stats(const ChannelConfig& cfg, double s, const QuadratureSpec& quad) {
    cfg.validate();
    if (!(s > 0.0)) throw DomainError("stats: s must be positive");
    if (cfg.T == 1) return {};
    const InfoDensityStats a = stats_once(cfg, s, quad);
    const InfoDensityStats b = stats_once(cfg, s, quad.doubled());
    if (!close(a.I, b.I, quad.tol) || !close(a.V, b.V, quad.tol) ||
        !close(std::log(a.mu), std::log(b.mu), quad.tol)) {
        std::ostringstream os;
        os.precision(15);
        os << "quadrature did not converge (T=" << cfg.T << ", rho=" << cfg.rho << ", s=" << s
           << "): n=" << quad.n1 << " gives I=" << a.I << " V=" << a.V << " log mu=" << std::log(a.mu)
           << "; 2n gives I=" << b.I << " V=" << b.V << " log mu=" << std::log(b.mu);
        throw NumericError(os.str());
    }
    return a;
}

namespace {

void check_tau(const ChannelConfig& cfg, TiltPoint p, double margin) {
    const TauInterval dom = tau_domain(cfg, p.s);
    if (!(p.tau >= 0.0) || p.tau > dom.capped(margin) * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "tau=" << p.tau << " outside the admissible interval [0, " << dom.capped(margin) << "]";
        throw DomainError(os.str());
    }
}

// m0 holds the untilted cumulants of i_s at the same s.
CgfBundle assemble(const ChannelConfig& cfg, TiltPoint p, const QuadratureSpec& quad,
                   const TiltedMoments& m0) {
    CgfBundle b;
    if (p.tau == 0.0) {
        b = {0.0, 0.0, m0.var, -m0.third};
    } else {
        const TiltedMoments m = tilted_moments(cfg, p.s, p.tau, quad);
        b = {p.tau * m0.mean + m.log_mgf, m0.mean - m.mean, m.var, -m.third};
    }
    if (!(b.psi2 > 0.0)) {
        std::ostringstream os;
        os << "non-positive second cumulant " << b.psi2 << " at s=" << p.s << ", tau=" << p.tau;
        throw NumericError(os.str());
    }
    return b;
}

}  // namespace

CgfBundle cgf_bundle(const ChannelConfig& cfg, TiltPoint p, const QuadratureSpec& quad, double margin) {
    check_tau(cfg, p, margin);
    if (cfg.T == 1) return {};
    return assemble(cfg, p, quad, tilted_moments(cfg, p.s, 0.0, quad));
}

double solve_saddle(const ChannelConfig& cfg, double s, double target, const QuadratureSpec& quad,
                    double margin) {
    CgfEvaluator ev(quad, margin, false);
    return ev.solve_saddle(cfg, s, target);
}

CgfEvaluator::CgfEvaluator(QuadratureSpec quad, double margin, bool use_cache)
    : quad_(quad), margin_(margin), use_cache_(use_cache) {}

CgfEvaluator::Key CgfEvaluator::key(const ChannelConfig& cfg, double s, double tau) {
    return {cfg.T, std::bit_cast<std::uint64_t>(cfg.rho), std::bit_cast<std::uint64_t>(s),
            std::bit_cast<std::uint64_t>(tau)};
}

InfoDensityStats CgfEvaluator::stats(const ChannelConfig& cfg, double s) {
    if (!use_cache_) return fblb::stats(cfg, s, quad_);
    const Key k = key(cfg, s, 0.0);
    {
        std::shared_lock lock(mutex_);
        if (auto it = stats_cache_.find(k); it != stats_cache_.end()) return it->second;
    }
    const InfoDensityStats v = fblb::stats(cfg, s, quad_);
    std::unique_lock lock(mutex_);
    stats_cache_.emplace(k, v);
    return v;
}

CgfBundle CgfEvaluator::bundle(const ChannelConfig& cfg, TiltPoint p) {
    if (!use_cache_) return cgf_bundle(cfg, p, quad_, margin_);
    check_tau(cfg, p, margin_);
    if (cfg.T == 1) return {};
    const Key k = key(cfg, p.s, p.tau);
    const Key k0 = key(cfg, p.s, 0.0);
    TiltedMoments m0;
    bool have_base = false;
    {
        std::shared_lock lock(mutex_);
        if (auto it = bundle_cache_.find(k); it != bundle_cache_.end()) return it->second;
        if (auto it = base_cache_.find(k0); it != base_cache_.end()) {
            m0 = it->second;
            have_base = true;
        }
    }
    if (!have_base) m0 = tilted_moments(cfg, p.s, 0.0, quad_);
    const CgfBundle v = assemble(cfg, p, quad_, m0);
    std::unique_lock lock(mutex_);
    base_cache_.emplace(k0, m0);
    bundle_cache_.emplace(k, v);
    return v;
}

double CgfEvaluator::tau_cap(const ChannelConfig& cfg, double s) const {
    return tau_domain(cfg, s).capped(margin_);
}

double CgfEvaluator::solve_saddle(const ChannelConfig& cfg, double s, double target) {
    if (!(target >= 0.0)) throw DomainError("solve_saddle: target must be nonnegative");
    if (target == 0.0) return 0.0;
    const double cap = tau_cap(cfg, s);
    const CgfBundle top = bundle(cfg, {s, cap});
    if (target > top.psi1) {
        const double I = stats(cfg, s).I;
        const double rlo = (I - top.psi1) / cfg.T, rhi = I / cfg.T;
        std::ostringstream os;
        os << "no saddle point for psi'=" << target << " at s=" << s
           << "; reachable rates per channel use are [" << rlo << ", " << rhi << "]";
        throw SaddleNotFound(os.str(), rlo, rhi);
    }
    const double tol = 1e-9 * std::max(1.0, target);
    if (top.psi1 - target <= tol) return cap;

    double lo = 0.0, hi = cap;
    double tau = std::min(target / bundle(cfg, {s, 0.0}).psi2, 0.5 * cap);
    for (int it = 0; it < 200; ++it) {
        const CgfBundle b = bundle(cfg, {s, tau});
        const double f = b.psi1 - target;
        if (std::abs(f) <= tol) return tau;
        (f < 0.0 ? lo : hi) = tau;
        double next = tau - f / b.psi2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * cap) return tau;
        tau = next;
    }
    std::ostringstream os;
    os << "saddle iteration did not converge at s=" << s << ", target=" << target;
    throw NumericError(os.str());
}

std::size_t CgfEvaluator::cache_size() const {
    std::shared_lock lock(mutex_);
    return stats_cache_.size() + bundle_cache_.size();
}

void CgfEvaluator::clear() {
    std::unique_lock lock(mutex_);
    stats_cache_.clear();
    bundle_cache_.clear();
    base_cache_.clear();
}

CgfEvaluator& shared_evaluator() {
    static CgfEvaluator ev;
    return ev;
}

}  // namespace fblb
