#include "fblb/bounds.hpp"

#include "fblb/asymptotics.hpp"
#include "fblb/errors.hpp"
#include "fblb/special_functions.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace fblb {

namespace {

BoundPoint from_eea(const EeaPoint& e, BoundKind kind) {
    BoundPoint p;
    p.kind = kind;
    p.rate = e.rate;
    p.eps = std::min(e.eps, 1.0);
    p.log_eps = std::log(e.eps);
    p.tau = e.tau;
    p.s = 1.0 / (1.0 + e.tau);
    p.exponent = e.exponent;
    p.prefactor = e.prefactor;
    return p;
}

BoundPoint from_prefactor(const PrefactorBounds& pb, double tau, BoundKind kind) {
    BoundPoint p;
    p.kind = kind;
    p.rate = pb.rate;
    p.tau = tau;
    p.s = pb.s;
    p.exponent = pb.exponent;
    const bool up = kind == BoundKind::PeeaUpper;
    p.prefactor = up ? pb.a_upper : pb.a_lower;
    p.log_eps = up ? pb.log_eps_upper : pb.log_eps_lower;
    p.eps = up ? pb.eps_upper : pb.eps_lower;
    return p;
}

BoundPoint normal_point(BoundKind kind) {
    BoundPoint p;
    p.kind = kind;
    p.s = 1.0;
    return p;
}

CapacityDispersion na_constants(BoundKind kind, const ChannelConfig& cfg, CgfEvaluator& ev) {
    if (cfg.T < 2) throw DomainError("T=1 carries no information; this approximation needs T >= 2");
    return kind == BoundKind::Na ? capacity_dispersion(cfg, ev) : high_snr_capacity_dispersion(cfg);
}

std::vector<double> ladder_around(double center, const std::vector<double>& offsets) {
    std::vector<double> v;
    for (double o : offsets) v.push_back(center + o);
    return v;
}

// s (and tau) for the Monte-Carlo kinds come from the matching saddlepoint optimum.
BoundPoint mc_witness(BoundKind kind, const ChannelConfig& cfg, Target t, const EvalContext& ctx) {
    OptimizerOptions opt = ctx.opt;
    if (ctx.mc.fixed_s) {
        opt.s_grid = {*ctx.mc.fixed_s};
        opt.s_min = opt.s_max = *ctx.mc.fixed_s;
        opt.fast_s = false;
    }
    BoundPoint sp;
    try {
        sp = kind == BoundKind::RcusMc ? optimize_rcus(cfg, t, *ctx.ev, opt) : optimize_mc(cfg, t, *ctx.ev, opt);
    } catch (const InfeasibleTarget&) {
        if (t.kind == Target::Kind::Eps) throw;
    }
    if (std::isnan(sp.s)) sp.s = ctx.mc.fixed_s.value_or(1.0);
    if (std::isnan(sp.tau)) sp.tau = 0.5 * ctx.ev->tau_cap(cfg, sp.s);
    return sp;
}

BoundPoint from_mc(BoundKind kind, double rate, const McEstimate& e, double s, double tau) {
    BoundPoint p;
    p.kind = kind;
    p.rate = rate;
    p.eps = e.value;
    p.log_eps = std::log(e.value);
    p.s = s;
    p.tau = tau;
    p.log_xi = e.log_xi;
    p.std_err = e.std_err;
    p.n_samples = e.n_samples;
    p.vacuous = kind == BoundKind::McMc && e.value <= 0.0;
    return p;
}

BoundPoint peea_rate_at_eps(BoundKind kind, const ChannelConfig& cfg, double eps, const EvalContext& ctx) {
    const double le = std::log(eps);
    auto f = [&](double tau) {
        return from_prefactor(prefactor_bounds(cfg, tau, *ctx.ev), tau, kind).log_eps - le;
    };
    // Rate decreases with tau, so the first grid tau meeting eps gives the largest rate.
    constexpr int n = 200;
    double prev = 0.0, fprev = 0.0;
    for (int k = 1; k < n; ++k) {
        const double tau = static_cast<double>(k) / n;
        const double v = f(tau);
        if (v <= 0.0) {
            double root = tau;
            if (k > 1) {
                auto tol = [](double a, double b) { return std::abs(b - a) < 1e-9; };
                const auto r = boost::math::tools::bisect(f, prev, tau, tol);
                root = r.second;
            }
            return from_prefactor(prefactor_bounds(cfg, root, *ctx.ev), root, kind);
        }
        prev = tau;
        fprev = v;
    }
    std::ostringstream os;
    os << kind_name(kind) << ": eps=" << eps << " not reached for tau in (0, 1)";
    throw NoSolution(os.str(), std::exp(fprev + le), 1.0);
}

}  // namespace

BoundPoint rate_at_eps(BoundKind kind, const ChannelConfig& cfg, double eps, const EvalContext& ctx) {
    cfg.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    CgfEvaluator& ev = *ctx.ev;
    switch (kind) {
        case BoundKind::RcusSp: return optimize_rcus(cfg, Target::eps(eps), ev, ctx.opt);
        case BoundKind::McSp: return optimize_mc(cfg, Target::eps(eps), ev, ctx.opt);
        case BoundKind::Na:
        case BoundKind::Hsna: {
            const CapacityDispersion cd = na_constants(kind, cfg, ev);
            BoundPoint p = normal_point(kind);
            p.rate = cd.C / cfg.T - std::sqrt(cd.V / (cfg.L * double(cfg.T) * cfg.T)) * q_inv(eps);
            // below zero the expansion says nothing; report rate 0 and flag it
            if (p.rate < 0.0) {
                p.rate = 0.0;
                p.vacuous = true;
            }
            p.eps = eps;
            p.log_eps = std::log(eps);
            return p;
        }
        case BoundKind::Eea: return from_eea(eea_rate(cfg, eps, EeaVariant::Plain, ev), kind);
        case BoundKind::EeaPref: return from_eea(eea_rate(cfg, eps, EeaVariant::Prefactor, ev), kind);
        case BoundKind::PeeaUpper:
        case BoundKind::PeeaLower: return peea_rate_at_eps(kind, cfg, eps, ctx);
        case BoundKind::RcusMc: {
            const BoundPoint w = mc_witness(kind, cfg, Target::eps(eps), ctx);
            const SampleBank bank(cfg, w.s, ctx.mc.samples, ctx.mc.seed, ctx.mc.jobs, ev);
            const double R = bank.rcus_rate_at_eps(eps);
            if (!std::isfinite(R)) throw NoSolution("rcus-mc: eps not reachable with this sample", 0.0, 1.0);
            return from_mc(kind, R, bank.rcus(R), w.s, kNaN);
        }
        case BoundKind::McMc: {
            const BoundPoint w = mc_witness(kind, cfg, Target::eps(eps), ctx);
            const auto ladder = ladder_around(w.log_xi, ctx.mc.xi_offsets);
            const SampleBank bank(cfg, w.s, ctx.mc.samples, ctx.mc.seed, ctx.mc.jobs, ev);
            const double R = bank.converse_rate_at_eps(eps, ladder);
            if (!std::isfinite(R))
                throw NoSolution("mc-mc: no ladder entry reaches eps with this sample", 0.0, 1.0);
            return from_mc(kind, R, bank.converse(R, ladder), w.s, w.tau);
        }
    }
    throw DomainError("unknown bound kind");
}

BoundPoint eps_at_rate(BoundKind kind, const ChannelConfig& cfg, double R, const EvalContext& ctx) {
    cfg.validate();
    if (!(R >= 0.0)) throw DomainError("rate must be nonnegative");
    CgfEvaluator& ev = *ctx.ev;
    switch (kind) {
        case BoundKind::RcusSp: return optimize_rcus(cfg, Target::rate(R), ev, ctx.opt);
        case BoundKind::McSp: return optimize_mc(cfg, Target::rate(R), ev, ctx.opt);
        case BoundKind::Na:
        case BoundKind::Hsna: {
            const CapacityDispersion cd = na_constants(kind, cfg, ev);
            BoundPoint p = normal_point(kind);
            p.rate = R;
            const double x = (cd.C / cfg.T - R) * std::sqrt(cfg.L * double(cfg.T) * cfg.T / cd.V);
            p.eps = q_func(x);
            p.log_eps = std::log(p.eps);
            return p;
        }
        case BoundKind::Eea: return from_eea(eea_eps(cfg, R, EeaVariant::Plain, ev), kind);
        case BoundKind::EeaPref: return from_eea(eea_eps(cfg, R, EeaVariant::Prefactor, ev), kind);
        case BoundKind::PeeaUpper:
        case BoundKind::PeeaLower: {
            const double tau = tau_at_rate(cfg, R, ev);
            return from_prefactor(prefactor_bounds(cfg, tau, ev), tau, kind);
        }
        case BoundKind::RcusMc: {
            const BoundPoint w = mc_witness(kind, cfg, Target::rate(R), ctx);
            return from_mc(kind, R, rcus_mc(cfg, w.s, R, ctx.mc.samples, ctx.mc.seed, ctx.mc.jobs, ev), w.s, kNaN);
        }
        case BoundKind::McMc: {
            const BoundPoint w = mc_witness(kind, cfg, Target::rate(R), ctx);
            const double center = cfg.L * (ev.stats(cfg, w.s).J - ev.bundle(cfg, {w.s, w.tau}).psi1 / w.s);
            const McEstimate e = mc_bound_mc(cfg, w.s, R, ladder_around(center, ctx.mc.xi_offsets),
                                             ctx.mc.samples, ctx.mc.seed, ctx.mc.jobs, std::nullopt, ev);
            return from_mc(kind, R, e, w.s, w.tau);
        }
    }
    throw DomainError("unknown bound kind");
}

}  // namespace fblb
