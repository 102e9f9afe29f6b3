#include "fblb/saddlepoint.hpp"

#include "fblb/errors.hpp"
#include "fblb/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <utility>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace fblb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

constexpr std::array<std::pair<BoundKind, std::string_view>, 10> kNames{{
    {BoundKind::RcusSp, "rcus-sp"},
    {BoundKind::McSp, "mc-sp"},
    {BoundKind::RcusMc, "rcus-mc"},
    {BoundKind::McMc, "mc-mc"},
    {BoundKind::Na, "na"},
    {BoundKind::Hsna, "hsna"},
    {BoundKind::Eea, "eea"},
    {BoundKind::EeaPref, "eea-pref"},
    {BoundKind::PeeaUpper, "peea-upper"},
    {BoundKind::PeeaLower, "peea-lower"},
}};

// (x² − 1)/√(2π) − x³ e^{x²/2} Q(x). The three pieces cancel to O(x⁻²), so for
// large x use the asymptotic series −(1/√(2π)) Σ_{n≥2} (−1)^n (2n−1)!! / x^{2n−2}.
double k_bracket(double x) {
    if (x <= 8.0) return (x * x - 1.0) / kSqrt2Pi - x * x * x * q_scaled(x);
    const double ix2 = 1.0 / (x * x);
    double term = 3.0 * ix2;  // n = 2
    double sum = 0.0;
    double sign = -1.0;
    for (int n = 2; n < 200; ++n) {
        sum += sign * term;
        const double next = term * (2.0 * n + 1.0) * ix2;
        if (next >= term || next < 1e-17 * std::abs(sum)) break;
        term = next;
        sign = -sign;
    }
    return sum / kSqrt2Pi;
}

void check_rho(const ChannelConfig& cfg, const OptimizerOptions& opt) {
    cfg.validate();
    if (cfg.rho < opt.rho_min || cfg.rho > opt.rho_max) {
        std::ostringstream os;
        os << "rho=" << cfg.rho << " outside the configured range [" << opt.rho_min << ", "
           << opt.rho_max << "]";
        throw DomainError(os.str());
    }
    if (cfg.T < 2) throw DomainError("T=1 carries no information; bounds need T >= 2");
}

std::vector<double> active_grid(const OptimizerOptions& opt) {
    std::vector<double> g;
    for (double s : opt.s_grid)
        if (s >= opt.s_min && s <= opt.s_max) g.push_back(s);
    if (g.empty()) throw DomainError("no s grid point lies inside [s_min, s_max]");
    return g;
}

// Exponent with the nonpositivity invariant enforced.
double checked_exponent(int L, double tau, const CgfBundle& b) {
    const double e = L * (b.psi - tau * b.psi1);
    if (e > 1e-9 * std::max(1.0, L * tau * std::abs(b.psi1))) {
        std::ostringstream os;
        os << "positive saddlepoint exponent " << e << " at tau=" << tau;
        throw NumericError(os.str());
    }
    return std::min(e, 0.0);
}

void finish_eps(BoundPoint& p, double log_eps) {
    p.log_eps = log_eps;
    p.eps = log_eps >= 0.0 ? 1.0 : std::exp(log_eps);
}

double rcus_tau_cap(const ChannelConfig& cfg, double s, CgfEvaluator& ev, double delta) {
    return std::min(ev.tau_cap(cfg, s), 1.0 - delta);
}

// Maximizes f on [lo, hi]: coarse scan, then Brent around the best scan point.
// Returns (argmax, max). First grid point wins ties.
std::pair<double, double> maximize_1d(const std::function<double(double)>& f, double lo, double hi,
                                      int n_scan) {
    std::vector<double> xs(n_scan), fs(n_scan);
    int best = 0;
    for (int k = 0; k < n_scan; ++k) {
        xs[k] = k == n_scan - 1 ? hi : lo + (hi - lo) * k / (n_scan - 1);
        fs[k] = f(xs[k]);
        if (fs[k] > fs[best]) best = k;
    }
    if (!(fs[best] > -kInf)) return {xs[best], fs[best]};
    const double a = xs[std::max(best - 1, 0)];
    const double b = xs[std::min(best + 1, n_scan - 1)];
    std::uintmax_t iters = 60;
    const auto r = boost::math::tools::brent_find_minima(
        [&](double x) {
            const double v = f(x);
            return v > -kInf ? -v : 1e300;
        },
        a, b, 30, iters);
    if (-r.second > fs[best]) return {r.first, -r.second};
    return {xs[best], fs[best]};
}

// Optimizes a per-s score over the s grid, then refines between the grid
// neighbours of the best point. score returns -inf when s is infeasible.
struct SBest {
    double s;
    double score;
};

SBest optimize_s(const std::vector<double>& grid, const std::function<double(double)>& score) {
    std::vector<double> vals(grid.size());
    std::size_t best = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        vals[k] = score(grid[k]);
        if (vals[k] > vals[best]) best = k;
    }
    if (!(vals[best] > -kInf) || grid.size() == 1) return {grid[best], vals[best]};
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[std::min(best + 1, grid.size() - 1)];
    std::uintmax_t iters = 40;
    const auto r = boost::math::tools::brent_find_minima(
        [&](double s) {
            const double v = score(s);
            return v > -kInf ? -v : 1e300;
        },
        a, b, 24, iters);
    if (-r.second > vals[best]) return {r.first, -r.second};
    return {grid[best], vals[best]};
}

// Root of a decreasing function g on [lo, hi] given g(lo) > 0 > g(hi).
double decreasing_root(const std::function<double(double)>& g, double lo, double hi, double glo, double ghi) {
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                     boost::math::tools::eps_tolerance<double>(40), iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

std::string_view kind_name(BoundKind k) {
    for (const auto& [kind, name] : kNames)
        if (kind == k) return name;
    return "unknown";
}

std::optional<BoundKind> parse_kind(std::string_view name) {
    for (const auto& [kind, n] : kNames)
        if (n == name) return kind;
    return std::nullopt;
}

const std::vector<BoundKind>& all_kinds() {
    static const std::vector<BoundKind> v = [] {
        std::vector<BoundKind> out;
        for (const auto& kn : kNames) out.push_back(kn.first);
        return out;
    }();
    return v;
}

std::vector<double> OptimizerOptions::default_s_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 20; ++k) g.push_back(k / 10.0);
    return g;
}

double psi_fn(double u, int L, double psi2) { return q_scaled(u * std::sqrt(L * psi2)); }

double k_hat(const CgfBundle& b) { return b.psi3 / (6.0 * std::pow(b.psi2, 1.5) * kSqrt2Pi); }

double k_fn(double u, int L, const CgfBundle& b) {
    if (b.psi3 == 0.0) return 0.0;
    const double coef = b.psi3 / (6.0 * std::pow(b.psi2, 1.5));
    return coef * k_bracket(u * std::sqrt(L * b.psi2));
}

ExpansionTerms expansion_terms(double u, int L, double tau, const CgfBundle& b) {
    return {L * (b.psi - tau * b.psi1), psi_fn(u, L, b.psi2), k_fn(u, L, b), u};
}

BoundPoint rcus_sp(const ChannelConfig& cfg, double s, double tau, CgfEvaluator& ev, double delta) {
    cfg.validate();
    const double cap = rcus_tau_cap(cfg, s, ev, delta);
    if (!(tau >= 0.0) || tau > cap * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "rcus_sp: tau=" << tau << " outside [0, " << cap << "]";
        throw DomainError(os.str());
    }
    tau = std::min(tau, cap);
    const InfoDensityStats st = ev.stats(cfg, s);
    const CgfBundle b = ev.bundle(cfg, {s, tau});

    BoundPoint p;
    p.kind = BoundKind::RcusSp;
    p.s = s;
    p.tau = tau;
    p.rate = (st.I - b.psi1) / cfg.T;
    p.exponent = checked_exponent(cfg.L, tau, b);
    p.prefactor = psi_fn(tau, cfg.L, b.psi2) + psi_fn(1.0 - tau, cfg.L, b.psi2) + k_hat(b) / std::sqrt(cfg.L);
    if (p.prefactor > 0.0) {
        finish_eps(p, p.exponent + std::log(p.prefactor));
    } else {
        p.vacuous = true;
        finish_eps(p, -kInf);
    }
    return p;
}

BoundPoint mc_sp(const ChannelConfig& cfg, double s, double tau, double R, CgfEvaluator& ev) {
    cfg.validate();
    if (!(R >= 0.0)) throw DomainError("mc_sp: R must be nonnegative");
    const double cap = ev.tau_cap(cfg, s);
    if (!(tau >= 0.0) || tau > cap * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "mc_sp: tau=" << tau << " outside [0, " << cap << "]";
        throw DomainError(os.str());
    }
    tau = std::min(tau, cap);
    const InfoDensityStats st = ev.stats(cfg, s);
    const CgfBundle b = ev.bundle(cfg, {s, tau});

    BoundPoint p;
    p.kind = BoundKind::McSp;
    p.s = s;
    p.tau = tau;
    p.rate = R;
    p.log_xi = cfg.L * (st.J - b.psi1 / s);
    p.exponent = checked_exponent(cfg.L, tau, b);
    p.prefactor = psi_fn(tau, cfg.L, b.psi2) + k_fn(tau, cfg.L, b) / std::sqrt(cfg.L);
    const double log_sub = p.log_xi - static_cast<double>(cfg.n()) * R;
    const double log_main = p.prefactor > 0.0 ? p.exponent + std::log(p.prefactor) : -kInf;
    if (!(log_main > log_sub)) {
        p.vacuous = true;
        finish_eps(p, -kInf);
        return p;
    }
    finish_eps(p, log_main + log1m_exp(log_sub - log_main));
    return p;
}

namespace {

// Unclamped log eps of the achievability expansion, -inf if the prefactor is not positive.
double rcus_log_eps(const ChannelConfig& cfg, double s, double tau, CgfEvaluator& ev, double delta) {
    return rcus_sp(cfg, s, tau, ev, delta).log_eps;
}

std::optional<BoundPoint> rcus_at_s(const ChannelConfig& cfg, double s, Target t, CgfEvaluator& ev,
                                    const OptimizerOptions& opt) {
    const double cap = rcus_tau_cap(cfg, s, ev, opt.delta);
    if (t.kind == Target::Kind::Rate) {
        const double target = ev.stats(cfg, s).I - cfg.T * t.value;
        if (target < 0.0) return std::nullopt;
        double tau;
        try {
            tau = ev.solve_saddle(cfg, s, target);
        } catch (const SaddleNotFound&) {
            return std::nullopt;
        }
        if (tau > cap) return std::nullopt;
        return rcus_sp(cfg, s, tau, ev, opt.delta);
    }
    const double le = std::log(t.value);
    auto g = [&](double tau) { return rcus_log_eps(cfg, s, tau, ev, opt.delta) - le; };
    const double g0 = g(0.0), g1 = g(cap);
    if (g1 > 0.0) return std::nullopt;
    if (g0 <= 0.0) return rcus_sp(cfg, s, 0.0, ev, opt.delta);
    BoundPoint p = rcus_sp(cfg, s, decreasing_root(g, 0.0, cap, g0, g1), ev, opt.delta);
    // eps is only reachable below zero rate: nothing achievable at this s
    if (p.rate < 0.0) return std::nullopt;
    return p;
}

// Feasible interval reported when no s admits the target.
std::pair<double, double> rcus_feasible(const ChannelConfig& cfg, Target t, CgfEvaluator& ev,
                                        const std::vector<double>& grid, const OptimizerOptions& opt) {
    double lo = kInf, hi = -kInf;
    for (double s : grid) {
        const double cap = rcus_tau_cap(cfg, s, ev, opt.delta);
        BoundPoint edge = rcus_sp(cfg, s, cap, ev, opt.delta);
        if (edge.rate < 0.0) edge = rcus_at_s(cfg, s, Target::rate(0.0), ev, opt).value_or(edge);
        if (t.kind == Target::Kind::Rate) {
            lo = std::min(lo, edge.rate);
            hi = std::max(hi, ev.stats(cfg, s).I / cfg.T);
        } else {
            lo = std::min(lo, edge.eps);
            hi = 1.0;
        }
    }
    return {lo, hi};
}

[[noreturn]] void throw_infeasible(std::string_view what, Target t, std::pair<double, double> range) {
    if (t.kind == Target::Kind::Rate) range.first = std::max(range.first, 0.0);
    std::ostringstream os;
    os << what << ": target " << (t.kind == Target::Kind::Rate ? "rate " : "eps ") << t.value
       << " is outside the feasible interval [" << range.first << ", " << range.second << "]";
    throw SaddleNotFound(os.str(), range.first, range.second);
}

void check_target(Target t) {
    if (t.kind == Target::Kind::Eps && !(t.value > 0.0 && t.value < 1.0))
        throw DomainError("target eps must lie in (0, 1)");
    if (t.kind == Target::Kind::Rate && !(t.value >= 0.0)) throw DomainError("target rate must be >= 0");
}

BoundPoint optimize_rcus_fast(const ChannelConfig& cfg, Target t, CgfEvaluator& ev,
                              const OptimizerOptions& opt) {
    const double hi = 1.0 - opt.delta;
    auto s_of = [](double tau) { return 1.0 / (1.0 + tau); };
    if (t.kind == Target::Kind::Eps) {
        const double le = std::log(t.value);
        auto g = [&](double tau) { return rcus_log_eps(cfg, s_of(tau), tau, ev, opt.delta) - le; };
        const double g0 = g(0.0), g1 = g(hi);
        if (g1 > 0.0) throw_infeasible("optimize_rcus", t, {std::exp(g1 + le), 1.0});
        if (g0 <= 0.0) return rcus_sp(cfg, 1.0, 0.0, ev, opt.delta);
        const double tau = decreasing_root(g, 0.0, hi, g0, g1);
        const BoundPoint p = rcus_sp(cfg, s_of(tau), tau, ev, opt.delta);
        if (p.rate < 0.0) {
            const BoundPoint zero = optimize_rcus_fast(cfg, Target::rate(0.0), ev, opt);
            throw_infeasible("optimize_rcus", t, {zero.eps, 1.0});
        }
        return p;
    }
    auto h = [&](double tau) {
        const double s = s_of(tau);
        return (ev.stats(cfg, s).I - ev.bundle(cfg, {s, tau}).psi1) / cfg.T - t.value;
    };
    const double h0 = h(0.0), h1 = h(hi);
    if (h0 < 0.0 || h1 > 0.0) throw_infeasible("optimize_rcus", t, {h1 + t.value, h0 + t.value});
    const double tau = h0 == 0.0 ? 0.0 : decreasing_root(h, 0.0, hi, h0, h1);
    return rcus_sp(cfg, s_of(tau), tau, ev, opt.delta);
}

}  // namespace

BoundPoint optimize_rcus(const ChannelConfig& cfg, Target t, CgfEvaluator& ev, const OptimizerOptions& opt) {
    check_rho(cfg, opt);
    check_target(t);
    if (opt.fast_s) return optimize_rcus_fast(cfg, t, ev, opt);
    const auto grid = active_grid(opt);

    // score: larger is better; rate for an eps target, -log eps for a rate target
    auto score = [&](double s) {
        const auto p = rcus_at_s(cfg, s, t, ev, opt);
        if (!p) return -kInf;
        return t.kind == Target::Kind::Eps ? p->rate : -p->log_eps;
    };
    const SBest best = optimize_s(grid, score);
    if (!(best.score > -kInf)) throw_infeasible("optimize_rcus", t, rcus_feasible(cfg, t, ev, grid, opt));
    return *rcus_at_s(cfg, best.s, t, ev, opt);
}

namespace {

// Converse rate certified at (s, τ) for target eps; +inf if the point cannot reach eps.
double mc_rate_for_eps(const ChannelConfig& cfg, double s, double tau, double eps, CgfEvaluator& ev) {
    const InfoDensityStats st = ev.stats(cfg, s);
    const CgfBundle b = ev.bundle(cfg, {s, tau});
    const double pref = psi_fn(tau, cfg.L, b.psi2) + k_fn(tau, cfg.L, b) / std::sqrt(cfg.L);
    if (!(pref > 0.0)) return kInf;
    const double log_main = checked_exponent(cfg.L, tau, b) + std::log(pref);
    const double le = std::log(eps);
    if (!(log_main > le)) return kInf;
    const double log_gap = log_main + log1m_exp(le - log_main);
    const double r = (st.J - b.psi1 / s - log_gap / cfg.L) / cfg.T;
    return std::max(r, 0.0);
}

struct TauBest {
    double tau;
    double score;
};

TauBest mc_best_tau(const ChannelConfig& cfg, double s, Target t, CgfEvaluator& ev,
                    const OptimizerOptions& opt) {
    const double cap = ev.tau_cap(cfg, s);
    std::function<double(double)> f;
    if (t.kind == Target::Kind::Rate)
        f = [&](double tau) { return mc_sp(cfg, s, tau, t.value, ev).log_eps; };
    else
        f = [&](double tau) { return -mc_rate_for_eps(cfg, s, tau, t.value, ev); };
    const auto [tau, v] = maximize_1d(f, 0.0, cap, std::max(opt.tau_grid, 3));
    return {tau, v};
}

}  // namespace

BoundPoint optimize_mc(const ChannelConfig& cfg, Target t, CgfEvaluator& ev, const OptimizerOptions& opt) {
    check_rho(cfg, opt);
    check_target(t);
    const auto grid = active_grid(opt);
    auto score = [&](double s) { return mc_best_tau(cfg, s, t, ev, opt).score; };
    const SBest best = optimize_s(grid, score);

    if (!(best.score > -kInf)) {
        if (t.kind == Target::Kind::Rate) {
            BoundPoint p;
            p.kind = BoundKind::McSp;
            p.rate = t.value;
            p.vacuous = true;
            return p;
        }
        double hi = 0.0;
        for (double s : grid) {
            const double cap = ev.tau_cap(cfg, s);
            for (int k = 0; k < opt.tau_grid; ++k) {
                const double tau = cap * k / (opt.tau_grid - 1.0);
                const CgfBundle b = ev.bundle(cfg, {s, tau});
                const double pref = psi_fn(tau, cfg.L, b.psi2) + k_fn(tau, cfg.L, b) / std::sqrt(cfg.L);
                hi = std::max(hi, std::exp(checked_exponent(cfg.L, tau, b)) * std::max(pref, 0.0));
            }
        }
        throw_infeasible("optimize_mc", t, {0.0, hi});
    }
    const TauBest tb = mc_best_tau(cfg, best.s, t, ev, opt);
    const double R = t.kind == Target::Kind::Rate ? t.value
                                                  : mc_rate_for_eps(cfg, best.s, tb.tau, t.value, ev);
    return mc_sp(cfg, best.s, tb.tau, R, ev);
}

PrefactorBounds prefactor_bounds(const ChannelConfig& cfg, double tau, CgfEvaluator& ev) {
    cfg.validate();
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("prefactor_bounds: tau must lie in (0, 1)");
    if (cfg.T < 2) throw DomainError("T=1 carries no information; bounds need T >= 2");
    const double s = 1.0 / (1.0 + tau);
    const InfoDensityStats st = ev.stats(cfg, s);
    const CgfBundle b = ev.bundle(cfg, {s, tau});
    const double L = cfg.L;

    PrefactorBounds out;
    out.s = s;
    out.rate = (st.I - b.psi1) / cfg.T;
    out.exponent = checked_exponent(cfg.L, tau, b);
    const double two_pi_l = 2.0 * std::numbers::pi * L * b.psi2;
    out.a_upper = 1.0 / (tau * std::sqrt(two_pi_l)) + std::abs(k_hat(b)) / std::sqrt(L) +
                  1.0 / ((1.0 - tau) * std::sqrt(two_pi_l));
    out.a_lower = std::pow(s, 1.0 / s) / (tau * std::pow(two_pi_l, 0.5 / s));
    out.log_eps_upper = out.exponent + std::log(out.a_upper);
    out.log_eps_lower = out.exponent + std::log(out.a_lower);
    out.eps_upper = std::exp(std::min(out.log_eps_upper, 0.0));
    out.eps_lower = std::exp(std::min(out.log_eps_lower, 0.0));
    return out;
}

}  // namespace fblb
