#pragma once

#include "fblb/cgf.hpp"

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace fblb {

enum class BoundKind {
    RcusSp,     // achievability, saddlepoint
    McSp,       // converse, saddlepoint
    RcusMc,     // achievability, Monte-Carlo
    McMc,       // converse, Monte-Carlo
    Na,         // normal approximation
    Hsna,       // high-SNR normal approximation
    Eea,        // error-exponent approximation
    EeaPref,    // error exponent with the L^{-(1+tau)/2} prefactor
    PeeaUpper,  // prefactor-and-exponent upper bound
    PeeaLower,  // prefactor-and-exponent lower bound
};

std::string_view kind_name(BoundKind k);
std::optional<BoundKind> parse_kind(std::string_view name);
const std::vector<BoundKind>& all_kinds();

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One evaluated (rate, eps) pair. Witness and diagnostic fields are NaN when
/// they do not apply to the bound kind.
struct BoundPoint {
    BoundKind kind = BoundKind::RcusSp;
    double rate = 0.0;  // nats per channel use
    double eps = 0.0;   // clamped to [0, 1]
    double log_eps = -std::numeric_limits<double>::infinity();  // unclamped
    double s = kNaN;
    double tau = kNaN;
    double log_xi = kNaN;
    double exponent = kNaN;   // L(ψ - τψ')
    double prefactor = kNaN;  // factor multiplying exp(exponent)
    bool vacuous = false;
    double std_err = kNaN;
    long n_samples = 0;
};

/// Terms of the saddlepoint expansion at one (u, τ).
struct ExpansionTerms {
    double exponent = 0.0;
    double psi_u_tau = 0.0;
    double k_term = 0.0;
    double u = 0.0;
};

struct OptimizerOptions {
    std::vector<double> s_grid = default_s_grid();
    double s_min = 0.05;
    double s_max = 2.0;
    double rho_min = 0.1;
    double rho_max = 1e4;
    double delta = 0.01;  // keeps tau <= 1 - delta in the achievability expansion
    int tau_grid = 16;    // coarse tau scan for the converse
    bool fast_s = false;  // tie s = 1/(1+tau)

    static std::vector<double> default_s_grid();
};

struct Target {
    enum class Kind { Rate, Eps };
    Kind kind = Kind::Eps;
    double value = 0.0;

    static Target rate(double r) { return {Kind::Rate, r}; }
    static Target eps(double e) { return {Kind::Eps, e}; }
};

/// e^{L u² ψ''/2} Q(u sqrt(L ψ'')).
double psi_fn(double u, int L, double psi2);
/// Third-cumulant correction K(u, τ, L) of the expansion.
double k_fn(double u, int L, const CgfBundle& b);
double k_hat(const CgfBundle& b);
ExpansionTerms expansion_terms(double u, int L, double tau, const CgfBundle& b);

BoundPoint rcus_sp(const ChannelConfig& cfg, double s, double tau,
                   CgfEvaluator& ev = shared_evaluator(), double delta = 0.01);
BoundPoint mc_sp(const ChannelConfig& cfg, double s, double tau, double R,
                 CgfEvaluator& ev = shared_evaluator());

BoundPoint optimize_rcus(const ChannelConfig& cfg, Target target, CgfEvaluator& ev = shared_evaluator(),
                         const OptimizerOptions& opt = {});
BoundPoint optimize_mc(const ChannelConfig& cfg, Target target, CgfEvaluator& ev = shared_evaluator(),
                       const OptimizerOptions& opt = {});

struct PrefactorBounds {
    double rate = 0.0;
    double eps_upper = 0.0;
    double eps_lower = 0.0;
    double log_eps_upper = 0.0;
    double log_eps_lower = 0.0;
    double exponent = 0.0;
    double a_upper = 0.0;
    double a_lower = 0.0;
    double s = 0.0;
};

/// Bounds parametrized by tau in (0, 1) with s = 1/(1+tau).
PrefactorBounds prefactor_bounds(const ChannelConfig& cfg, double tau, CgfEvaluator& ev = shared_evaluator());

}  // namespace fblb
