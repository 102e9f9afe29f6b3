#pragma once

#include "fblb/channel.hpp"
#include "fblb/quadrature.hpp"

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <tuple>

namespace fblb {

/// Auxiliary parameters: s of the generalized information density, tau of the tilt.
struct TiltPoint {
    double s = 1.0;
    double tau = 0.0;
};

/// ψ(τ) = log E[exp(τ Z)] for Z = I_s - i_s, and its first three derivatives.
struct CgfBundle {
    double psi = 0.0;
    double psi1 = 0.0;
    double psi2 = 0.0;
    double psi3 = 0.0;
};

struct InfoDensityStats {
    double I = 0.0;   // E[i_s]
    double V = 0.0;   // Var[i_s]
    double J = 0.0;   // log mu(s) + I/s
    double mu = 1.0;
};

struct TauInterval {
    double lo = 0.0;
    double hi = 0.0;  // tau_max, excluded

    [[nodiscard]] double capped(double margin) const { return margin * hi; }
};

inline constexpr double kDefaultTauMargin = 0.995;

/// Region [0, tau_max) where the moment generating function of Z is finite.
TauInterval tau_domain(const ChannelConfig& cfg, double s);

InfoDensityStats stats(const ChannelConfig& cfg, double s, const QuadratureSpec& quad = {});
CgfBundle cgf_bundle(const ChannelConfig& cfg, TiltPoint point, const QuadratureSpec& quad = {},
                     double margin = kDefaultTauMargin);
/// Solves ψ'(τ) = target on [0, margin·tau_max].
double solve_saddle(const ChannelConfig& cfg, double s, double target,
                    const QuadratureSpec& quad = {}, double margin = kDefaultTauMargin);

/// Memoizing front end to the functions above. Keys exclude L because ψ is a
/// per-block quantity. Thread safe: concurrent lookups, serialized inserts.
class CgfEvaluator {
public:
    explicit CgfEvaluator(QuadratureSpec quad = {}, double margin = kDefaultTauMargin,
                          bool use_cache = true);

    InfoDensityStats stats(const ChannelConfig& cfg, double s);
    CgfBundle bundle(const ChannelConfig& cfg, TiltPoint point);
    double solve_saddle(const ChannelConfig& cfg, double s, double target);
    /// Largest tau the evaluator accepts for this s.
    double tau_cap(const ChannelConfig& cfg, double s) const;

    [[nodiscard]] const QuadratureSpec& quad() const { return quad_; }
    [[nodiscard]] double margin() const { return margin_; }
    [[nodiscard]] std::size_t cache_size() const;
    void clear();

private:
    using Key = std::tuple<int, std::uint64_t, std::uint64_t, std::uint64_t>;
    static Key key(const ChannelConfig& cfg, double s, double tau);

    QuadratureSpec quad_;
    double margin_;
    bool use_cache_;
    mutable std::shared_mutex mutex_;
    std::map<Key, InfoDensityStats> stats_cache_;
    std::map<Key, CgfBundle> bundle_cache_;
    std::map<Key, TiltedMoments> base_cache_;
};

/// Process-wide evaluator with default quadrature, for callers that do not manage one.
CgfEvaluator& shared_evaluator();

}  // namespace fblb
