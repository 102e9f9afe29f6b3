#pragma once

#include "fblb/cgf.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fblb {

/// Plain Monte-Carlo estimate of a probability, with its binomial standard error.
/// log_xi is set by mc_bound_mc to the ladder entry that achieved the maximum.
struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
    long n_samples = 0;
    std::uint64_t seed = 0;
    double log_xi = std::numeric_limits<double>::quiet_NaN();
};

/// Samples per RNG sub-stream. Batch b always uses stream b of the seed.
inline constexpr long kBatchSize = 1L << 16;

/// P[Σ_ℓ (I_s − i_ℓ) ≥ gamma (+ log U)] over N blocks of L gamma pairs.
McEstimate tail_prob(const ChannelConfig& cfg, double s, double gamma, bool with_log_u, long N,
                     std::uint64_t seed, int jobs = 1, CgfEvaluator& ev = shared_evaluator());

/// Achievability bound: tail_prob with gamma = L I_s − L T R and the log U term.
McEstimate rcus_mc(const ChannelConfig& cfg, double s, double R, long N, std::uint64_t seed,
                   int jobs = 1, CgfEvaluator& ev = shared_evaluator());

/// Converse bound maximized over a ladder of log ξ values. All ladder entries
/// share one set of samples. If tau is given, the saddlepoint choice
/// log ξ = L J_s − L ψ'(τ)/s is appended to the ladder.
McEstimate mc_bound_mc(const ChannelConfig& cfg, double s, double R, std::vector<double> log_xi_ladder,
                       long N, std::uint64_t seed, int jobs = 1, std::optional<double> tau = std::nullopt,
                       CgfEvaluator& ev = shared_evaluator());

/// Offsets (in nats) around the saddlepoint log ξ used when no ladder is supplied.
std::vector<double> default_xi_offsets();

/// Stored per-block sums for common-random-number sweeps over R.
/// deficit[k] = Σ_ℓ (I_s − i_ℓ) and log_u[k] for sample k.
class SampleBank {
public:
    SampleBank(const ChannelConfig& cfg, double s, long N, std::uint64_t seed, int jobs = 1,
               CgfEvaluator& ev = shared_evaluator());

    McEstimate rcus(double R) const;
    McEstimate converse(double R, const std::vector<double>& log_xi_ladder) const;
    /// Empirical quantile: a rate with rcus(R) ≤ eps, midway to the first rate
    /// where the sample frequency exceeds eps.
    double rcus_rate_at_eps(double eps) const;
    /// Smallest R with converse(R) ≥ eps, +inf if no ladder entry reaches eps.
    double converse_rate_at_eps(double eps, const std::vector<double>& log_xi_ladder) const;

    [[nodiscard]] long size() const { return static_cast<long>(deficit_.size()); }

private:
    ChannelConfig cfg_;
    double s_;
    double I_;
    double J_;
    std::uint64_t seed_;
    std::vector<double> deficit_;
    std::vector<double> log_u_;
};

}  // namespace fblb
