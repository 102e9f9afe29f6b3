#pragma once

#include "fblb/montecarlo.hpp"
#include "fblb/saddlepoint.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fblb {

struct McOptions {
    long samples = 100000;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::vector<double> xi_offsets = default_xi_offsets();
    // Pins s for the Monte-Carlo kinds. With a fixed seed every rate then reuses
    // the same samples and the same i_s values (common random numbers).
    std::optional<double> fixed_s;
};

/// Everything a bound evaluation needs besides the channel.
struct EvalContext {
    CgfEvaluator* ev = &shared_evaluator();
    OptimizerOptions opt;
    McOptions mc;
};

/// Rate achieving (achievability kinds) or required by (converse kinds) error eps.
BoundPoint rate_at_eps(BoundKind kind, const ChannelConfig& cfg, double eps, const EvalContext& ctx = {});
/// Error probability of the bound family at rate R.
BoundPoint eps_at_rate(BoundKind kind, const ChannelConfig& cfg, double R, const EvalContext& ctx = {});

}  // namespace fblb
