#pragma once

#include "fblb/channel.hpp"

namespace fblb {

enum class QuadScheme { ReducedLogTrapezoid };

/// Quadrature over the gamma pair. Υ₂ is integrated analytically given
/// w = (1+Tρ)Υ₁ + Υ₂, so only w needs nodes: n1 trapezoid nodes in log w over a
/// range located with n2 scan points. tol is the n-vs-2n acceptance threshold.
struct QuadratureSpec {
    int n1 = 128;
    int n2 = 64;
    QuadScheme scheme = QuadScheme::ReducedLogTrapezoid;
    double tol = 1e-9;

    [[nodiscard]] QuadratureSpec doubled() const { return {2 * n1, 2 * n2, scheme, tol}; }
    auto operator<=>(const QuadratureSpec&) const = default;
};

/// Cumulants of i_s under the law tilted by exp(-lambda·i_s).
struct TiltedMoments {
    double log_mgf = 0.0;  // log E[exp(-lambda i_s)]
    double mean = 0.0;
    double var = 0.0;
    double third = 0.0;    // third central moment
    double w_lo = 0.0;     // integration range actually used, in w
    double w_hi = 0.0;
};

/// Requires lambda·sTρ/(1+Tρ) < 1, where the moment generating function is finite.
TiltedMoments tilted_moments(const ChannelConfig& cfg, double s, double lambda,
                             const QuadratureSpec& quad);

}  // namespace fblb
