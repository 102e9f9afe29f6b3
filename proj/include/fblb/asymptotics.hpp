#pragma once

#include "fblb/cgf.hpp"

namespace fblb {

/// Capacity C and dispersion V per coherence block (nats, nats²).
struct CapacityDispersion {
    double C = 0.0;
    double V = 0.0;
};

CapacityDispersion capacity_dispersion(const ChannelConfig& cfg, CgfEvaluator& ev = shared_evaluator());
/// Large-SNR closed forms of C and V (the o(1) corrections dropped). Needs T >= 2.
CapacityDispersion high_snr_capacity_dispersion(const ChannelConfig& cfg);

/// C/T − sqrt(V/(L T²)) Q⁻¹(eps).
double normal_approx(const ChannelConfig& cfg, double eps, CgfEvaluator& ev = shared_evaluator());
double high_snr_na(const ChannelConfig& cfg, double eps);

struct Reliability {
    double E_r = 0.0;  // exponent per coherence block
    double R = 0.0;    // nats per channel use
};

/// Reliability function parametrized by tau in (0, 1), s = 1/(1+tau).
Reliability reliability_function(const ChannelConfig& cfg, double tau, CgfEvaluator& ev = shared_evaluator());

enum class EeaVariant { Plain, Prefactor };

struct EeaPoint {
    double rate = 0.0;
    double eps = 0.0;
    double tau = 0.0;
    double exponent = 0.0;   // -L E_r
    double prefactor = 1.0;  // 1 or L^{-(1+tau)/2}
};

/// Rate at which exp(-L E_r) (optionally times L^{-(1+tau)/2}) equals eps.
EeaPoint eea_rate(const ChannelConfig& cfg, double eps, EeaVariant variant,
                  CgfEvaluator& ev = shared_evaluator());
/// Same approximation evaluated at a given rate.
EeaPoint eea_eps(const ChannelConfig& cfg, double R, EeaVariant variant,
                 CgfEvaluator& ev = shared_evaluator());
/// tau in (0, 1) whose reliability-function rate equals R.
double tau_at_rate(const ChannelConfig& cfg, double R, CgfEvaluator& ev = shared_evaluator());

}  // namespace fblb
