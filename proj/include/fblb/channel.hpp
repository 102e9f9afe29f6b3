#pragma once

#include "fblb/rng.hpp"

#include <complex>
#include <span>
#include <vector>

namespace fblb {

struct QuadratureSpec;

/// Coherence length T, number of coherence intervals L and linear SNR rho.
struct ChannelConfig {
    int T = 1;
    int L = 1;
    double rho = 1.0;

    [[nodiscard]] long n() const { return static_cast<long>(T) * L; }
    void validate() const;
    static ChannelConfig from_db(int T, int L, double snr_db);
};

double db_to_linear(double db);

/// Realization of (Exp(1), Gamma(T-1, 1)).
struct GammaPair {
    double u1 = 0.0;
    double u2 = 0.0;
};

using cplx = std::complex<double>;

struct BlockSample {
    std::vector<cplx> x;
    std::vector<cplx> y;
};

/// Generalized information density i_s evaluated on a gamma pair.
///
/// Uses i_s = -log F_{T-1}(c) - b·u2 with b = sTρ/(1+Tρ), c = b((1+Tρ)u1 + u2),
/// which is the closed form in terms of the regularized incomplete gamma
/// function with the log Γ and log c terms cancelled analytically.
double info_density(const ChannelConfig& cfg, double s, GammaPair pair);

GammaPair sample_gamma_pair(Engine& rng, int T);

/// log p(y|x) for the block-fading Rayleigh channel.
double log_cond_pdf(const ChannelConfig& cfg, std::span<const cplx> x, std::span<const cplx> y);

/// USTM input (uniform on the sphere of radius sqrt(Tρ)) and its channel output.
BlockSample sample_ustm_block(Engine& rng, const ChannelConfig& cfg);

/// Brute-force i_s from the channel law; the input average in the denominator
/// is a Monte-Carlo mean over m_sphere fresh USTM inputs. Oracle use only.
double info_density_direct(const ChannelConfig& cfg, double s, const BlockSample& block,
                           int m_sphere, Engine& rng);

/// Normalizer mu(s) of the auxiliary output density, via mu(s) = E[exp(-i_s/s)].
double mu_factor(const ChannelConfig& cfg, double s);
double mu_factor(const ChannelConfig& cfg, double s, const QuadratureSpec& quad);

}  // namespace fblb
