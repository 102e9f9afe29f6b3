#include "fblb/channel.hpp"

#include "fblb/errors.hpp"
#include "fblb/quadrature.hpp"
#include "fblb/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fblb {

void ChannelConfig::validate() const {
    if (T < 1) throw DomainError("T must be >= 1");
    if (L < 1) throw DomainError("L must be >= 1");
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("rho must be positive and finite");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ChannelConfig ChannelConfig::from_db(int T, int L, double snr_db) {
    ChannelConfig c{T, L, db_to_linear(snr_db)};
    c.validate();
    return c;
}

double info_density(const ChannelConfig& cfg, double s, GammaPair pair) {
    if (cfg.T == 1) return 0.0;
    const double trho = cfg.T * cfg.rho;
    const double K = 1.0 + trho;
    const double b = s * trho / K;
    return -log_kummer_kernel(cfg.T - 1.0, b * (K * pair.u1 + pair.u2)) - b * pair.u2;
}

GammaPair sample_gamma_pair(Engine& rng, int T) {
    GammaPair p;
    p.u1 = -std::log(uniform_open(rng));
    // Products of up to 16 uniforms stay above 2^-848, so chunking keeps them normal.
    int left = T - 1;
    while (left > 0) {
        const int m = left < 16 ? left : 16;
        double prod = 1.0;
        for (int k = 0; k < m; ++k) prod *= uniform_open(rng);
        p.u2 -= std::log(prod);
        left -= m;
    }
    return p;
}

double log_cond_pdf(const ChannelConfig& cfg, std::span<const cplx> x, std::span<const cplx> y) {
    if (x.size() != static_cast<std::size_t>(cfg.T) || y.size() != x.size())
        throw ContractViolation("log_cond_pdf: x and y must both have length T");
    double nx = 0.0, ny = 0.0;
    cplx yx{0.0, 0.0};
    for (std::size_t k = 0; k < x.size(); ++k) {
        nx += std::norm(x[k]);
        ny += std::norm(y[k]);
        yx += std::conj(y[k]) * x[k];
    }
    return -cfg.T * std::log(std::numbers::pi) - std::log1p(nx) - ny + std::norm(yx) / (1.0 + nx);
}

namespace {

void sample_sphere(Engine& rng, double radius, std::vector<cplx>& g) {
    double norm2 = 0.0;
    for (auto& v : g) {
        v = complex_normal(rng);
        norm2 += std::norm(v);
    }
    const double scale = radius / std::sqrt(norm2);
    for (auto& v : g) v *= scale;
}

}  // namespace

BlockSample sample_ustm_block(Engine& rng, const ChannelConfig& cfg) {
    BlockSample b;
    b.x.resize(cfg.T);
    sample_sphere(rng, std::sqrt(cfg.T * cfg.rho), b.x);
    const cplx h = complex_normal(rng);
    b.y.resize(cfg.T);
    for (int k = 0; k < cfg.T; ++k) b.y[k] = h * b.x[k] + complex_normal(rng);
    return b;
}

double info_density_direct(const ChannelConfig& cfg, double s, const BlockSample& block,
                           int m_sphere, Engine& rng) {
    if (m_sphere < 1000) throw ContractViolation("info_density_direct: m_sphere must be >= 1000");
    const double radius = std::sqrt(cfg.T * cfg.rho);
    std::vector<double> terms(m_sphere);
    std::vector<cplx> xt(cfg.T);
    for (int j = 0; j < m_sphere; ++j) {
        sample_sphere(rng, radius, xt);
        terms[j] = s * log_cond_pdf(cfg, xt, block.y);
    }
    const double log_den = log_sum_exp(terms) - std::log(static_cast<double>(m_sphere));
    return s * log_cond_pdf(cfg, block.x, block.y) - log_den;
}

double mu_factor(const ChannelConfig& cfg, double s, const QuadratureSpec& quad) {
    if (!(s > 0.0)) throw DomainError("mu_factor: s must be positive");
    return std::exp(tilted_moments(cfg, s, 1.0 / s, quad).log_mgf);
}

double mu_factor(const ChannelConfig& cfg, double s) { return mu_factor(cfg, s, QuadratureSpec{}); }

}  // namespace fblb
