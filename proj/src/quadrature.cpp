#include "fblb/quadrature.hpp"

#include "fblb/errors.hpp"
#include "fblb/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <boost/math/tools/minima.hpp>

namespace fblb {

namespace {

// Region kept around the peak of the log-integrand. e^-45 of the peak is far
// below double resolution of the total.
constexpr double kCut = 45.0;

struct Integrand {
    double a, K, b, kappa, lambda, offset;

    // log of the w-marginal (including the dw = w dy Jacobian) at y = log w
    double operator()(double y) const {
        const double w = std::exp(y);
        double v = offset + (a + 1.0) * y - w / K + log_kummer_kernel(a, kappa * w);
        if (lambda != 0.0) v += lambda * log_kummer_kernel(a, b * w);
        return v;
    }
};

struct Range {
    double lo, hi;
};

// Locates [lo, hi] where the log-integrand stays within kCut of its maximum.
Range locate(const Integrand& f, double decay, int n_scan) {
    const double center = std::log(f.K + f.a);
    double lo = center - 40.0;
    double hi = std::log(f.K + f.a + (60.0 + 4.0 * f.a) / decay) + 1.0;
    n_scan = std::max(n_scan, 16);

    for (int attempt = 0; attempt < 40; ++attempt) {
        std::vector<double> ys(n_scan), vs(n_scan);
        const double h = (hi - lo) / (n_scan - 1);
        int imax = 0;
        for (int i = 0; i < n_scan; ++i) {
            ys[i] = lo + h * i;
            vs[i] = f(ys[i]);
            if (!std::isfinite(vs[i]) && vs[i] > 0.0)
                throw NumericError("tilted integrand overflowed during range scan");
            if (vs[i] > vs[imax]) imax = i;
        }
        const double a0 = ys[std::max(imax - 1, 0)];
        const double a1 = ys[std::min(imax + 1, n_scan - 1)];
        const auto peak = boost::math::tools::brent_find_minima(
            [&](double y) { return -f(y); }, a0, a1, 26);
        const double ypk = peak.first;
        const double thr = -peak.second - kCut;

        if (vs.front() > thr) { lo -= 40.0; continue; }
        if (vs.back() > thr) { hi += 5.0; continue; }

        // outermost scan points below the threshold on either side of the peak
        int il = 0;
        for (int i = 0; i < n_scan && ys[i] < ypk; ++i)
            if (vs[i] <= thr) il = i;
        int ir = n_scan - 1;
        for (int i = n_scan - 1; i >= 0 && ys[i] > ypk; --i)
            if (vs[i] <= thr) ir = i;

        auto cross = [&](double below, double above) {
            for (int k = 0; k < 30; ++k) {
                const double mid = 0.5 * (below + above);
                (f(mid) > thr ? above : below) = mid;
            }
            return below;
        };
        return {cross(ys[il], ypk), cross(ys[ir], ypk)};
    }
    throw NumericError("could not bracket the tilted integrand");
}

}  // namespace

TiltedMoments tilted_moments(const ChannelConfig& cfg, double s, double lambda,
                             const QuadratureSpec& quad) {
    cfg.validate();
    if (!(s > 0.0)) throw DomainError("tilted_moments: s must be positive");
    if (quad.n1 < 16 || quad.n2 < 16) throw DomainError("quadrature node counts must be >= 16");
    if (cfg.T == 1) return {};

    const double a = cfg.T - 1.0;
    const double trho = cfg.T * cfg.rho;
    const double K = 1.0 + trho;
    const double b = s * trho / K;
    if (!(lambda * b < 1.0)) {
        std::ostringstream os;
        os << "tilt " << lambda << " outside the convergence region (limit " << 1.0 / b << ")";
        throw DomainError(os.str());
    }
    const double kappa = trho / K * (1.0 - lambda * s);
    // exponential decay rate of the integrand in w
    const double decay = 1.0 / K + std::min(kappa, 0.0);

    const Integrand f{a, K, b, kappa, lambda, -std::log(K) - std::lgamma(a + 1.0)};
    const Range r = locate(f, decay, quad.n2);

    const int n = quad.n1;
    const double h = (r.hi - r.lo) / (n - 1);
    std::vector<double> lw(n), d(n), c2(n), c3(n);
    double lmax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        const double y = r.lo + h * j;
        const double w = std::exp(y);
        const double kw = kappa * w;
        const double l0 = log_kummer_kernel(a, kw);
        const double lb = log_kummer_kernel(a, b * w);
        double v = f.offset + (a + 1.0) * y - w / K + l0 + lambda * lb;
        v += std::log(j == 0 || j == n - 1 ? 0.5 * h : h);
        lw[j] = v;
        lmax = std::max(lmax, v);

        // conditional raw moments of Υ₂ given w
        const double r1 = w * a / (a + 1.0) * std::exp(log_kummer_kernel(a + 1.0, kw) - l0);
        const double r2 = w * w * a / (a + 2.0) * std::exp(log_kummer_kernel(a + 2.0, kw) - l0);
        const double r3 = w * w * w * a / (a + 3.0) * std::exp(log_kummer_kernel(a + 3.0, kw) - l0);
        d[j] = -lb - b * r1;
        c2[j] = std::max(r2 - r1 * r1, 0.0);
        c3[j] = r3 - 3.0 * r1 * r2 + 2.0 * r1 * r1 * r1;
    }

    double z = 0.0, m1 = 0.0;
    for (int j = 0; j < n; ++j) {
        lw[j] = std::exp(lw[j] - lmax);
        z += lw[j];
        m1 += lw[j] * d[j];
    }
    m1 /= z;
    double m2 = 0.0, m3 = 0.0;
    const double b2 = b * b, b3 = b2 * b;
    for (int j = 0; j < n; ++j) {
        const double dd = d[j] - m1;
        m2 += lw[j] * (dd * dd + b2 * c2[j]);
        m3 += lw[j] * (dd * dd * dd + 3.0 * dd * b2 * c2[j] - b3 * c3[j]);
    }
    TiltedMoments out{lmax + std::log(z), m1, m2 / z, m3 / z, std::exp(r.lo), std::exp(r.hi)};
    if (!std::isfinite(out.log_mgf) || !std::isfinite(out.mean) || !std::isfinite(out.var) ||
        !std::isfinite(out.third)) {
        std::ostringstream os;
        os << "tilted quadrature produced non-finite output (T=" << cfg.T << ", rho=" << cfg.rho
           << ", s=" << s << ", lambda=" << lambda << ")";
        throw NumericError(os.str());
    }
    return out;
}

}  // namespace fblb
