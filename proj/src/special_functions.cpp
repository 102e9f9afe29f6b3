#include "fblb/special_functions.hpp"

#include "fblb/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace fblb {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::atomic<double> g_inc_gamma_fault{0.0};

double fault_shift() {
    const double f = g_inc_gamma_fault.load(std::memory_order_relaxed);
    return f == 0.0 ? 0.0 : std::log1p(f);
}

struct LowerGammaLogs {
    double log_kernel;  // log F_a(x)
    double log_p;       // log P(a, x)
};

// Both logs for a > 0, x > 0, each formed inside its own branch so neither is
// reconstructed from the other through a large lgamma difference.
LowerGammaLogs lower_gamma_logs(double a, double x) {
    const double lga1 = std::lgamma(a + 1.0);
    if (x < a + 1.0) {
        // F_a(x) = e^{-x} Σ x^k / (a+1)_k
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 100000; ++k) {
            term *= x / (a + k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        const double lk = -x + std::log(sum);
        return {lk, lk + a * std::log(x) - lga1};
    }
    // Upper tail Q(a, x) by modified Lentz on the Legendre continued fraction.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    const double log_q = -x + a * std::log(x) - std::lgamma(a) + std::log(h);
    const double log_p = log1m_exp(log_q);
    return {lga1 - a * std::log(x) + log_p, log_p};
}

// log F_a(-y), y > 0. F_a(-y) = Σ_k y^k/k! · a/(a+k): all terms positive.
double log_kernel_negative(double a, double y) {
    if (y < 40.0) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 100000; ++k) {
            term *= y / k;
            const double t = term * a / (a + k);
            sum += t;
            if (k > y && t < sum * 1e-17) break;
        }
        return std::log(sum);
    }
    // Sum Poisson(y) weights outward from the mode to keep everything O(1).
    const double mode = std::floor(y);
    const double log_pmode = -y + mode * std::log(y) - std::lgamma(mode + 1.0);
    double sum = a / (a + mode);
    double p = 1.0;
    for (double k = mode + 1.0;; k += 1.0) {
        p *= y / k;
        const double t = p * a / (a + k);
        sum += t;
        if (t < sum * 1e-17) break;
    }
    p = 1.0;
    for (double k = mode; k > 0.0; k -= 1.0) {
        p *= k / y;
        const double t = p * a / (a + k - 1.0);
        sum += t;
        if (t < sum * 1e-17) break;
    }
    return y + log_pmode + std::log(sum);
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive, got " + std::to_string(x));
    return std::lgamma(x);
}

double log_kummer_kernel(double a, double x) {
    if (!(a >= 0.0)) throw DomainError("log_kummer_kernel: shape must be nonnegative");
    if (std::isnan(x)) return x;
    if (a == 0.0 || x == 0.0) return 0.0;
    if (x > 0.0) {
        if (std::isinf(x)) return -kInf;
        return lower_gamma_logs(a, x).log_kernel + fault_shift();
    }
    return log_kernel_negative(a, -x) + fault_shift();
}

double log_reg_lower_inc_gamma(double a, double x) {
    if (!(a >= 0.0) || !(x >= 0.0))
        throw DomainError("reg_lower_inc_gamma: requires a >= 0 and x >= 0");
    if (a == 0.0) return 0.0;
    if (x == 0.0) return -kInf;
    if (std::isinf(x)) return 0.0;
    return std::min(0.0, lower_gamma_logs(a, x).log_p + fault_shift());
}

double reg_lower_inc_gamma(double a, double x) {
    return std::exp(log_reg_lower_inc_gamma(a, x));
}

double digamma(double x) {
    if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
    return boost::math::digamma(x);
}

double hyp2f1_1b(double b, double c, double z) {
    if (!(b > 0.0)) throw DomainError("hyp2f1_1b: b must be positive");
    if (std::abs(c - (b + 1.0)) > 1e-12 * std::max(1.0, std::abs(c)))
        throw DomainError("hyp2f1_1b: only c = b + 1 is supported");
    if (!(z >= 0.0) || !(z < 1.0)) throw DomainError("hyp2f1_1b: z must lie in [0, 1)");
    if (z == 0.0) return 1.0;

    const double w = 1.0 - z;
    if (z > 0.95 && b * w < 2.0) {
        // Logarithmic expansion about z = 1 (the c = a + b degenerate case):
        // b Σ (b)_k/k! [ψ(k+1) − ψ(b+k) − log(1−z)] (1−z)^k
        const double log_w = std::log1p(-z);
        double coef = 1.0;
        double psi_k1 = -std::numbers::egamma_v<double>;
        double psi_bk = boost::math::digamma(b);
        double sum = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const double t = coef * (psi_k1 - psi_bk - log_w);
            sum += t;
            if (k > 2 && std::abs(t) < 1e-17 * std::abs(sum)) break;
            coef *= (b + k) / (k + 1.0) * w;
            psi_k1 += 1.0 / (k + 1.0);
            psi_bk += 1.0 / (b + k);
        }
        return b * sum;
    }
    // Direct series: the k-th coefficient of 2F1(1, b; b+1; z) is b/(b+k).
    double zk = 1.0, sum = 0.0;
    for (int k = 0; k < 10000000; ++k) {
        const double t = b / (b + k) * zk;
        sum += t;
        if (t * z < 1e-17 * sum * w) break;
        zk *= z;
    }
    return sum;
}

double q_func(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inv(double eps) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw DomainError("q_inv: eps must lie in (0, 1)");
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eps);
}

double q_scaled(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) return std::exp(0.5 * x * x) - q_scaled(-x);
    if (x < 3.0) return 0.5 * std::exp(0.5 * x * x) * std::erfc(x / std::numbers::sqrt2);
    // Mills ratio Q/φ = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated by Lentz.
    constexpr double tiny = 1e-300;
    double f = x, c = x, d = 0.0;
    for (int n = 1; n < 5000; ++n) {
        d = x + n * d;
        if (std::abs(d) < tiny) d = tiny;
        c = x + n / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = c * d;
        f *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return 1.0 / (f * std::sqrt(2.0 * std::numbers::pi));
}

double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (m == -kInf || std::isinf(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double log1m_exp(double x) {
    if (x > 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

namespace fault {
void set_inc_gamma_perturbation(double rel) { g_inc_gamma_fault.store(rel); }
double inc_gamma_perturbation() { return g_inc_gamma_fault.load(); }
}  // namespace fault

}  // namespace fblb
