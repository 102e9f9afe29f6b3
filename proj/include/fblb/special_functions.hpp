#pragma once

#include <span>

namespace fblb {

/// log Γ(x) for x > 0.
double log_gamma(double x);

/// Regularized lower incomplete gamma P(a, x) = γ(a, x)/Γ(a). P(0, x) is taken as 1.
double reg_lower_inc_gamma(double a, double x);
double log_reg_lower_inc_gamma(double a, double x);

/// log of the Kummer kernel F_a(x) = a ∫_0^1 t^{a-1} e^{-x t} dt = 1F1(a; a+1; -x).
///
/// Defined for a ≥ 0 and every real x (F_0 ≡ 1). For x > 0 it equals
/// Γ(a+1) P(a, x) / x^a, so it carries the incomplete gamma function without the
/// underflow of P at small x. Negative x is needed for tilts beyond s·τ = 1.
double log_kummer_kernel(double a, double x);

double digamma(double x);

/// 2F1(1, b; c; z) restricted to c = b + 1 and 0 ≤ z < 1.
double hyp2f1_1b(double b, double c, double z);

/// Gaussian tail Q(x) and its inverse.
double q_func(double x);
double q_inv(double eps);

/// e^{x²/2} Q(x), finite for every x ≥ 0.
double q_scaled(double x);

double log_add_exp(double a, double b);
double log_sum_exp(std::span<const double> v);
/// log(1 - e^x) for x ≤ 0.
double log1m_exp(double x);

namespace fault {
/// Multiplies every incomplete-gamma evaluation by (1 + rel). Used by selftest to
/// prove that the invariant battery notices a broken kernel. Zero disables it.
void set_inc_gamma_perturbation(double rel);
double inc_gamma_perturbation();
}  // namespace fault

}  // namespace fblb
