#pragma once

#include <stdexcept>
#include <string>

namespace fblb {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Caller broke a structural contract (e.g. mismatched vector lengths).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Quadrature or iteration failed to converge; the message carries diagnostics.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A requested target lies outside what the bound family can reach.
// [feasible_lo, feasible_hi] is the reachable interval in the same units as the target.
class InfeasibleTarget : public std::runtime_error {
public:
    InfeasibleTarget(const std::string& what, double lo, double hi)
        : std::runtime_error(what), feasible_lo(lo), feasible_hi(hi) {}
    double feasible_lo;
    double feasible_hi;
};

class SaddleNotFound : public InfeasibleTarget {
public:
    using InfeasibleTarget::InfeasibleTarget;
};

class NoSolution : public InfeasibleTarget {
public:
    using InfeasibleTarget::InfeasibleTarget;
};

}  // namespace fblb
