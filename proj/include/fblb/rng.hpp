#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace fblb {

// mt19937_64's output sequence is fixed by the standard, so every platform
// produces the same bits for the same seed. Distributions are hand-rolled below
// for the same reason (std:: distributions are implementation-defined).
using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

/// Engine for sub-stream `stream` of master `seed`. Streams are keyed by batch
/// index, never by thread, which keeps results independent of the worker count.
Engine make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform on (0, 1], 53 random bits.
inline double uniform_open(Engine& g) {
    return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal via Box–Muller; one draw per call, the partner is discarded.
double standard_normal(Engine& g);

/// Circularly symmetric CN(0, 1): both Box–Muller outputs used as one complex draw.
std::complex<double> complex_normal(Engine& g);

}  // namespace fblb
