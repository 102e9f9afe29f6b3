#include "fblb/rng.hpp"

#include <cmath>
#include <numbers>

namespace fblb {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Engine make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t st = seed;
    std::uint64_t k = splitmix64(st);
    st = k ^ (stream * 0xd1b54a32d192ed03ULL);
    splitmix64(st);
    return Engine(splitmix64(st));
}

double standard_normal(Engine& g) {
    const double u1 = uniform_open(g);
    const double u2 = uniform_open(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> complex_normal(Engine& g) {
    const double u1 = uniform_open(g);
    const double u2 = uniform_open(g);
    // |z|^2 = -log u1 is Exp(1); the phase is uniform
    return std::polar(std::sqrt(-std::log(u1)), 2.0 * std::numbers::pi * u2);
}

}  // namespace fblb
