#include "cuspvb/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cuspvb {

namespace {

// splitmix64 finalizer; decorrelates nearby (seed, tag, index) triples
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) ^ index);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index)
    : eng_(mix(mix(mix(seed) ^ tag) ^ index)) {}

double RngStream::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    double u;
    do {
        u = uniform();
    } while (u == 0.0);
    return u;
}

double RngStream::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw std::invalid_argument("gamma: shape and scale must be positive");
    std::gamma_distribution<double> g(shape, scale);
    return g(eng_);
}

double RngStream::inv_gamma(double shape, double rate) {
    return 1.0 / gamma(shape, 1.0 / rate);
}

double RngStream::beta_one(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("beta_one: alpha must be positive");
    return 1.0 - std::pow(uniform_pos(), 1.0 / alpha);
}

}  // namespace cuspvb
