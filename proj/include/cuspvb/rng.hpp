#pragma once

// Deterministic stream-based randomness. Every logical consumer (a restart's
// initialization, a posterior draw, a simulation) owns a stream derived from
// (seed, tag, index), so draws are reproducible regardless of the order in
// which streams are consumed and streams never share state.

#include <cstdint>
#include <random>

namespace cuspvb {

namespace stream_tag {
inline constexpr std::uint64_t init = 0x696e6974;       // restart initializations
inline constexpr std::uint64_t omega = 0x6f6d6567;      // posterior covariance draws
inline constexpr std::uint64_t sim_truth = 0x74727574;  // synthetic loading signs
inline constexpr std::uint64_t sim_data = 0x73696d64;   // synthetic factor scores/noise
inline constexpr std::uint64_t prior = 0x7072696f;      // prior-predictive sampling
}  // namespace stream_tag

// Child seed for the index-th independent consumer under a master seed.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index);

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

    std::uint64_t next_u64() { return eng_(); }

    double uniform();      // [0, 1)
    double uniform_pos();  // (0, 1)
    double normal() { return normal_(eng_); }

    // shape/scale parameterization
    double gamma(double shape, double scale);

    // reciprocal of a Gamma(shape, 1/rate) draw
    double inv_gamma(double shape, double rate);

    // Beta(1, alpha) by inverse CDF: 1 - U^(1/alpha)
    double beta_one(double alpha);

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_;
};

}  // namespace cuspvb
