#include "cuspvb/prior.hpp"

#include <cmath>
#include <stdexcept>

#include "cuspvb/cavi.hpp"

namespace cuspvb {

StickDraw sample_sticks(double alpha, int H, RngStream& rng) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sample_sticks: alpha must be positive");
    if (H < 2) throw std::invalid_argument("sample_sticks: H must be at least 2");
    StickDraw d;
    d.v.resize(H);
    d.omega.resize(H);
    d.pi.resize(H);
    for (int l = 0; l < H - 1; ++l) d.v[l] = rng.beta_one(alpha);
    d.v[H - 1] = 1.0;
    double remaining = 1.0;  // prod_{m<l} (1 - v_m)
    double cum = 0.0;
    for (int l = 0; l < H; ++l) {
        d.omega[l] = d.v[l] * remaining;
        remaining *= 1.0 - d.v[l];
        cum += d.omega[l];
        d.pi[l] = cum;
    }
    return d;
}

StickDraw sample_sticks(double alpha, int H, std::uint64_t seed) {
    RngStream rng(seed, stream_tag::prior);
    return sample_sticks(alpha, H, rng);
}

Matrix sample_cusp_loadings(const Hyperparams& hyper, int p, std::uint64_t seed) {
    hyper.validate();
    if (p < 1) throw std::invalid_argument("sample_cusp_loadings: p must be positive");
    RngStream rng(seed, stream_tag::prior);
    const int H = hyper.H;
    StickDraw sticks = sample_sticks(hyper.alpha, H, rng);
    Matrix lambda(p, H);
    for (int h = 0; h < H; ++h) {
        // column-level indicator; marginally each entry follows the
        // (1 - pi_h) N(0, theta0) + pi_h N(0, theta_inf) mixture
        bool spike = rng.uniform() < sticks.pi[h];
        double sd = std::sqrt(spike ? hyper.theta_inf : hyper.theta0);
        for (int j = 0; j < p; ++j) lambda(j, h) = sd * rng.normal();
    }
    return lambda;
}

double expected_pi(double alpha, int h, int H) {
    if (!(alpha > 0.0)) throw std::invalid_argument("expected_pi: alpha must be positive");
    if (h < 1 || h > H) throw std::out_of_range("expected_pi: h outside [1, H]");
    if (h == H) return 1.0;
    return 1.0 - std::pow(alpha / (1.0 + alpha), h);
}

}  // namespace cuspvb
