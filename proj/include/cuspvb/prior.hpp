#pragma once

// Cumulative shrinkage process prior: stick-breaking construction, prior
// predictive sampling of loadings, and the analytic mean of the cumulative
// spike weights. Used for prior checks and property tests, not inference.

#include <cstdint>
#include <vector>

#include "cuspvb/matrix.hpp"
#include "cuspvb/rng.hpp"

namespace cuspvb {

struct Hyperparams;  // cavi.hpp

// One realization of the stick-breaking weights: fractions v (v_H = 1),
// weights omega_l = v_l prod_{m<l}(1 - v_m), and cumulative pi_h =
// sum_{l<=h} omega_l. pi is non-decreasing with pi_H = 1.
struct StickDraw {
    std::vector<double> v;
    std::vector<double> omega;
    std::vector<double> pi;
};

StickDraw sample_sticks(double alpha, int H, RngStream& rng);
StickDraw sample_sticks(double alpha, int H, std::uint64_t seed);

// Prior draw of a p-by-H loadings matrix: one stick realization, per column
// a spike/slab indicator with spike probability pi_h, entries i.i.d. from
// the selected component.
Matrix sample_cusp_loadings(const Hyperparams& hyper, int p, std::uint64_t seed);

// E[pi_h] = 1 - (alpha/(1+alpha))^h for h < H, and exactly 1 at h = H.
// h is 1-indexed.
double expected_pi(double alpha, int h, int H);

}  // namespace cuspvb
