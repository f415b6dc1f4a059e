#pragma once

// Sampling the data covariance Omega = Lambda Lambda^T + diag(sigma^2) from
// a fitted variational distribution, the correlation transform, and the
// mean-squared-deviation metric against a sample correlation matrix.

#include <cstdint>
#include <vector>

#include "cuspvb/cavi.hpp"
#include "cuspvb/matrix.hpp"

namespace cuspvb {

struct CovarianceDraws {
    std::vector<Matrix> draws;  // p-by-p, each symmetric positive definite
    std::uint64_t seed = 0;
    int count() const { return static_cast<int>(draws.size()); }
};

// Independent draws: lambda_j ~ N(mu_lambda[j], V_lambda[j]) per row,
// sigma_j^2 ~ InvGa(A_sigma, B_sigma[j]). Each draw consumes its own RNG
// stream indexed by draw number, so a fixed seed reproduces the sample
// bit-for-bit regardless of generation order.
CovarianceDraws sample_omega(const VariationalState& state, int count, std::uint64_t seed);

// Omega* = D^{-1/2} Omega D^{-1/2} with D = diag(Omega); exact unit diagonal.
Matrix to_correlation(const Matrix& omega);

// Per-entry Monte Carlo average of (corr(draw) - S)^2 over the draws.
Matrix squared_deviation_matrix(const CovarianceDraws& draws, const Matrix& s);

// Average of the squared-deviation matrix over the upper triangle including
// the diagonal: sum_{j<=q} E(Omega*_jq - S_jq)^2 / (p(p+1)/2).
double mse_vs_sample_correlation(const CovarianceDraws& draws, const Matrix& s);

}  // namespace cuspvb
