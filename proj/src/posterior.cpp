#include "cuspvb/posterior.hpp"

#include <cmath>
#include <stdexcept>

#include "cuspvb/kernels.hpp"
#include "cuspvb/numerics.hpp"
#include "cuspvb/rng.hpp"

namespace cuspvb {

namespace {

// Cholesky that tolerates a semi-definite input (zero pivots produce zero
// columns, so a degenerate direction is sampled at its mean) but rejects
// indefinite ones.
Matrix psd_cholesky(const Matrix& a, int row_index) {
    const int n = static_cast<int>(a.rows());
    double scale = max_abs(a);
    const double tol = 1e-12 * std::max(scale, 1e-300);
    Matrix l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d < -tol)
            throw NotPositiveDefinite("sample_omega: V_lambda[" +
                                      std::to_string(row_index) + "] is indefinite");
        if (d <= tol) continue;  // degenerate direction, leave the column zero
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

}  // namespace

CovarianceDraws sample_omega(const VariationalState& state, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_omega: count must be >= 1");
    const int p = state.p(), H = state.H();
    if (!(state.A_sigma > 0.0)) throw std::invalid_argument("sample_omega: unfitted state");

    std::vector<Matrix> chol(p);
    for (int j = 0; j < p; ++j) chol[j] = psd_cholesky(state.V_lambda[j].matrix(), j);

    CovarianceDraws out;
    out.seed = seed;
    out.draws.reserve(count);
    Matrix lambda(p, H);
    std::vector<double> z(H);
    for (int d = 0; d < count; ++d) {
        RngStream rng(seed, stream_tag::omega, static_cast<std::uint64_t>(d));
        for (int j = 0; j < p; ++j) {
            for (int h = 0; h < H; ++h) z[h] = rng.normal();
            double* row = lambda.row(j);
            const Matrix& l = chol[j];
            for (int h = 0; h < H; ++h)
                row[h] = state.mu_lambda(j, h) + kernels::dot(l.row(h), z.data(), h + 1);
        }
        Matrix omega(p, p);
        for (int j = 0; j < p; ++j)
            for (int q = 0; q <= j; ++q) {
                double v = kernels::dot(lambda.row(j), lambda.row(q), H);
                omega(j, q) = omega(q, j) = v;
            }
        for (int j = 0; j < p; ++j)
            omega(j, j) += rng.inv_gamma(state.A_sigma, state.B_sigma[j]);
        out.draws.push_back(std::move(omega));
    }
    return out;
}

Matrix to_correlation(const Matrix& omega) {
    const std::size_t p = omega.rows();
    if (omega.cols() != p) throw std::invalid_argument("to_correlation: matrix not square");
    std::vector<double> inv_sd(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (!(omega(j, j) > 0.0))
            throw std::invalid_argument("to_correlation: diagonal entry " +
                                        std::to_string(j + 1) + " not positive");
        inv_sd[j] = 1.0 / std::sqrt(omega(j, j));
    }
    Matrix corr(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        corr(j, j) = 1.0;
        for (std::size_t q = 0; q < j; ++q) {
            double r = omega(j, q) * inv_sd[j] * inv_sd[q];
            r = std::clamp(r, -1.0, 1.0);
            corr(j, q) = corr(q, j) = r;
        }
    }
    return corr;
}

Matrix squared_deviation_matrix(const CovarianceDraws& draws, const Matrix& s) {
    if (draws.draws.empty())
        throw std::invalid_argument("squared_deviation_matrix: no draws");
    const std::size_t p = s.rows();
    if (s.cols() != p) throw std::invalid_argument("squared_deviation_matrix: S not square");
    if (draws.draws.front().rows() != p)
        throw std::invalid_argument("squared_deviation_matrix: dimension mismatch between draws and S");

    Matrix acc(p, p);
    for (const Matrix& omega : draws.draws) {
        Matrix corr = to_correlation(omega);
        for (std::size_t k = 0; k < acc.size(); ++k) {
            double d = corr.data()[k] - s.data()[k];
            acc.data()[k] += d * d;
        }
    }
    const double inv = 1.0 / static_cast<double>(draws.draws.size());
    for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] *= inv;
    return acc;
}

double mse_vs_sample_correlation(const CovarianceDraws& draws, const Matrix& s) {
    Matrix dev = squared_deviation_matrix(draws, s);
    const std::size_t p = dev.rows();
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t q = j; q < p; ++q) total += dev(j, q);
    return total / (0.5 * static_cast<double>(p) * static_cast<double>(p + 1));
}

}  // namespace cuspvb
