#include "cuspvb/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cuspvb {

double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: requires x > 0");
    double acc = 0.0;
    while (x < 8.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic series, Horner in 1/x^2 with coefficients B_2k/(2k) down from k=7
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = 1.0 / 12.0;
    series = series * inv2 - 691.0 / 32760.0;
    series = series * inv2 + 1.0 / 132.0;
    series = series * inv2 - 1.0 / 240.0;
    series = series * inv2 + 1.0 / 252.0;
    series = series * inv2 - 1.0 / 120.0;
    series = series * inv2 + 1.0 / 12.0;
    return acc + std::log(x) - 0.5 * inv - series * inv2;
}

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    double m = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

SpdMatrix::SpdMatrix(Matrix m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("SpdMatrix: matrix not square");
    double scale = max_abs(m);
    double asym = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            asym = std::max(asym, std::fabs(m(i, j) - m(j, i)));
    if (asym > 1e-12 * scale)
        throw std::invalid_argument("SpdMatrix: matrix not symmetric");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            double v = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = v;
        }
    m_ = std::move(m);
}

namespace {

// lower Cholesky factor in long double; throws on a non-positive pivot
std::vector<long double> cholesky_ld(const Matrix& a) {
    const std::size_t n = a.rows();
    std::vector<long double> L(n * n, 0.0L);
    for (std::size_t j = 0; j < n; ++j) {
        long double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
        if (!(d > 0.0L))
            throw NotPositiveDefinite("Cholesky pivot " + std::to_string(j) +
                                      " is not positive");
        L[j * n + j] = sqrtl(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            long double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
            L[i * n + j] = s / L[j * n + j];
        }
    }
    return L;
}

}  // namespace

Matrix cholesky_lower(const SpdMatrix& a) {
    const std::size_t n = a.dim();
    auto L = cholesky_ld(a.matrix());
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = static_cast<double>(L[i * n + j]);
    return out;
}

double logdet_from_cholesky(const Matrix& chol_lower) {
    double s = 0.0;
    for (std::size_t i = 0; i < chol_lower.rows(); ++i) s += std::log(chol_lower(i, i));
    return 2.0 * s;
}

SpdMatrix spd_inverse(const SpdMatrix& a) {
    const std::size_t n = a.dim();
    auto L = cholesky_ld(a.matrix());

    // invert the lower factor by forward substitution
    std::vector<long double> Li(n * n, 0.0L);
    for (std::size_t j = 0; j < n; ++j) {
        Li[j * n + j] = 1.0L / L[j * n + j];
        for (std::size_t i = j + 1; i < n; ++i) {
            long double s = 0.0L;
            for (std::size_t k = j; k < i; ++k) s += L[i * n + k] * Li[k * n + j];
            Li[i * n + j] = -s / L[i * n + i];
        }
    }

    // A^{-1} = Li^T Li, filled symmetrically
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            long double s = 0.0L;
            for (std::size_t k = i; k < n; ++k) s += Li[k * n + i] * Li[k * n + j];
            out(i, j) = out(j, i) = static_cast<double>(s);
        }
    return SpdMatrix(std::move(out));
}

}  // namespace cuspvb
