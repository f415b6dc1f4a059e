#pragma once

// Special functions and SPD linear algebra used throughout the variational
// updates. All functions are pure and thread-safe.

#include <span>
#include <stdexcept>

#include "cuspvb/matrix.hpp"

namespace cuspvb {

// Psi(x) for x > 0; upward recurrence to x >= 8, then the asymptotic
// Bernoulli series. Absolute error below 1e-12 on [1e-3, 1e6].
double digamma(double x);

// log sum_i exp(x_i), stable for |x_i| up to ~1e4 and beyond.
double log_sum_exp(std::span<const double> xs);

struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Symmetric matrix wrapper. Construction symmetrizes (m + m^T)/2 after
// rejecting gross asymmetry; positive definiteness is established by the
// Cholesky factorization at the point of use.
class SpdMatrix {
public:
    SpdMatrix() = default;
    explicit SpdMatrix(Matrix m);
    static SpdMatrix identity(std::size_t n) { return SpdMatrix(Matrix::identity(n)); }

    std::size_t dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

private:
    Matrix m_;
};

// Lower Cholesky factor; throws NotPositiveDefinite when a pivot is not
// strictly positive. Accumulates in long double so the inverse built from it
// keeps ||A B - I||_max comfortably below 1e-8 up to condition 1e8.
Matrix cholesky_lower(const SpdMatrix& a);

// log det A given its lower Cholesky factor
double logdet_from_cholesky(const Matrix& chol_lower);

// A^{-1} via Cholesky; result exactly symmetric. Throws NotPositiveDefinite.
SpdMatrix spd_inverse(const SpdMatrix& a);

}  // namespace cuspvb
