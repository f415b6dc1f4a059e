#include "cuspvb/matrix.hpp"

#include <cassert>
#include <cmath>

#include "cuspvb/kernels.hpp"

namespace cuspvb {

Matrix matmul(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.rows());
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t t = 0; t < a.cols(); ++t)
            kernels::axpy(a(i, t), b.row(t), ci, b.cols());
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    assert(a.rows() == b.rows());
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (std::size_t r = 0; r < a.cols(); ++r)
            kernels::axpy(ai[r], bi, c.row(r), b.cols());
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_scaled_outer(Matrix& c, const double* x, double scale) {
    assert(c.rows() == c.cols());
    for (std::size_t i = 0; i < c.rows(); ++i)
        kernels::axpy(scale * x[i], x, c.row(i), c.cols());
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    return kernels::dot(a.data(), b.data(), a.size());
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    assert(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
    return m;
}

}  // namespace cuspvb
