// Scalar reference kernels. These define the semantics the vectorized
// variants are tested against.

#include "cuspvb/kernels.hpp"

namespace cuspvb::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_squares_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * x[i];
}

extern const Ops scalar_ops = {dot_scalar, sum_squares_scalar, axpy_scalar,
                               add_squares_scalar};

}  // namespace cuspvb::kernels::detail
