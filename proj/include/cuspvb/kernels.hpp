#pragma once

// Dense reduction/update primitives underlying the linear algebra. Every
// kernel has a scalar reference implementation; on x86-64 an AVX2+FMA variant
// is compiled in and selected at runtime when the CPU supports it. The two
// paths are equivalence-tested against each other, so either may serve any
// caller. Override the automatic choice with select() or the CUSPVB_ISA
// environment variable (values: "scalar", "avx2").

#include <cstddef>
#include <string_view>

namespace cuspvb::kernels {

enum class Isa { scalar, avx2 };

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*add_squares)(const double*, double*, std::size_t);
};

bool available(Isa isa) noexcept;
const Ops& ops_for(Isa isa);  // throws std::invalid_argument if unavailable
const Ops& ops() noexcept;    // active table
Isa active() noexcept;
void select(Isa isa);         // throws if unavailable
std::string_view name(Isa isa) noexcept;

// sum_i a_i * b_i
inline double dot(const double* a, const double* b, std::size_t n) {
    return ops().dot(a, b, n);
}

// sum_i x_i^2
inline double sum_squares(const double* x, std::size_t n) {
    return ops().sum_squares(x, n);
}

// y_i += a * x_i
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    ops().axpy(a, x, y, n);
}

// y_i += x_i^2
inline void add_squares(const double* x, double* y, std::size_t n) {
    ops().add_squares(x, y, n);
}

}  // namespace cuspvb::kernels
