#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cuspvb/posterior.hpp"
#include "oracles.hpp"

using namespace cuspvb;

namespace {

// a small hand-built fitted-looking state
VariationalState crafted_state() {
    VariationalState s;
    const int p = 3, H = 2;
    s.mu_lambda = Matrix(p, H);
    s.mu_lambda(0, 0) = 0.9;
    s.mu_lambda(0, 1) = -0.2;
    s.mu_lambda(1, 0) = -0.6;
    s.mu_lambda(1, 1) = 0.4;
    s.mu_lambda(2, 0) = 0.1;
    s.mu_lambda(2, 1) = 1.1;
    for (int j = 0; j < p; ++j) {
        Matrix v(H, H);
        v(0, 0) = 0.04 + 0.01 * j;
        v(1, 1) = 0.05;
        v(0, 1) = v(1, 0) = 0.005;
        s.V_lambda.emplace_back(v);
    }
    s.mu_eta = Matrix(4, H);
    s.V_eta = SpdMatrix::identity(H);
    s.A_sigma = 12.0;
    s.B_sigma = {3.0, 4.0, 5.0};
    s.kappa = Matrix(H, H);
    s.kappa(0, 1) = 1.0;
    s.kappa(1, 0) = 1.0;
    s.A_v = {1.5};
    s.B_v = {4.0};
    return s;
}

}  // namespace

TEST_CASE("zero loadings covariance gives diagonal draws") {
    VariationalState s = crafted_state();
    for (auto& v : s.V_lambda) v = SpdMatrix(Matrix(2, 2));
    s.mu_lambda = Matrix(3, 2, 0.0);
    CovarianceDraws d = sample_omega(s, 20, 1);
    for (const auto& omega : d.draws)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (i == j)
                    CHECK(omega(i, i) > 0.0);
                else
                    CHECK(omega(i, j) == 0.0);
            }
}

TEST_CASE("an indefinite row covariance is rejected") {
    VariationalState s = crafted_state();
    Matrix bad(2, 2);
    bad(0, 0) = 1.0;
    bad(1, 1) = -1.0;
    s.V_lambda[1] = SpdMatrix(bad);
    CHECK_THROWS_AS(sample_omega(s, 2, 1), NotPositiveDefinite);
}

TEST_CASE("draws are bit-reproducible and order-independent by seed") {
    VariationalState s = crafted_state();
    CovarianceDraws a = sample_omega(s, 10, 33);
    CovarianceDraws b = sample_omega(s, 10, 33);
    for (int d = 0; d < 10; ++d) CHECK(max_abs_diff(a.draws[d], b.draws[d]) == 0.0);
    // first draws are unchanged when more are requested (per-draw streams)
    CovarianceDraws c = sample_omega(s, 3, 33);
    for (int d = 0; d < 3; ++d) CHECK(max_abs_diff(a.draws[d], c.draws[d]) == 0.0);
    CovarianceDraws e = sample_omega(s, 10, 34);
    CHECK(max_abs_diff(a.draws[0], e.draws[0]) > 0.0);
}

TEST_CASE("Monte Carlo moments of the diagonal match the analytic value") {
    VariationalState s = crafted_state();
    const int draws = 30000;
    CovarianceDraws d = sample_omega(s, draws, 7);
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0, sq = 0.0;
        for (const auto& omega : d.draws) {
            mean += omega(j, j);
            sq += omega(j, j) * omega(j, j);
        }
        mean /= draws;
        double var = (sq - draws * mean * mean) / (draws - 1.0);
        double se = std::sqrt(var / draws);
        double mu_sq = 0.0;
        for (int h = 0; h < 2; ++h) mu_sq += s.mu_lambda(j, h) * s.mu_lambda(j, h);
        double trace_v = s.V_lambda[j](0, 0) + s.V_lambda[j](1, 1);
        double expect = mu_sq + trace_v + s.B_sigma[j] / (s.A_sigma - 1.0);
        CAPTURE(j);
        CHECK(std::fabs(mean - expect) <= 3.0 * se);
    }
}

TEST_CASE("every covariance draw is symmetric positive definite") {
    VariationalState s = crafted_state();
    CovarianceDraws d = sample_omega(s, 50, 3);
    for (const auto& omega : d.draws) CHECK_NOTHROW(cholesky_lower(SpdMatrix(omega)));
}

TEST_CASE("to_correlation basics") {
    Matrix diag(3, 3);
    diag(0, 0) = 4.0;
    diag(1, 1) = 9.0;
    diag(2, 2) = 0.25;
    CHECK(max_abs_diff(to_correlation(diag), Matrix::identity(3)) == 0.0);

    Matrix m(2, 2);
    m(0, 0) = m(1, 1) = 4.0;
    m(0, 1) = m(1, 0) = 2.0;
    Matrix c = to_correlation(m);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(1, 1) == 1.0);
    CHECK(c(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix bad(2, 2);
    bad(0, 0) = 1.0;
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(to_correlation(bad), std::invalid_argument);
}

TEST_CASE("to_correlation is invariant to positive diagonal rescaling") {
    Matrix a = oracle::random_spd(5, 100.0, 8);
    std::vector<double> d = {0.3, 2.0, 5.5, 0.01, 1.7};
    Matrix scaled(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) scaled(i, j) = d[i] * a(i, j) * d[j];
    CHECK(max_abs_diff(to_correlation(a), to_correlation(scaled)) <= 1e-13);
}

TEST_CASE("correlation entries stay within [-1, 1] with exact unit diagonal") {
    VariationalState s = crafted_state();
    CovarianceDraws d = sample_omega(s, 100, 5);
    for (const auto& omega : d.draws) {
        Matrix c = to_correlation(omega);
        for (int i = 0; i < 3; ++i) {
            CHECK(c(i, i) == 1.0);
            for (int j = 0; j < 3; ++j) {
                CHECK(c(i, j) >= -1.0);
                CHECK(c(i, j) <= 1.0);
                CHECK(c(i, j) == c(j, i));
            }
        }
    }
}

TEST_CASE("mse is zero when every draw equals the target") {
    // diagonal covariance draws -> identity correlation; target identity
    VariationalState s = crafted_state();
    for (auto& v : s.V_lambda) v = SpdMatrix(Matrix(2, 2));
    s.mu_lambda = Matrix(3, 2, 0.0);
    CovarianceDraws d = sample_omega(s, 5, 2);
    CHECK(mse_vs_sample_correlation(d, Matrix::identity(3)) == 0.0);
}

TEST_CASE("mse matches the hand-computed two-draw example") {
    CovarianceDraws d;
    d.seed = 0;
    Matrix omega1(2, 2), omega2(2, 2);
    omega1(0, 0) = omega1(1, 1) = 1.0;
    omega1(0, 1) = omega1(1, 0) = 0.4;
    omega2(0, 0) = omega2(1, 1) = 1.0;
    omega2(0, 1) = omega2(1, 0) = 0.6;
    d.draws = {omega1, omega2};
    Matrix s = Matrix::identity(2);
    s(0, 1) = s(1, 0) = 0.5;
    // per-entry mean squared deviation is 0.01 on the off-diagonal,
    // averaged over p(p+1)/2 = 3 upper entries
    CHECK(mse_vs_sample_correlation(d, s) == doctest::Approx(1.0 / 300.0).epsilon(1e-12));

    std::swap(d.draws[0], d.draws[1]);
    CHECK(mse_vs_sample_correlation(d, s) == doctest::Approx(1.0 / 300.0).epsilon(1e-12));

    CHECK_THROWS_AS(mse_vs_sample_correlation(d, Matrix::identity(3)),
                    std::invalid_argument);
    CovarianceDraws empty;
    CHECK_THROWS_AS(mse_vs_sample_correlation(empty, s), std::invalid_argument);
}

TEST_CASE("per-entry second moment dominates the squared first moment") {
    VariationalState s = crafted_state();
    CovarianceDraws d = sample_omega(s, 500, 9);
    Matrix target = Matrix::identity(3);
    Matrix second = squared_deviation_matrix(d, target);
    Matrix first(3, 3);
    for (const auto& omega : d.draws) {
        Matrix c = to_correlation(omega);
        for (std::size_t k = 0; k < first.size(); ++k)
            first.data()[k] += (c.data()[k] - target.data()[k]) / d.count();
    }
    for (std::size_t k = 0; k < first.size(); ++k)
        CHECK(second.data()[k] >= first.data()[k] * first.data()[k] - 1e-12);
}

TEST_CASE("doubling the draw count moves the mse by less than three standard errors") {
    VariationalState s = crafted_state();
    Matrix target = Matrix::identity(3);
    auto mse_and_se = [&](int count, std::uint64_t seed) {
        CovarianceDraws d = sample_omega(s, count, seed);
        // per-draw statistic: upper-triangle average of squared deviations
        double sum = 0.0, sq = 0.0;
        for (const auto& omega : d.draws) {
            Matrix c = to_correlation(omega);
            double x = 0.0;
            int cells = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j) {
                    double dev = c(i, j) - target(i, j);
                    x += dev * dev;
                    ++cells;
                }
            x /= cells;
            sum += x;
            sq += x * x;
        }
        double mean = sum / count;
        double var = (sq - count * mean * mean) / (count - 1.0);
        return std::pair{mean, std::sqrt(var / count)};
    };
    auto [m1, se1] = mse_and_se(2000, 21);
    auto [m2, se2] = mse_and_se(4000, 22);
    CHECK(std::fabs(m1 - m2) <= 3.0 * std::sqrt(se1 * se1 + se2 * se2));
}
