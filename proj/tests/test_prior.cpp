#include <doctest.h>

#include <cmath>
#include <vector>

#include "cuspvb/cavi.hpp"
#include "cuspvb/prior.hpp"

using namespace cuspvb;

TEST_CASE("stick draws satisfy the construction identities") {
    RngStream rng(17, stream_tag::prior);
    for (int rep = 0; rep < 500; ++rep) {
        StickDraw d = sample_sticks(5.0, 10, rng);
        double sum = 0.0, cum = 0.0;
        for (int l = 0; l < 10; ++l) {
            sum += d.omega[l];
            cum += d.omega[l];
            CHECK(std::fabs(d.pi[l] - cum) <= 1e-12);
            if (l > 0) CHECK(d.pi[l] >= d.pi[l - 1]);
            if (l < 9) {
                CHECK(d.v[l] > 0.0);
                CHECK(d.v[l] < 1.0);
            }
        }
        CHECK(d.v[9] == 1.0);
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
        CHECK(std::fabs(d.pi[9] - 1.0) <= 1e-12);
    }
}

TEST_CASE("stick sampling validates parameters") {
    CHECK_THROWS_AS(sample_sticks(0.0, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_sticks(-1.0, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_sticks(1.0, 1, 1), std::invalid_argument);
}

TEST_CASE("alpha near zero concentrates pi_1 at one") {
    RngStream rng(3, stream_tag::prior);
    double mean_pi1 = 0.0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) mean_pi1 += sample_sticks(1e-8, 6, rng).pi[0];
    CHECK(mean_pi1 / reps > 0.999);
}

TEST_CASE("Monte Carlo stick means match the analytic expectation") {
    const double alpha = 5.0;
    const int H = 10, reps = 100000;
    RngStream rng(11, stream_tag::prior);
    std::vector<double> sum(H, 0.0), sum_sq(H, 0.0);
    for (int rep = 0; rep < reps; ++rep) {
        StickDraw d = sample_sticks(alpha, H, rng);
        for (int h = 0; h < H; ++h) {
            sum[h] += d.pi[h];
            sum_sq[h] += d.pi[h] * d.pi[h];
        }
    }
    for (int h = 1; h <= H; ++h) {
        double mean = sum[h - 1] / reps;
        double var = (sum_sq[h - 1] - sum[h - 1] * sum[h - 1] / reps) / (reps - 1.0);
        double se = std::sqrt(var / reps);
        CAPTURE(h);
        CHECK(std::fabs(mean - expected_pi(alpha, h, H)) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("expected_pi endpoints and errors") {
    CHECK(expected_pi(5.0, 10, 10) == 1.0);
    CHECK(expected_pi(1.0, 1, 10) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(expected_pi(5.0, 3, 10) ==
          doctest::Approx(1.0 - std::pow(5.0 / 6.0, 3)).epsilon(1e-15));
    CHECK_THROWS_AS(expected_pi(5.0, 0, 10), std::out_of_range);
    CHECK_THROWS_AS(expected_pi(5.0, 11, 10), std::out_of_range);
}

TEST_CASE("loadings prior: last column always sits in the spike") {
    Hyperparams hyper;
    hyper.p = 4;
    hyper.H = 6;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Matrix lambda = sample_cusp_loadings(hyper, 4, seed);
        for (int j = 0; j < 4; ++j)
            CHECK(std::fabs(lambda(j, 5)) < 8.0 * std::sqrt(hyper.theta_inf));
    }
}

TEST_CASE("loadings prior degenerates to a single Gaussian when slab equals spike") {
    Hyperparams hyper;
    hyper.p = 6;
    hyper.H = 5;
    hyper.theta0 = 0.49;
    hyper.theta_inf = 0.49 * (1.0 - 1e-12);  // effectively theta0 = theta_inf
    double ss = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        Matrix lambda = sample_cusp_loadings(hyper, 6, seed);
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            ss += lambda.data()[k] * lambda.data()[k];
            ++count;
        }
    }
    // every entry is N(0, 0.49) regardless of the sticks
    double var = ss / count;
    CHECK(std::fabs(var - 0.49) < 0.49 * 4.0 * std::sqrt(2.0 / count));
}

TEST_CASE("increasing shrinkage: small-ball probability grows along columns") {
    Hyperparams hyper;
    hyper.p = 3;
    hyper.H = 6;
    const double eps = 0.1;
    const int reps = 100000;
    // paired per-draw indicator differences between adjacent columns
    std::vector<double> diff_sum(hyper.H - 1, 0.0), diff_sq(hyper.H - 1, 0.0);
    for (int rep = 0; rep < reps; ++rep) {
        Matrix lambda = sample_cusp_loadings(hyper, hyper.p, 777000 + rep);
        for (int h = 0; h + 1 < hyper.H; ++h) {
            double d = 0.0;
            for (int j = 0; j < hyper.p; ++j)
                d += (std::fabs(lambda(j, h + 1)) < eps ? 1.0 : 0.0) -
                     (std::fabs(lambda(j, h)) < eps ? 1.0 : 0.0);
            d /= hyper.p;
            diff_sum[h] += d;
            diff_sq[h] += d * d;
        }
    }
    for (int h = 0; h + 1 < hyper.H; ++h) {
        double mean = diff_sum[h] / reps;
        double var = (diff_sq[h] - diff_sum[h] * diff_sum[h] / reps) / (reps - 1.0);
        double se = std::sqrt(var / reps);
        CAPTURE(h);
        CHECK(mean >= -3.0 * se);
    }
}
