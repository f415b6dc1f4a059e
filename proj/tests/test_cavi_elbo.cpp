#include <doctest.h>

#include <cmath>

#include "cuspvb/cavi.hpp"
#include "oracles.hpp"

using namespace cuspvb;

TEST_CASE("the two ELBO groupings agree") {
    for (std::uint64_t seed : {100u, 101u, 102u, 103u}) {
        auto t = oracle::random_instance(3, 3, 6, seed);
        double a = elbo(t.state, t.data, t.hyper);
        double b = elbo_via_kl(t.state, t.data, t.hyper);
        CAPTURE(seed);
        CHECK(std::fabs(a - b) <= 1e-8 * std::max(1.0, std::fabs(a)));
    }
    // also in the harsh spike regime reached by actual fits
    oracle::InstanceOptions harsh;
    harsh.theta_inf = 1e-6;
    auto t = oracle::random_instance(4, 3, 5, 200, harsh);
    VariationalState s = t.state;
    for (int c = 0; c < 3; ++c) cycle(s, t.data, t.hyper);
    double a = elbo(s, t.data, t.hyper);
    double b = elbo_via_kl(s, t.data, t.hyper);
    CHECK(std::fabs(a - b) <= 1e-8 * std::max(1.0, std::fabs(a)));
}

TEST_CASE("cycles never decrease the ELBO") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        oracle::InstanceOptions opts;
        opts.theta_inf = seed % 2 ? 1e-6 : 1e-2;
        auto t = oracle::random_instance(3, 3, 8, 300 + seed, opts);
        VariationalState s = t.state;
        double prev = elbo(s, t.data, t.hyper);
        for (int c = 0; c < 25; ++c) {
            double e = cycle(s, t.data, t.hyper);
            CAPTURE(seed);
            CAPTURE(c);
            CHECK(e >= prev - 1e-8 * std::fabs(prev));
            prev = e;
        }
    }
}

TEST_CASE("each update step alone cannot decrease the ELBO") {
    using Step = void (*)(VariationalState&, const Dataset&, const Hyperparams&);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto t = oracle::random_instance(3, 3, 6, 400 + seed);
        const double before = elbo(t.state, t.data, t.hyper);
        const double slack = 1e-8 * std::fabs(before);

        Step data_steps[] = {update_loadings, update_noise, update_factors};
        for (Step step : data_steps) {
            VariationalState s = t.state;
            step(s, t.data, t.hyper);
            CHECK(elbo(s, t.data, t.hyper) >= before - slack);
        }
        {
            VariationalState s = t.state;
            update_assignments(s, t.hyper);
            CHECK(elbo(s, t.data, t.hyper) >= before - slack);
        }
        {
            VariationalState s = t.state;
            update_sticks(s, t.hyper);
            CHECK(elbo(s, t.data, t.hyper) >= before - slack);
        }
    }
}

TEST_CASE("a converged state is a fixed point of cycling") {
    oracle::InstanceOptions opts;
    opts.theta_inf = 1e-6;
    auto t = oracle::random_instance(4, 3, 10, 500, opts);
    VariationalState s = t.state;
    double e = elbo(s, t.data, t.hyper);
    for (int c = 0; c < 4000; ++c) {
        double next = cycle(s, t.data, t.hyper);
        if (std::fabs(next - e) < 1e-12 * std::fabs(next)) break;
        e = next;
    }
    double after = cycle(s, t.data, t.hyper);
    CHECK(std::fabs(after - e) < 1e-6);
}

TEST_CASE("Monte Carlo estimate of the ELBO matches the closed form") {
    // tiny model; moderate spike so the estimator's variance stays sane
    oracle::InstanceOptions opts;
    opts.theta_inf = 5e-2;
    auto t = oracle::random_instance(2, 2, 4, 600, opts);
    double closed = elbo(t.state, t.data, t.hyper);
    auto mc = oracle::mc_elbo(t.state, t.data, t.hyper, 200000, 77);
    CAPTURE(closed);
    CAPTURE(mc.estimate);
    CAPTURE(mc.standard_error);
    CHECK(std::fabs(mc.estimate - closed) <= 3.0 * mc.standard_error);
}

TEST_CASE("expected_active sums the slab mass above the diagonal") {
    Matrix k(2, 2);
    k(0, 1) = 1.0;
    k(1, 0) = 1.0;
    CHECK(expected_active(k) == 1.0);

    Matrix all_spike(3, 3);
    for (int h = 0; h < 3; ++h) all_spike(h, 0) = 1.0;
    CHECK(expected_active(all_spike) == 0.0);

    Matrix bad(2, 2, 0.3);
    CHECK_THROWS_AS(expected_active(bad), std::invalid_argument);
}
