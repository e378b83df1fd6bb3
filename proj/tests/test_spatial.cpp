#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "doctest.h"
#include "iotra/beta.hpp"
#include "iotra/spatial.hpp"

using namespace iotra;

// Reference values computed independently (scipy.special.betainc, direct
// evaluation of the moment expressions).
TEST_CASE("incomplete beta agrees with Boost.Math") {
    const std::vector<double> shapes{0.05, 0.3, 0.9, 1.0, 2.5, 7.0, 40.0, 300.0};
    for (double a : shapes)
        for (double b : shapes)
            for (double x : {0.0, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0}) {
                CAPTURE(a);
                CAPTURE(b);
                CAPTURE(x);
                CHECK(std::abs(incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-12);
            }
}

TEST_CASE("incomplete beta inverse meets its tolerance") {
    for (double a : {0.2, 1.3, 6.0, 55.0})
        for (double b : {0.4, 2.0, 9.0})
            for (double q : {0.01, 0.25, 0.5, 0.975}) {
                const double x = incomplete_beta_inverse(a, b, q, 1e-12);
                CHECK(std::abs(x - boost::math::ibeta_inv(a, b, q)) <= 1e-11);
            }
    CHECK(incomplete_beta_inverse(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta_inverse(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("incomplete beta rejects bad arguments") {
    CHECK_THROWS(incomplete_beta(0.0, 1.0, 0.5));
    CHECK_THROWS(incomplete_beta(1.0, 1.0, 1.5));
    CHECK_THROWS(incomplete_beta_inverse(1.0, 1.0, -0.1));
}

TEST_CASE("moments at the reference deployment") {
    const SpatialConfig s;
    CHECK(moment_m1(s, 26.85761802547597) == doctest::Approx(0.6184798815905985).epsilon(1e-12));
    CHECK(moment_m2(s, 26.85761802547597) == doctest::Approx(0.4182751619251763).epsilon(1e-12));
    CHECK(moment_m1(s, 775.0468820533237) == doctest::Approx(0.0756860564698799).epsilon(1e-12));
    CHECK(moment_m2(s, 775.0468820533237) == doctest::Approx(0.009258087044434789).epsilon(1e-12));
}

TEST_CASE("moment limits") {
    SpatialConfig s;
    CHECK(moment_m1(s, 0.0) == 1.0);
    CHECK(moment_m2(s, 0.0) == 1.0);
    s.density = 0.0;
    CHECK(moment_m1(s, 50.0) == 1.0);
    CHECK(moment_m2(s, 50.0) == 1.0);
}

TEST_CASE("fully active single type scales the exponent by 1 + 2/eta") {
    SpatialConfig s;
    s.type_pmf = {1.0};
    s.activity = {1.0};
    s.interferer_power = {7e-3};
    for (double eta : {2.5, 3.0, 4.0, 5.5}) {
        s.path_loss_exponent = eta;
        const double theta = 3.7;
        CHECK(std::log(moment_m2(s, theta)) ==
              doctest::Approx((1.0 + 2.0 / eta) * std::log(moment_m1(s, theta))).epsilon(1e-13));
    }
}

TEST_CASE("moment ordering and monotonicity") {
    const SpatialConfig base;
    for (double theta : {0.01, 0.5, 4.0, 26.0, 775.0, 5000.0}) {
        const double m1 = moment_m1(base, theta);
        const double m2 = moment_m2(base, theta);
        CHECK(m1 * m1 <= m2);
        CHECK(m2 <= m1);
        CHECK(m1 < 1.0);
        CHECK(m2 > 0.0);
        CHECK(moment_m1(base, theta * 1.1) <= m1);
        CHECK(moment_m2(base, theta * 1.1) <= m2);

        SpatialConfig denser = base;
        denser.density *= 1.5;
        CHECK(moment_m1(denser, theta) <= m1);
        CHECK(moment_m2(denser, theta) <= m2);
        SpatialConfig farther = base;
        farther.link_distance *= 1.2;
        CHECK(moment_m1(farther, theta) <= m1);
        CHECK(moment_m2(farther, theta) <= m2);
        for (std::size_t v = 0; v < 3; ++v) {
            SpatialConfig busier = base;
            busier.activity[v] = std::min(1.0, busier.activity[v] + 0.2);
            CHECK(moment_m1(busier, theta) <= m1);
            CHECK(moment_m2(busier, theta) <= m2);
        }
    }
}

TEST_CASE("path-loss exponent must exceed 2") {
    SpatialConfig s;
    s.path_loss_exponent = 2.0;
    CHECK_THROWS_AS(moment_m1(s, 1.0), ConfigError);
    CHECK_THROWS_AS(moment_m2(s, 1.0), ConfigError);
    CHECK_THROWS_AS(feedback_success_prob(s, FeedbackConfig{}, 250e3), ConfigError);
    try {
        moment_m1(s, 1.0);
    } catch (const ConfigError& e) {
        CHECK(e.key() == "spatial.path_loss_exponent");
    }
}

TEST_CASE("meta distribution CCDF") {
    const SpatialConfig s;
    const auto n1 = make_meta_distribution(s, 775.0468820533237);
    const auto n2 = make_meta_distribution(s, 26.85761802547597);
    CHECK_FALSE(n1.degenerate);
    CHECK(meta_ccdf(n1, 0.2) == doctest::Approx(0.043530651458792424).epsilon(1e-9));
    CHECK(meta_ccdf(n2, 0.2) == doctest::Approx(0.9836268188967077).epsilon(1e-9));
    CHECK(meta_ccdf(n2, 0.0) == 1.0);
    CHECK(meta_ccdf(n2, 1.0) == 0.0);
    double prev = 1.0;
    for (int k = 0; k <= 1000; ++k) {
        const double c = meta_ccdf(n1, k / 1000.0);
        CHECK(c <= prev);
        prev = c;
    }
    CHECK_THROWS(meta_ccdf(n2, 1.2));
}

TEST_CASE("zero spread is flagged degenerate and collapses to a point mass") {
    const SpatialConfig s;
    const auto meta = make_meta_distribution(s, 0.0);
    CHECK(meta.degenerate);
    CHECK_THROWS_AS(meta_ccdf(meta, 0.5), DegenerateDistribution);
    const auto classes = discretize_classes(meta, 4);
    for (double p : classes.medians) CHECK(p == meta.m1);
}

TEST_CASE("equal-mass classes") {
    const SpatialConfig s;
    const auto meta = make_meta_distribution(s, 26.85761802547597);
    SUBCASE("single class sits at the median") {
        const auto c = discretize_classes(meta, 1);
        CHECK(c.size() == 1);
        CHECK(c.medians[0] == doctest::Approx(0.6334676328081634).epsilon(1e-8));
    }
    SUBCASE("two classes sit at the quartiles") {
        const auto c = discretize_classes(meta, 2);
        CHECK(1.0 - meta_ccdf(meta, c.medians[0]) == doctest::Approx(0.25).epsilon(1e-8));
        CHECK(1.0 - meta_ccdf(meta, c.medians[1]) == doctest::Approx(0.75).epsilon(1e-8));
    }
    SUBCASE("every class carries 1/M and contains its median") {
        for (int M : {3, 20, 50}) {
            const auto c = discretize_classes(meta, M);
            REQUIRE(c.boundaries.size() == static_cast<std::size_t>(M + 1));
            CHECK(c.boundaries.front() == 0.0);
            CHECK(c.boundaries.back() == 1.0);
            for (int m = 0; m < M; ++m) {
                const double lo = c.boundaries[static_cast<std::size_t>(m)];
                const double hi = c.boundaries[static_cast<std::size_t>(m) + 1];
                CHECK(lo < hi);
                CHECK(lo < c.medians[static_cast<std::size_t>(m)]);
                CHECK(c.medians[static_cast<std::size_t>(m)] < hi);
                CHECK(meta_ccdf(meta, lo) - meta_ccdf(meta, hi) ==
                      doctest::Approx(1.0 / M).epsilon(1e-7));
            }
        }
    }
    SUBCASE("mean of medians approaches M1") {
        for (double theta : {775.0468820533237, 26.85761802547597, 8.18958683997628}) {
            const auto m = make_meta_distribution(s, theta);
            const auto c = discretize_classes(m, 100);
            double mean = 0.0;
            for (double p : c.medians) mean += p / 100.0;
            CHECK(std::abs(mean / m.m1 - 1.0) < 0.01);
        }
    }
    CHECK_THROWS_AS(discretize_classes(meta, 0), ConfigError);
}

TEST_CASE("feedback success probability") {
    SpatialConfig s;
    FeedbackConfig f;
    CHECK(ack_threshold(f, 250e3) == doctest::Approx(1.0945882456412535).epsilon(1e-12));
    CHECK(feedback_success_prob(s, f, 250e3) == doctest::Approx(0.6616402123607628).epsilon(1e-12));

    double prev = 1.0;
    for (double density : {0.0, 50e-6, 200e-6, 800e-6}) {
        s.density = density;
        const double p = feedback_success_prob(s, f, 250e3);
        CHECK(p <= prev);
        CHECK(p > 0.0);
        prev = p;
    }
    s.density = 0.0;
    CHECK(feedback_success_prob(s, f, 250e3) == 1.0);

    s = SpatialConfig{};
    prev = 1.0;
    for (double r : {5.0, 20.0, 40.0}) {
        s.link_distance = r;
        const double p = feedback_success_prob(s, f, 250e3);
        CHECK(p < prev);
        prev = p;
    }
    s = SpatialConfig{};
    prev = 1.0;
    for (double bits : {8.0, 40.0, 120.0}) {
        f.ack_bits = bits;
        const double p = feedback_success_prob(s, f, 250e3);
        CHECK(p < prev);
        prev = p;
    }
    f.fixed_p_ack = 0.7;
    CHECK(feedback_success_prob(s, f, 250e3) == 0.7);
}

TEST_CASE("conditional success probability of a fixed field") {
    SpatialConfig s;
    Realization empty;
    CHECK(conditional_fsd(empty, 26.0, s) == 1.0);

    s.type_pmf = {1.0};
    s.activity = {1.0};
    s.interferer_power = {s.tx_power};
    Realization one;
    one.interferers.push_back({s.link_distance, 0});
    CHECK(conditional_fsd(one, 1.0, s) == doctest::Approx(0.5));

    s.activity = {0.3};
    one.interferers.front().distance = 0.0;
    CHECK(conditional_fsd(one, 1.0, s) == doctest::Approx(0.7));
    CHECK(conditional_fsd(one, 0.0, s) == 1.0);
}
