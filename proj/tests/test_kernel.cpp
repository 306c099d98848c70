#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "flock/error.hpp"
#include "flock/kernel.hpp"

using namespace flock;

TEST_CASE("weights at reference points")
{
    CHECK(evaluate(WeightSpec::singular(0.25), 1.0) == 1.0);
    CHECK(evaluate(WeightSpec::capped(0.25, 10.0), 1e-8) == 10.0);
    CHECK(evaluate(WeightSpec::regular(1.0, 2.0), 0.0) == 1.0);
    CHECK(evaluate(WeightSpec::regular(2.0, 2.0), 1.0) == doctest::Approx(1.0));
    CHECK(evaluate(WeightSpec::singular(0.25), 0.0) == std::numeric_limits<double>::infinity());
    CHECK(evaluate(WeightSpec::capped(0.25, 10.0), 0.0) == 10.0);
}

TEST_CASE("invalid parameters are rejected at construction")
{
    CHECK_THROWS_AS(WeightSpec::singular(0.5), InvalidArgument);
    CHECK_THROWS_AS(WeightSpec::singular(0.0), InvalidArgument);
    CHECK_THROWS_AS(WeightSpec::capped(0.5, 10.0), InvalidArgument);
    CHECK_THROWS_AS(WeightSpec::capped(0.25, 0.0), InvalidArgument);
    CHECK_THROWS_AS(WeightSpec::regular(0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(WeightSpec::regular(1.0, -0.1), InvalidArgument);
    CHECK_NOTHROW(WeightSpec::regular(1.0, 0.0));
}

TEST_CASE("cap activation radius")
{
    const auto w = WeightSpec::capped(0.25, 16.0);
    const double r = cap_activation_radius(w);
    CHECK(r == doctest::Approx(1.0 / 65536.0).epsilon(1e-15));
    // continuous at the radius, uncapped just outside, capped just inside
    CHECK(evaluate(w, r) == doctest::Approx(16.0).epsilon(1e-14));
    CHECK(evaluate(w, 1.01 * r) == evaluate(WeightSpec::singular(0.25), 1.01 * r));
    CHECK(evaluate(w, 0.99 * r) == 16.0);

    CHECK(cap_activation_radius(WeightSpec::capped(0.25, 1.0)) == 1.0);
    CHECK_THROWS_AS(cap_activation_radius(WeightSpec::singular(0.25)), InvalidArgument);
}

TEST_CASE("monotone in distance and consistent with the cap")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> alpha(0.01, 0.49), logs(-12.0, 4.0), logn(0.0, 6.0), beta(0.0, 3.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double a = alpha(rng);
        const double n = std::pow(10.0, logn(rng));
        const WeightSpec specs[] = {WeightSpec::singular(a), WeightSpec::capped(a, n),
                                    WeightSpec::regular(1.0 + beta(rng), beta(rng))};
        double s = std::pow(10.0, logs(rng)), t = std::pow(10.0, logs(rng));
        if (s > t)
            std::swap(s, t);
        for (const auto& w : specs)
            CHECK(evaluate(w, s) >= evaluate(w, t));

        const double sing = evaluate(specs[0], s);
        CHECK(evaluate(specs[1], s) == std::min(sing, n));
        // once n exceeds s^-alpha the capped value is the singular one
        CHECK(evaluate(WeightSpec::capped(a, 2.0 * sing), s) == sing);
    }
}
