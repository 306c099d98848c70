#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "flock/ensemble.hpp"
#include "flock/error.hpp"
#include "flock/flat_metric.hpp"

using namespace flock;

namespace {

Ensemble random_ensemble(std::mt19937_64& rng, std::size_t n, int dim)
{
    std::uniform_real_distribution<double> u(-2.0, 2.0), m(0.1, 1.0);
    Ensemble e;
    e.dim = dim;
    for (std::size_t i = 0; i < n; ++i)
        e.masses.push_back(m(rng));
    const double s = total_mass(e);
    for (double& mi : e.masses)
        mi /= s;
    for (std::size_t q = 0; q < n * dim; ++q) {
        e.positions.push_back(u(rng));
        e.velocities.push_back(u(rng));
    }
    return e;
}

DensityBox unit_square()
{
    return {1, {0.0, 0.0}, {1.0, 1.0}, [](std::span<const double>) { return 1.0; }};
}

} // namespace

TEST_CASE("validation")
{
    Ensemble e{1, {0.5, 0.5}, {0.0, 1.0}, {1.0, -1.0}, 0.0};
    CHECK_NOTHROW(validate(e));
    e.masses = {0.5, 0.6};
    CHECK_THROWS_AS(validate(e), InvalidArgument);
    CHECK_NOTHROW(validate(e, false));
    e.masses = {0.5, 0.5};
    e.positions.push_back(2.0);
    CHECK_THROWS_AS(validate(e), InvalidArgument);
    e.positions = {0.0, std::nan("")};
    CHECK_THROWS_AS(validate(e), InvalidArgument);
    CHECK_THROWS_AS(validate(Ensemble{}), InvalidArgument);
}

TEST_CASE("empirical measure transcribes the ensemble")
{
    Ensemble single{1, {1.0}, {0.0}, {0.0}, 0.0};
    const auto mu1 = empirical_measure(single);
    CHECK(mu1.dim == 2);
    CHECK(mu1.weights == std::vector<double>{1.0});
    CHECK(mu1.points == std::vector<double>{0.0, 0.0});

    Ensemble pair{1, {0.5, 0.5}, {0.0, 1.0}, {1.0, -1.0}, 0.0};
    const auto mu2 = empirical_measure(pair);
    CHECK(mu2.points == std::vector<double>{0.0, 1.0, 1.0, -1.0});
    CHECK(mu2.weights == std::vector<double>{0.5, 0.5});
    CHECK(total_weight(mu2) == 1.0);
}

TEST_CASE("canonicalization sums coincident atoms")
{
    Ensemble twins{1, {0.25, 0.75}, {0.3, 0.3}, {1.0, 1.0}, 0.0};
    const auto c = canonicalize(empirical_measure(twins));
    CHECK(c.size() == 1);
    CHECK(c.weights[0] == 1.0);

    // oracle: sort-and-sum over a measure with planted duplicates
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, 3);
    AtomicMeasure mu;
    mu.dim = 2;
    const double grid[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    double expected[4] = {0, 0, 0, 0};
    for (int k = 0; k < 40; ++k) {
        const int q = pick(rng);
        mu.points.insert(mu.points.end(), grid[q], grid[q] + 2);
        mu.weights.push_back(0.01 * (k + 1));
        expected[q] += 0.01 * (k + 1);
    }
    const auto canon = canonicalize(mu);
    CHECK(canon.size() == std::size_t(std::count_if(expected, expected + 4, [](double w) { return w > 0; })));
    CHECK(total_weight(canon) == doctest::Approx(total_weight(mu)).epsilon(1e-15));
    for (std::size_t k = 0; k < canon.size(); ++k)
        for (int q = 0; q < 4; ++q)
            if (canon.point(k)[0] == grid[q][0] && canon.point(k)[1] == grid[q][1])
                CHECK(canon.weights[k] == doctest::Approx(expected[q]).epsilon(1e-14));
}

TEST_CASE("support radius")
{
    Ensemble e{2, {1.0}, {3.0, 0.0}, {0.0, -4.0}, 0.0};
    CHECK(support_radius(e) == 4.0);
    Ensemble origin{1, {0.5, 0.5}, {0.0, 0.0}, {0.0, 0.0}, 0.0};
    CHECK(support_radius(origin) == 0.0);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto r = random_ensemble(rng, 17, 3);
        double brute = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            double nx = 0, nv = 0;
            for (int k = 0; k < 3; ++k) {
                nx += r.positions[i * 3 + k] * r.positions[i * 3 + k];
                nv += r.velocities[i * 3 + k] * r.velocities[i * 3 + k];
            }
            brute = std::max({brute, std::sqrt(nx), std::sqrt(nv)});
        }
        CHECK(support_radius(r) == brute);
    }
}

TEST_CASE("merge")
{
    Ensemble a{1, {0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0}, 0.0};
    const std::size_t both[] = {0, 1};
    const auto m = merge(a, both);
    CHECK(m.size() == 1);
    CHECK(m.masses[0] == 1.0);
    CHECK(m.positions[0] == 0.0);
    CHECK(m.velocities[0] == 1.0);

    Ensemble b{1, {0.25, 0.75}, {0.0, 0.0}, {0.0, 4.0}, 0.0};
    CHECK(merge(b, both).velocities[0] == 3.0);

    const std::size_t single[] = {0};
    const std::size_t outside[] = {0, 2};
    CHECK_THROWS_AS(merge(a, single), InvalidArgument);
    CHECK_THROWS_AS(merge(a, outside), InvalidArgument);
}

TEST_CASE("merge conserves mass and momentum on random clusters")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto e = random_ensemble(rng, 12, 2);
        std::vector<std::size_t> idx(12);
        for (std::size_t i = 0; i < 12; ++i)
            idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t k = 2 + trial % 6;
        std::vector<std::size_t> cluster(idx.begin(), idx.begin() + k);
        const auto m = merge(e, cluster);
        CHECK(m.size() == e.size() - k + 1);

        double p_before[2] = {0, 0}, p_after[2] = {0, 0};
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int c = 0; c < 2; ++c)
                p_before[c] += e.masses[i] * e.velocities[i * 2 + c];
        for (std::size_t i = 0; i < m.size(); ++i)
            for (int c = 0; c < 2; ++c)
                p_after[c] += m.masses[i] * m.velocities[i * 2 + c];
        for (int c = 0; c < 2; ++c)
            CHECK(std::abs(p_before[c] - p_after[c]) <= 1e-15);
        CHECK(std::abs(total_mass(m) - 1.0) <= kMassTolerance);
    }
}

TEST_CASE("merging a co-located cluster twice equals merging once")
{
    Ensemble e{1, {0.2, 0.3, 0.5}, {0.5, 0.5, 2.0}, {1.0, 1.0, -1.0}, 0.0};
    const std::size_t pair[] = {0, 1};
    const auto once = merge(e, pair);
    // the merged particle is alone now; merging it with a copy of itself changes nothing
    Ensemble doubled = once;
    doubled.masses[0] *= 0.5;
    doubled.masses.push_back(once.masses[0] * 0.5);
    doubled.positions.push_back(once.positions[0]);
    doubled.velocities.push_back(once.velocities[0]);
    const std::size_t again[] = {0, 2};
    const auto twice = merge(doubled, again);
    CHECK(twice.positions == once.positions);
    CHECK(twice.velocities == once.velocities);
    CHECK(twice.masses[0] == doctest::Approx(once.masses[0]).epsilon(1e-15));
}

TEST_CASE("quantize a delta")
{
    WeightedSamples delta{2, {0.3, -1.0, 2.0, 0.5}, {1.0}};
    for (double h : {0.01, 0.5, 3.0}) {
        const auto e = quantize(delta, h);
        CHECK(e.size() == 1);
        CHECK(e.masses[0] == 1.0);
        CHECK(e.positions == std::vector<double>{0.3, -1.0});
        CHECK(e.velocities == std::vector<double>{2.0, 0.5});
    }
}

TEST_CASE("quantize the uniform unit square")
{
    const auto e = quantize(unit_square(), 0.5);
    REQUIRE(e.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(e.masses[i] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK((e.positions[i] == 0.25 || e.positions[i] == 0.75));
        CHECK((e.velocities[i] == 0.25 || e.velocities[i] == 0.75));
    }
    CHECK(std::abs(total_mass(e) - 1.0) <= kMassTolerance);

    // consecutive resolutions are within the cell-size scale in the flat metric
    const auto fine = quantize(unit_square(), 0.25);
    CHECK(fine.size() == 16);
    CHECK(bl_distance(empirical_measure(e), empirical_measure(fine)) <= 0.25);
}

TEST_CASE("quantization converges over a dyadic sweep")
{
    DensityBox bump{1, {-1.0, -1.0}, {1.0, 1.0}, [](std::span<const double> z) {
                        return std::max(0.0, 1.0 - z[0] * z[0]) * std::max(0.0, 1.0 - std::abs(z[1]));
                    }};
    double previous = 1e300;
    for (double h : {1.0, 0.5, 0.25, 0.125}) {
        const auto coarse = quantize(bump, h);
        const auto fine = quantize(bump, h / 2);
        CHECK(std::abs(total_mass(coarse) - 1.0) <= kMassTolerance);
        const double d = bl_distance(empirical_measure(coarse), empirical_measure(fine));
        CHECK(d <= h);
        CHECK(d <= previous);
        previous = d;
    }
}

TEST_CASE("quantize errors")
{
    CHECK_THROWS_AS(quantize(unit_square(), 0.0), InvalidArgument);
    DensityBox zero{1, {0.0, 0.0}, {1.0, 1.0}, [](std::span<const double>) { return 0.0; }};
    CHECK_THROWS_AS(quantize(zero, 0.5), InvalidArgument);
    DensityBox blowup{1, {0.0, 0.0}, {1.0, 1.0}, [](std::span<const double> z) { return 1.0 / (z[0] - 0.5); }};
    CHECK_THROWS_AS(quantize(blowup, 0.5), QuadratureFailure);
    CHECK_THROWS_AS(quantize(WeightedSamples{1, {}, {}}, 0.5), InvalidArgument);
}

TEST_CASE("samples are binned into cell centers")
{
    WeightedSamples s{1, {0.0, 0.0, 0.1, 0.1, 1.0, 1.0}, {1.0, 1.0, 2.0}};
    const auto e = quantize(s, 0.5);
    REQUIRE(e.size() == 2);
    CHECK(e.masses[0] == doctest::Approx(0.5));
    CHECK(e.positions[0] == 0.25);
    CHECK(e.positions[1] == 0.75);
}
