#include <cmath>
#include <deque>
#include <random>

#include <doctest.h>

#include "flock/diagnostics.hpp"
#include "flock/dynamics.hpp"
#include "flock/error.hpp"
#include "flock/linalg.hpp"

using namespace flock;

namespace {

constexpr double kAlpha = 0.25;

Ensemble two_body(double w0)
{
    return {1, {0.5, 0.5}, {0.0, 1.0}, {-0.5 * w0, 0.5 * w0}, 0.0};
}

double first_integral(const Ensemble& e)
{
    const double r = e.positions[1] - e.positions[0];
    const double w = e.velocities[1] - e.velocities[0];
    return w + std::copysign(std::pow(std::abs(r), 1.0 - kAlpha) / (1.0 - kAlpha), r);
}

// Classic fixed-step RK4 on the relative system r' = w, w' = -|r|^-alpha w (unit total mass).
std::pair<double, double> reference_relative(double r, double w, double t, double h)
{
    auto f = [](double rr, double ww) { return std::pair{ww, -std::pow(std::abs(rr), -kAlpha) * ww}; };
    const int steps = int(std::llround(t / h));
    for (int s = 0; s < steps; ++s) {
        auto [k1r, k1w] = f(r, w);
        auto [k2r, k2w] = f(r + 0.5 * h * k1r, w + 0.5 * h * k1w);
        auto [k3r, k3w] = f(r + 0.5 * h * k2r, w + 0.5 * h * k2w);
        auto [k4r, k4w] = f(r + h * k3r, w + h * k3w);
        r += h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r);
        w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    }
    return {r, w};
}

Ensemble random_cloud(std::mt19937_64& rng, std::size_t n, int dim, double radius)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0), m(0.2, 1.0);
    Ensemble e;
    e.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        e.masses.push_back(m(rng));
        for (int k = 0; k < dim; ++k) {
            e.positions.push_back(radius / std::sqrt(double(dim)) * u(rng));
            e.velocities.push_back(radius / std::sqrt(double(dim)) * u(rng));
        }
    }
    const double s = total_mass(e);
    for (double& mi : e.masses)
        mi /= s;
    return e;
}

SimOptions options(double t_end)
{
    SimOptions o;
    o.t_end = t_end;
    return o;
}

} // namespace

TEST_CASE("alignment rhs")
{
    Ensemble same{2, {0.2, 0.3, 0.5}, {0, 0, 1, 0, 0, 2}, {1, 1, 1, 1, 1, 1}, 0.0};
    for (double a : alignment_rhs(same, WeightSpec::singular(kAlpha)))
        CHECK(a == 0.0);

    // psi(1) = 1, a_1 = m_2 (v_2 - v_1) = 1/2, a_2 = -1/2
    Ensemble pair{1, {0.5, 0.5}, {0.0, 1.0}, {0.0, 1.0}, 0.0};
    const auto a = alignment_rhs(pair, WeightSpec::singular(kAlpha));
    CHECK(a[0] == 0.5);
    CHECK(a[1] == -0.5);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto e = random_cloud(rng, 3, 2, 1.0);
        const auto acc = alignment_rhs(e, WeightSpec::singular(kAlpha));
        for (int k = 0; k < 2; ++k) {
            double p = 0.0;
            for (std::size_t i = 0; i < 3; ++i)
                p += e.masses[i] * acc[i * 2 + k];
            CHECK(std::abs(p) <= 1e-14);
        }
    }

    Ensemble crash{1, {0.5, 0.5}, {0.0, 0.0}, {1.0, -1.0}, 0.0};
    CHECK_THROWS_AS(alignment_rhs(crash, WeightSpec::singular(kAlpha)), CollisionAtSingularity);
    CHECK_NOTHROW(alignment_rhs(crash, WeightSpec::capped(kAlpha, 100.0)));
}

TEST_CASE("free streaming step")
{
    Ensemble one{1, {1.0}, {0.0}, {1.0}, 0.0};
    auto res = step(one, options(1.0), 0.01);
    CHECK(res.state.positions[0] == doctest::Approx(res.dt_used).epsilon(1e-15));
    CHECK(res.state.velocities[0] == 1.0);
    CHECK(res.state.time == res.dt_used);

    Ensemble twins{1, {0.5, 0.5}, {0.0, 1.0}, {0.3, 0.3}, 0.0};
    res = step(twins, options(1.0), 0.02);
    CHECK(res.state.velocities == twins.velocities);
}

TEST_CASE("pair separation limits the step")
{
    Ensemble close{1, {0.5, 0.5}, {0.0, 0.01}, {1.0, -1.0}, 0.0};
    SimOptions o = options(1.0);
    o.max_dt = 1.0;
    const auto res = step(close, o, 1.0);
    CHECK(res.dt_used <= 0.5 * 0.01 / 2.0 + 1e-18);
    CHECK(res.state.positions[1] > res.state.positions[0]);
    CHECK(separation_step_limit(close, 0.0) == doctest::Approx(0.0025));
}

TEST_CASE("two-body first integral against a fixed-step reference")
{
    auto traj = simulate(two_body(-0.5), options(1.0));
    CHECK(traj.events.empty());
    const double e0 = first_integral(traj.snapshots.front());
    CHECK(e0 == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    double drift = 0.0;
    for (const auto& s : traj.snapshots)
        drift = std::max(drift, std::abs(first_integral(s) - e0));
    CHECK(drift < 1e-6);

    const auto [r_ref, w_ref] = reference_relative(1.0, -0.5, 1.0, 1e-4);
    const auto& last = traj.snapshots.back();
    CHECK(last.time == 1.0);
    CHECK(last.positions[1] - last.positions[0] == doctest::Approx(r_ref).epsilon(1e-9));
    CHECK(last.velocities[1] - last.velocities[0] == doctest::Approx(w_ref).epsilon(1e-9));
}

TEST_CASE("two-body flocking reaches the predicted separation")
{
    const double r_star = std::pow(0.75 * 5.0 / 6.0, 4.0 / 3.0);
    auto traj = simulate(two_body(-0.5), options(20.0));
    CHECK(traj.events.empty());
    const auto& last = traj.snapshots.back();
    CHECK(std::abs(last.positions[1] - last.positions[0] - r_star) < 1e-6);
    // the tiny-step reference agrees on the way
    const auto [r_ref, w_ref] = reference_relative(1.0, -0.5, 5.0, 1e-4);
    const auto& mid = state_at(traj, 5.0);
    CHECK(mid.positions[1] - mid.positions[0] == doctest::Approx(r_ref).epsilon(1e-9));
}

TEST_CASE("two-body sticking merges once near the separable-integration time")
{
    const double w0 = -1.0 / (1.0 - kAlpha);
    auto traj = simulate(two_body(w0), options(4.0));
    REQUIRE(traj.events.size() == 1);
    const auto& ev = traj.events.front();
    MESSAGE("merge time " << ev.time);
    // Exact contact at t = (1 - alpha) / alpha = 3. Entering the 1e-6 tube in both
    // separation and velocity gap requires r <= (0.75e-6)^(4/3), reached 3 r^(1/4) earlier.
    const double r_tube = std::pow((1.0 - kAlpha) * 1e-6, 1.0 / (1.0 - kAlpha));
    const double t_tube = 3.0 - 3.0 * std::pow(r_tube, kAlpha);
    CHECK(ev.time == doctest::Approx(t_tube).epsilon(1e-3));
    CHECK(ev.after.size() == 1);
    CHECK(ev.after.velocities[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(traj.snapshots.back().size() == 1);
    CHECK(traj.snapshots.back().time == 4.0);
}

TEST_CASE("sticking detection")
{
    Ensemble far{1, {0.25, 0.25, 0.5}, {0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}, 0.0};
    CHECK(detect_sticking(far, 1e-6, 1e-6).empty());

    Ensemble twins{1, {0.5, 0.5}, {0.3, 0.3}, {1.0, 1.0}, 0.0};
    const auto c = detect_sticking(twins, 1e-6, 1e-6);
    REQUIRE(c.size() == 1);
    CHECK(c[0] == Cluster{0, 1});

    // chain: a-b and b-c within threshold, a-c not
    Ensemble chain{1, {0.2, 0.3, 0.5}, {0.0, 0.6, 1.2}, {0.0, 0.0, 0.0}, 0.0};
    const auto cc = detect_sticking(chain, 0.7, 0.1);
    REQUIRE(cc.size() == 1);
    CHECK(cc[0] == Cluster{0, 1, 2});

    // oracle: breadth-first search over the threshold graph
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto e = random_cloud(rng, 25, 2, 1.0);
        const double dx = 0.3, dv = 0.5;
        const std::size_t n = e.size();
        auto edge = [&](std::size_t i, std::size_t j) {
            return flock::distance(e.x(i), e.x(j)) <= dx && flock::distance(e.v(i), e.v(j)) <= dv;
        };
        std::vector<int> comp(n, -1);
        std::vector<Cluster> expected;
        for (std::size_t s = 0; s < n; ++s) {
            if (comp[s] >= 0)
                continue;
            Cluster members;
            std::deque<std::size_t> queue{s};
            comp[s] = int(s);
            while (!queue.empty()) {
                const auto i = queue.front();
                queue.pop_front();
                members.push_back(i);
                for (std::size_t j = 0; j < n; ++j)
                    if (comp[j] < 0 && edge(i, j)) {
                        comp[j] = int(s);
                        queue.push_back(j);
                    }
            }
            std::sort(members.begin(), members.end());
            if (members.size() >= 2)
                expected.push_back(members);
        }
        CHECK(detect_sticking(e, dx, dv) == expected);
    }
}

TEST_CASE("equal-velocity cloud streams freely")
{
    Ensemble cloud{2, {0.25, 0.25, 0.5}, {0, 0, 1, 0, 0, 1}, {0.5, -0.25, 0.5, -0.25, 0.5, -0.25}, 0.0};
    auto traj = simulate(cloud, options(2.0));
    CHECK(traj.events.empty());
    for (const auto& s : traj.snapshots) {
        CHECK(s.velocities == cloud.velocities);
        CHECK(s.positions[0] == doctest::Approx(0.5 * s.time).epsilon(1e-14));
    }
    CHECK(traj.snapshots.size() == 201);
}

TEST_CASE("snapshot grid")
{
    SimOptions o = options(1.0);
    o.output_stride = 0.25;
    auto traj = simulate(two_body(-0.5), o);
    REQUIRE(traj.snapshots.size() == 5);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(traj.snapshots[k].time == 0.25 * double(k));
    CHECK_THROWS_AS(state_at(traj, 0.3), InvalidArgument);
    CHECK(&state_at(traj, 0.5) == &traj.snapshots[2]);
}

TEST_CASE("invariants along random runs")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        const int dim = 1 + trial % 3;
        const double R0 = 1.0;
        auto e0 = random_cloud(rng, 20, dim, R0);
        SimOptions o = options(2.0);
        o.output_stride = 0.05;
        auto traj = simulate(e0, o);
        CHECK(mass_drift(traj) <= 1e-12);
        CHECK(momentum_drift(traj) <= 1e-8);
        CHECK(velocity_extremum_violation(traj) <= 1e-10);
        CHECK(support_bound_check(traj, R0).holds);
        for (std::size_t k = 1; k < traj.snapshots.size(); ++k)
            CHECK(traj.snapshots[k].time > traj.snapshots[k - 1].time);
        for (const auto& ev : traj.events)
            CHECK(ev.after.size() < ev.before.size());
    }
}

TEST_CASE("caps n and 4n agree while the cap is inactive")
{
    std::mt19937_64 rng(5);
    auto e0 = random_cloud(rng, 10, 2, 1.0);
    SimOptions a = options(1.0), b = options(1.0);
    a.weight = WeightSpec::capped(kAlpha, 50.0);
    b.weight = WeightSpec::capped(kAlpha, 200.0);
    auto ta = simulate(e0, a), tb = simulate(e0, b);
    const double radius = cap_activation_radius(a.weight);
    REQUIRE(ta.snapshots.size() == tb.snapshots.size());
    for (std::size_t k = 0; k < ta.snapshots.size(); ++k) {
        if (min_pairwise_distance(ta.snapshots[k]) <= radius)
            break;
        for (std::size_t q = 0; q < e0.positions.size(); ++q) {
            CHECK(std::abs(ta.snapshots[k].positions[q] - tb.snapshots[k].positions[q]) <= 1e-9);
            CHECK(std::abs(ta.snapshots[k].velocities[q] - tb.snapshots[k].velocities[q]) <= 1e-9);
        }
    }
}

TEST_CASE("error paths")
{
    SimOptions bad = options(1.0);
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(simulate(two_body(-0.5), bad), InvalidArgument);
    CHECK_THROWS_AS(step(two_body(-0.5), options(1.0), 0.0), InvalidArgument);

    // zero thresholds: nothing merges, so the approach to contact cannot be resolved
    SimOptions strict = options(4.0);
    strict.stick_dx = 0.0;
    strict.stick_dv = 0.0;
    CHECK_THROWS_AS(simulate(two_body(-4.0 / 3.0), strict), Error);

    Ensemble crash{1, {0.5, 0.5}, {0.0, 0.0}, {1.0, -1.0}, 0.0};
    CHECK_THROWS_AS(simulate(crash, options(1.0)), CollisionAtSingularity);
}
