#include "flock/fixtures.hpp"

#include <cmath>
#include <random>

#include "flock/error.hpp"

namespace flock::fixtures {

Ensemble two_body(double r0, double w0)
{
    return {1, {0.5, 0.5}, {0.0, r0}, {-0.5 * w0, 0.5 * w0}, 0.0};
}

double two_body_invariant(const Ensemble& e, double alpha)
{
    const double r = e.positions[1] - e.positions[0];
    const double w = e.velocities[1] - e.velocities[0];
    return w + std::copysign(std::pow(std::abs(r), 1.0 - alpha) / (1.0 - alpha), r);
}

Ensemble flocking_pair()
{
    return two_body(1.0, -0.5);
}

double flocking_separation()
{
    const double energy = -0.5 + 1.0 / (1.0 - kAlpha);
    return std::pow((1.0 - kAlpha) * energy, 1.0 / (1.0 - kAlpha));
}

Ensemble sticking_pair()
{
    return two_body(1.0, -1.0 / (1.0 - kAlpha));
}

double sticking_time()
{
    return (1.0 - kAlpha) / kAlpha;
}

Ensemble colocated_pair()
{
    return {1, {0.5, 0.5}, {0.0, 0.0}, {1.0, -1.0}, 0.0};
}

Ensemble equal_velocity_cloud()
{
    return {2, {0.25, 0.25, 0.25, 0.25}, {0.0, 0.0, 0.5, 0.0, 0.0, 0.5, -0.5, -0.5}, {0.3, -0.4, 0.3, -0.4, 0.3, -0.4, 0.3, -0.4},
            0.0};
}

SimOptions singular_options(double t_end)
{
    SimOptions o;
    o.weight = WeightSpec::singular(kAlpha);
    o.t_end = t_end;
    return o;
}

Ensemble random_cloud(std::uint64_t seed, std::size_t n, int dim, double radius)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit, mass(0.2, 1.0);
    // uniform in the ball: Gaussian direction, radius ~ U^(1/dim)
    auto in_ball = [&](std::vector<double>& out) {
        std::vector<double> dir(dim);
        double n2 = 0.0;
        for (double& c : dir) {
            c = gauss(rng);
            n2 += c * c;
        }
        const double r = radius * std::pow(unit(rng), 1.0 / dim) / std::sqrt(n2);
        for (double c : dir)
            out.push_back(r * c);
    };
    Ensemble e;
    e.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        e.masses.push_back(mass(rng));
        in_ball(e.positions);
        in_ball(e.velocities);
    }
    const double s = total_mass(e);
    for (double& m : e.masses)
        m /= s;
    return e;
}

DensityBox uniform_box()
{
    return {1, {0.0, 0.0}, {1.0, 1.0}, [](std::span<const double>) { return 1.0; }};
}

namespace {

Ensemble three_body(double closing)
{
    return {1, {0.4, 0.4, 0.2}, {0.0, 1.0, 3.0}, {0.5 * closing, -0.5 * closing, 0.0}, 0.0};
}

enum class Outcome { Stick, Cross, Flock };

Outcome classify(const Ensemble& e0, const SimOptions& opts)
{
    Trajectory t;
    try {
        t = simulate(e0, opts);
    } catch (const StiffnessFailure&) {
        return Outcome::Cross;
    }
    for (const auto& ev : t.events)
        for (const auto& c : ev.clusters)
            if (c == Cluster{0, 1})
                return Outcome::Stick;
    const Ensemble& last = t.snapshots.back();
    if (last.size() == 3 && last.positions[0] > last.positions[1])
        return Outcome::Cross;
    return Outcome::Flock;
}

} // namespace

Ensemble three_body_sticking(const SimOptions& opts)
{
    double lo = 0.5, hi = 3.0; // flock at lo, cross at hi
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        switch (classify(three_body(mid), opts)) {
        case Outcome::Stick:
            return three_body(mid);
        case Outcome::Cross:
            hi = mid;
            break;
        case Outcome::Flock:
            lo = mid;
            break;
        }
    }
    throw SolverFault("no sticking velocity found for the three-body fixture");
}

} // namespace flock::fixtures
