#include "flock/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "flock/error.hpp"
#include "flock/linalg.hpp"

namespace flock {

void SimOptions::validate() const
{
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw InvalidArgument(fmt::format("t_end={} must be positive", t_end));
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw InvalidArgument("integrator tolerances must be positive");
    if (!(stick_dx >= 0.0) || !(stick_dv >= 0.0))
        throw InvalidArgument("sticking thresholds must be nonnegative");
    if (!(max_dt > 0.0))
        throw InvalidArgument("max_dt must be positive");
    if (!(output_stride > 0.0))
        throw InvalidArgument("output_stride must be positive");
}

std::vector<double> alignment_rhs(const Ensemble& e, const WeightSpec& w)
{
    const std::size_t n = e.size();
    const int d = e.dim;
    std::vector<double> acc(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = distance(e.x(i), e.x(j));
            bool same_velocity = true;
            for (int k = 0; k < d; ++k)
                same_velocity = same_velocity && e.v(i)[k] == e.v(j)[k];
            if (same_velocity)
                continue;
            const double psi = evaluate(w, r);
            if (!std::isfinite(psi))
                throw CollisionAtSingularity(
                    fmt::format("particles {} and {} coincide at t={} under {}", i, j, e.time, w.describe()));
            for (int k = 0; k < d; ++k) {
                const double dv = psi * (e.v(j)[k] - e.v(i)[k]);
                acc[i * d + k] += e.masses[j] * dv;
                acc[j * d + k] -= e.masses[i] * dv;
            }
        }
    }
    return acc;
}

double separation_step_limit(const Ensemble& e, double stick_dx)
{
    constexpr double tiny = 1e-300;
    double limit = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (std::size_t j = i + 1; j < e.size(); ++j) {
            const double r = distance(e.x(i), e.x(j));
            if (r <= stick_dx)
                continue;
            const double w = distance(e.v(i), e.v(j));
            limit = std::min(limit, 0.5 * r / std::max(w, tiny));
        }
    }
    return limit;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b* (fifth minus fourth order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Phase-space state y = (x, v) and its derivative (v, a).
struct Stage {
    std::vector<double> dx;
    std::vector<double> dv;
};

Stage derivative(const Ensemble& e, const WeightSpec& w)
{
    return {e.velocities, alignment_rhs(e, w)};
}

template <std::size_t K>
Ensemble advance(const Ensemble& base, double dt, const std::array<const Stage*, K>& k,
                 const std::array<double, K>& coef)
{
    Ensemble out = base;
    for (std::size_t s = 0; s < K; ++s) {
        if (coef[s] == 0.0)
            continue;
        const double f = dt * coef[s];
        for (std::size_t q = 0; q < out.positions.size(); ++q) {
            out.positions[q] += f * k[s]->dx[q];
            out.velocities[q] += f * k[s]->dv[q];
        }
    }
    return out;
}

} // namespace

StepResult step(const Ensemble& e, const SimOptions& opts, double dt_suggest)
{
    if (!(dt_suggest > 0.0))
        throw InvalidArgument(fmt::format("suggested step {} must be positive", dt_suggest));
    const double dt_floor = 1e-14 * opts.t_end;
    // Capped and regular weights give a globally Lipschitz field, so error control alone
    // resolves close encounters; only the singular weight needs the separation limiter.
    const double limit =
        opts.weight.is_singular() ? std::min(opts.max_dt, separation_step_limit(e, opts.stick_dx)) : opts.max_dt;
    double dt = std::min(dt_suggest, limit);

    const Stage k1 = derivative(e, opts.weight);
    for (;;) {
        if (dt < dt_floor)
            throw StiffnessFailure(fmt::format("step size {:.3e} underflow at t={:.17g}", dt, e.time));

        const Stage k2 = derivative(advance<1>(e, dt, {&k1}, {a21}), opts.weight);
        const Stage k3 = derivative(advance<2>(e, dt, {&k1, &k2}, {a31, a32}), opts.weight);
        const Stage k4 = derivative(advance<3>(e, dt, {&k1, &k2, &k3}, {a41, a42, a43}), opts.weight);
        const Stage k5 =
            derivative(advance<4>(e, dt, {&k1, &k2, &k3, &k4}, {a51, a52, a53, a54}), opts.weight);
        const Stage k6 = derivative(advance<5>(e, dt, {&k1, &k2, &k3, &k4, &k5}, {a61, a62, a63, a64, a65}),
                                    opts.weight);
        Ensemble next = advance<6>(e, dt, {&k1, &k2, &k3, &k4, &k5, &k6}, {b1, 0.0, b3, b4, b5, b6});
        next.time = e.time + dt;
        const Stage k7 = derivative(next, opts.weight);

        double err = 0.0;
        const std::array<const Stage*, 7> ks{&k1, &k2, &k3, &k4, &k5, &k6, &k7};
        constexpr std::array<double, 7> ec{e1, 0.0, e3, e4, e5, e6, e7};
        for (std::size_t q = 0; q < e.positions.size(); ++q) {
            double ex = 0.0, ev = 0.0;
            for (std::size_t s = 0; s < ks.size(); ++s) {
                ex += ec[s] * ks[s]->dx[q];
                ev += ec[s] * ks[s]->dv[q];
            }
            const double sx = opts.abs_tol + opts.rel_tol * std::max(std::abs(e.positions[q]), std::abs(next.positions[q]));
            const double sv =
                opts.abs_tol + opts.rel_tol * std::max(std::abs(e.velocities[q]), std::abs(next.velocities[q]));
            err = std::max({err, std::abs(dt * ex) / sx, std::abs(dt * ev) / sv});
        }

        if (err <= 1.0) {
            const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            return {std::move(next), dt, std::min(dt * grow, opts.max_dt)};
        }
        dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
    }
}

std::vector<Cluster> detect_sticking(const Ensemble& e, double stick_dx, double stick_dv)
{
    const std::size_t n = e.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i)
            i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (distance(e.x(i), e.x(j)) <= stick_dx && distance(e.v(i), e.v(j)) <= stick_dv) {
                const std::size_t a = find(i), b = find(j);
                parent[std::max(a, b)] = std::min(a, b);
            }

    std::vector<Cluster> by_root(n);
    for (std::size_t i = 0; i < n; ++i)
        by_root[find(i)].push_back(i);
    std::vector<Cluster> clusters;
    for (auto& c : by_root)
        if (c.size() >= 2)
            clusters.push_back(std::move(c));
    return clusters;
}

namespace {

bool same_time(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

// Smallest output time strictly after t: a multiple of the stride, or t_end.
double next_output_time(double t, const SimOptions& opts)
{
    auto k = std::floor(t / opts.output_stride) + 1.0;
    double next = k * opts.output_stride;
    while (next <= t || same_time(next, t)) {
        k += 1.0;
        next = k * opts.output_stride;
    }
    return std::min(next, opts.t_end);
}

} // namespace

Trajectory simulate(const Ensemble& e0, const SimOptions& opts)
{
    opts.validate();
    validate(e0);
    if (!(e0.time < opts.t_end))
        throw InvalidArgument(fmt::format("start time {} is not before t_end {}", e0.time, opts.t_end));

    Trajectory traj;
    traj.options = opts;
    Ensemble state = e0;

    auto merge_if_sticking = [&](Ensemble& s) {
        auto clusters = detect_sticking(s, opts.stick_dx, opts.stick_dv);
        if (clusters.empty())
            return false;
        Ensemble after = merge_clusters(s, clusters);
        traj.events.push_back({s.time, std::move(clusters), s, after});
        s = std::move(after);
        return true;
    };

    merge_if_sticking(state);
    traj.snapshots.push_back(state);

    double target = next_output_time(state.time, opts);
    double dt = std::min(opts.max_dt, 1e-3 * (opts.t_end - state.time));
    while (state.time < opts.t_end) {
        const double request = std::min(dt, target - state.time);
        StepResult res = step(state, opts, request);
        const bool reached = res.dt_used == request && request == target - state.time;
        state = std::move(res.state);
        if (reached || target - state.time <= 1e-12 * opts.t_end)
            state.time = target;
        // A step clipped by the output grid says nothing about the step the error
        // control would have taken, so keep the larger proposal.
        dt = reached ? std::max(res.dt_next, dt) : res.dt_next;

        const bool merged = merge_if_sticking(state);
        const bool at_output = state.time == target;
        if (merged || at_output)
            traj.snapshots.push_back(state);
        if (at_output && state.time < opts.t_end)
            target = next_output_time(state.time, opts);
    }
    return traj;
}

const Ensemble& state_at(const Trajectory& traj, double t)
{
    auto it = std::lower_bound(traj.snapshots.begin(), traj.snapshots.end(), t,
                               [](const Ensemble& s, double time) { return s.time < time && !same_time(s.time, time); });
    if (it == traj.snapshots.end() || !same_time(it->time, t))
        throw InvalidArgument(fmt::format("trajectory has no snapshot at t={}", t));
    return *it;
}

const Ensemble& left_state(const Trajectory& traj, std::size_t k)
{
    const Ensemble& s = traj.snapshots.at(k);
    for (const auto& ev : traj.events)
        if (ev.time == s.time)
            return ev.before;
    return s;
}

double min_pairwise_distance(const Ensemble& e)
{
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j)
            r = std::min(r, distance(e.x(i), e.x(j)));
    return r;
}

} // namespace flock
