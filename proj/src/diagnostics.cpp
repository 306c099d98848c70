#include "flock/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "flock/error.hpp"
#include "flock/linalg.hpp"

namespace flock {

namespace {

void require_grid(const Trajectory& traj)
{
    if (traj.snapshots.size() < kMinSnapshots)
        throw InvalidArgument(
            fmt::format("trajectory has {} snapshots, need at least {}", traj.snapshots.size(), kMinSnapshots));
}

void require_exponent(double p)
{
    if (!(p > 1.0) || !std::isfinite(p))
        throw InvalidArgument(fmt::format("exponent p={} must exceed 1", p));
}

// Trapezoid rule of a per-state integrand over the trajectory.
template <typename F>
double integrate_in_time(const Trajectory& traj, F integrand)
{
    double total = 0.0;
    double left = integrand(traj.snapshots.front());
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const double dt = traj.snapshots[k].time - traj.snapshots[k - 1].time;
        const double right = integrand(left_state(traj, k));
        total += 0.5 * dt * (left + right);
        left = integrand(traj.snapshots[k]);
    }
    return total;
}

const Ensemble& initial_state(const Trajectory& traj)
{
    const Ensemble& first = traj.snapshots.front();
    if (!traj.events.empty() && traj.events.front().time == first.time)
        return traj.events.front().before;
    return first;
}

} // namespace

double mass_drift(const Trajectory& traj)
{
    double drift = 0.0;
    for (const auto& s : traj.snapshots)
        drift = std::max(drift, std::abs(total_mass(s) - 1.0));
    return drift;
}

double momentum_drift(const Trajectory& traj)
{
    const auto p0 = total_momentum(initial_state(traj));
    double drift = 0.0;
    for (const auto& s : traj.snapshots) {
        const auto p = total_momentum(s);
        double d2 = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k)
            d2 += (p[k] - p0[k]) * (p[k] - p0[k]);
        drift = std::max(drift, std::sqrt(d2));
    }
    return drift;
}

SupportCheck support_bound_check(const Trajectory& traj, double R0)
{
    const double r0 = support_radius(initial_state(traj));
    if (r0 > R0)
        throw InvalidArgument(fmt::format("initial support radius {} exceeds R0={}", r0, R0));
    double rmax = 0.0;
    for (const auto& s : traj.snapshots)
        rmax = std::max(rmax, support_radius(s));
    const double bound = 2.0 * R0 * (traj.options.t_end + 1.0);
    return {rmax, bound, rmax <= bound};
}

DissipationIntegrals dissipation_integrals(const Trajectory& traj, double p)
{
    require_exponent(p);
    require_grid(traj);
    const WeightSpec& w = traj.options.weight;

    auto dissipation = [&](const Ensemble& e) {
        const auto a = alignment_rhs(e, w);
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            s += e.masses[i] * std::pow(norm({a.data() + i * e.dim, std::size_t(e.dim)}), p);
        return s;
    };
    // Ordered pairs i != j, so each unordered pair counts twice.
    auto coupling = [&](const Ensemble& e, double velocity_power) {
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (std::size_t j = i + 1; j < e.size(); ++j) {
                const double gap = distance(e.v(i), e.v(j));
                if (gap == 0.0)
                    continue;
                const double psi = evaluate(w, distance(e.x(i), e.x(j)));
                s += 2.0 * e.masses[i] * e.masses[j] * std::pow(psi, p) * std::pow(gap, velocity_power);
            }
        return s;
    };

    return {integrate_in_time(traj, dissipation),
            integrate_in_time(traj, [&](const Ensemble& e) { return coupling(e, p); }),
            integrate_in_time(traj, [&](const Ensemble& e) { return coupling(e, 1.0); })};
}

double observable_rate(const Ensemble& e, const WeightSpec& w, const LipschitzObservable& g)
{
    if (g.dim != 2 * e.dim)
        throw InvalidArgument(fmt::format("observable dimension {} does not match phase space {}", g.dim, 2 * e.dim));
    const auto a = alignment_rhs(e, w);
    std::vector<double> z(g.dim), grad(g.dim);
    double rate = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        std::copy(e.x(i).begin(), e.x(i).end(), z.begin());
        std::copy(e.v(i).begin(), e.v(i).end(), z.begin() + e.dim);
        g.gradient(z, grad);
        double s = 0.0;
        for (int k = 0; k < e.dim; ++k)
            s += e.v(i)[k] * grad[k] + a[i * e.dim + k] * grad[e.dim + k];
        rate += e.masses[i] * s;
    }
    return rate;
}

double time_modulus(const Trajectory& traj, const LipschitzObservable& g, double p)
{
    require_exponent(p);
    require_grid(traj);
    const WeightSpec& w = traj.options.weight;
    const double integral =
        integrate_in_time(traj, [&](const Ensemble& e) { return std::pow(std::abs(observable_rate(e, w, g)), p); });
    return std::pow(integral, 1.0 / p);
}

namespace {

// Snapshot states of one atom over (t0, t_star], stopping at the first merge.
template <typename F>
void for_each_window_state(const Trajectory& traj, std::size_t atom, double t_star, F visit)
{
    if (atom >= traj.snapshots.front().size())
        throw InvalidArgument(fmt::format("atom {} does not exist (N={})", atom, traj.snapshots.front().size()));
    const double first_merge = [&] {
        for (const auto& ev : traj.events)
            if (ev.time > traj.snapshots.front().time)
                return ev.time;
        return std::numeric_limits<double>::infinity();
    }();
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const double t = traj.snapshots[k].time;
        if (t > t_star || t > first_merge)
            break;
        visit(left_state(traj, k));
    }
}

} // namespace

double cone_containment(const Trajectory& traj, std::size_t atom, std::span<const double> x0,
                        std::span<const double> v0, double eps, double t_star)
{
    const double t0 = traj.snapshots.front().time;
    double worst = -std::numeric_limits<double>::infinity();
    for_each_window_state(traj, atom, t_star, [&](const Ensemble& e) {
        const double tau = e.time - t0;
        double d2 = 0.0;
        for (int k = 0; k < e.dim; ++k) {
            const double off = e.x(atom)[k] - x0[k] - v0[k] * tau;
            d2 += off * off;
        }
        worst = std::max(worst, std::sqrt(d2) - eps * tau);
    });
    return worst;
}

double cone_radius(double velocity_wander, std::span<const double> v0)
{
    return std::sqrt(2.0 * velocity_wander * (velocity_wander + norm(v0)));
}

double velocity_wander(const Trajectory& traj, std::size_t atom, double t_star)
{
    const Ensemble& first = traj.snapshots.front();
    if (atom >= first.size())
        throw InvalidArgument(fmt::format("atom {} does not exist (N={})", atom, first.size()));
    const std::vector<double> v0(first.v(atom).begin(), first.v(atom).end());
    double wander = 0.0;
    for_each_window_state(traj, atom, t_star,
                          [&](const Ensemble& e) { wander = std::max(wander, distance(e.v(atom), v0)); });
    return wander;
}

double velocity_extremum_violation(const Trajectory& traj)
{
    auto extrema = [](const Ensemble& e) {
        std::vector<double> hi(e.dim, -std::numeric_limits<double>::infinity());
        std::vector<double> lo(e.dim, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e.dim; ++k) {
                hi[k] = std::max(hi[k], e.v(i)[k]);
                lo[k] = std::min(lo[k], e.v(i)[k]);
            }
        return std::pair{hi, lo};
    };
    double worst = -std::numeric_limits<double>::infinity();
    auto compare = [&](const Ensemble& before, const Ensemble& after) {
        const auto [hi0, lo0] = extrema(before);
        const auto [hi1, lo1] = extrema(after);
        for (std::size_t k = 0; k < hi0.size(); ++k)
            worst = std::max({worst, hi1[k] - hi0[k], lo0[k] - lo1[k]});
    };
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const Ensemble& pre = left_state(traj, k);
        compare(traj.snapshots[k - 1], pre);
        if (&pre != &traj.snapshots[k])
            compare(pre, traj.snapshots[k]);
    }
    return worst;
}

DiagnosticsReport diagnose(const Trajectory& traj, double R0, double p, const LipschitzObservable& g)
{
    DiagnosticsReport r;
    r.p_used = p;
    r.mass_drift = mass_drift(traj);
    r.momentum_drift = momentum_drift(traj);
    const auto support = support_bound_check(traj, R0);
    r.support_max = support.support_max;
    r.support_bound = support.bound;
    const auto integrals = dissipation_integrals(traj, p);
    r.dissipation_p = integrals.dissipation_p;
    r.coupling_pp = integrals.coupling_pp;
    r.coupling_p = integrals.coupling_p;
    r.modulus_lp = time_modulus(traj, g, p);
    return r;
}

} // namespace flock
