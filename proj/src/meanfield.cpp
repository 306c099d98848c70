#include "flock/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "flock/error.hpp"
#include "flock/flat_metric.hpp"
#include "flock/parallel.hpp"

namespace flock {

double state_deviation(const Ensemble& a, const Ensemble& b)
{
    if (a.size() != b.size() || a.dim != b.dim)
        throw InvalidArgument(fmt::format("cannot compare states with {} and {} particles", a.size(), b.size()));
    double dev = 0.0;
    for (std::size_t q = 0; q < a.positions.size(); ++q)
        dev = std::max({dev, std::abs(a.positions[q] - b.positions[q]), std::abs(a.velocities[q] - b.velocities[q])});
    return dev;
}

namespace {

struct Resolution {
    std::size_t particles = 0;
    std::vector<AtomicMeasure> samples; // one measure per sample time
    std::string error;
};

} // namespace

std::vector<ConvergenceRow> convergence_study(const InitialDatum& source, const std::vector<double>& h_list,
                                              const SimOptions& opts, const std::vector<double>& sample_times)
{
    if (h_list.size() < 2)
        throw InvalidArgument("convergence study needs at least two cell sizes");
    for (std::size_t k = 0; k < h_list.size(); ++k) {
        if (!(h_list[k] > 0.0))
            throw InvalidArgument("cell sizes must be positive");
        if (k > 0 && !(h_list[k] < h_list[k - 1]))
            throw InvalidArgument("cell sizes must be strictly decreasing");
    }
    if (sample_times.empty())
        throw InvalidArgument("convergence study needs sample times");
    for (double t : sample_times)
        if (t < 0.0 || t > opts.t_end)
            throw InvalidArgument(fmt::format("sample time {} outside [0, {}]", t, opts.t_end));
    opts.validate();

    std::vector<double> sizes = h_list;
    sizes.push_back(0.5 * h_list.back());

    const auto runs = parallel_map<Resolution>(sizes.size(), [&](std::size_t k) {
        Resolution res;
        try {
            const Ensemble e0 = quantize(source, sizes[k]);
            res.particles = e0.size();
            const Trajectory traj = simulate(e0, opts);
            for (double t : sample_times)
                res.samples.push_back(empirical_measure(state_at(traj, t)));
        } catch (const Error& e) {
            res.error = fmt::format("h={}: {}", sizes[k], e.what());
        }
        return res;
    });

    const auto distances = parallel_map<double>(h_list.size(), [&](std::size_t k) {
        if (!runs[k].error.empty() || !runs[k + 1].error.empty())
            return std::numeric_limits<double>::quiet_NaN();
        double d = 0.0;
        for (std::size_t s = 0; s < sample_times.size(); ++s)
            d = std::max(d, bl_distance(runs[k].samples[s], runs[k + 1].samples[s]));
        return d;
    });

    std::vector<ConvergenceRow> rows;
    for (std::size_t k = 0; k < h_list.size(); ++k) {
        ConvergenceRow row{h_list[k], runs[k].particles, distances[k], runs[k].error};
        if (row.error.empty())
            row.error = runs[k + 1].error;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CapComparison> cap_consistency(const Ensemble& e0, const std::vector<double>& caps,
                                           const SimOptions& opts)
{
    if (caps.size() < 2)
        throw InvalidArgument("cap consistency needs at least two caps");
    if (!opts.weight.is_capped())
        throw InvalidArgument("cap consistency needs a capped weight");

    const auto runs = parallel_map<Trajectory>(caps.size(), [&](std::size_t k) {
        SimOptions o = opts;
        o.weight = opts.weight.with_cap(caps[k]);
        return simulate(e0, o);
    });
    const double radius = cap_activation_radius(opts.weight.with_cap(*std::min_element(caps.begin(), caps.end())));

    // A snapshot index is inside the window while every run is still unmerged and separated.
    auto separated = [&](const Trajectory& t, std::size_t k) {
        if (k >= t.snapshots.size())
            return false;
        const Ensemble& s = t.snapshots[k];
        if (s.size() != e0.size())
            return false;
        for (const auto& ev : t.events)
            if (ev.time <= s.time)
                return false;
        return min_pairwise_distance(s) > radius;
    };

    std::vector<CapComparison> rows;
    for (std::size_t a = 0; a < caps.size(); ++a)
        for (std::size_t b = a + 1; b < caps.size(); ++b) {
            CapComparison row{caps[a], caps[b], 0.0, e0.time, true};
            for (std::size_t k = 0; separated(runs[a], k) && separated(runs[b], k); ++k) {
                row.deviation = std::max(row.deviation, state_deviation(runs[a].snapshots[k], runs[b].snapshots[k]));
                row.window_end = runs[a].snapshots[k].time;
                row.window_empty = false;
            }
            rows.push_back(row);
        }
    return rows;
}

double max_deviation(const std::vector<CapComparison>& rows)
{
    double d = 0.0;
    for (const auto& r : rows)
        d = std::max(d, r.deviation);
    return d;
}

namespace {

double first_merge_after(const Trajectory& t, double start)
{
    for (const auto& ev : t.events)
        if (ev.time > start)
            return ev.time;
    return std::numeric_limits<double>::infinity();
}

// Max deviation over common snapshot times in [from, until), recording the first time the
// deviation exceeds tol.
double compare_window(const Trajectory& a, const Trajectory& b, double from, double until, double tol,
                      std::optional<double>& first_bad)
{
    double dev = 0.0;
    std::size_t j = 0;
    for (const auto& s : a.snapshots) {
        if (s.time < from || s.time >= until)
            continue;
        const double eps = 1e-12 * std::max(1.0, std::abs(s.time));
        while (j < b.snapshots.size() && b.snapshots[j].time < s.time - eps)
            ++j;
        if (j == b.snapshots.size())
            break;
        if (std::abs(b.snapshots[j].time - s.time) > eps)
            continue;
        const double d = state_deviation(s, b.snapshots[j]);
        dev = std::max(dev, d);
        if (d > tol && !first_bad)
            first_bad = s.time;
    }
    return dev;
}

} // namespace

PreservationReport atomic_preservation_experiment(const Ensemble& e0, const SimOptions& opts)
{
    PreservationReport report;
    report.tolerance = 10.0 * opts.rel_tol;
    std::optional<double> first_bad;

    SimOptions fine = opts;
    fine.rel_tol = opts.rel_tol / 10.0;
    fine.abs_tol = opts.abs_tol / 10.0;
    const auto runs = parallel_map<Trajectory>(2, [&](std::size_t k) { return simulate(e0, k == 0 ? opts : fine); });
    const Trajectory& base = runs[0];
    const Trajectory& refined = runs[1];

    const double start = base.snapshots.front().time;
    const double until = std::min(first_merge_after(base, start), first_merge_after(refined, start));
    report.refinement_deviation = compare_window(base, refined, start, until, report.tolerance, first_bad);

    std::vector<const MergeEvent*> restarts;
    for (const auto& ev : base.events)
        if (ev.time > start && ev.time < opts.t_end)
            restarts.push_back(&ev);
    report.merges = restarts.size();

    const auto restarted = parallel_map<Trajectory>(restarts.size(), [&](std::size_t k) {
        return simulate(restarts[k]->after, opts);
    });
    for (std::size_t k = 0; k < restarts.size(); ++k) {
        const double t1 = restarts[k]->time;
        const double stop = std::min(first_merge_after(base, t1), first_merge_after(restarted[k], t1));
        report.restart_deviation =
            std::max(report.restart_deviation, compare_window(base, restarted[k], t1, stop, report.tolerance, first_bad));
    }

    report.passed = !first_bad.has_value();
    if (first_bad) {
        report.first_divergence = *first_bad;
        report.message = fmt::format("trajectories diverge beyond {:.3e} at t={}", report.tolerance, *first_bad);
    } else {
        report.message = fmt::format("refinement deviation {:.3e}, restart deviation {:.3e} over {} merge(s)",
                                     report.refinement_deviation, report.restart_deviation, report.merges);
    }
    return report;
}

} // namespace flock
