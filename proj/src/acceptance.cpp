#include "flock/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "flock/diagnostics.hpp"
#include "flock/dynamics.hpp"
#include "flock/fixtures.hpp"
#include "flock/flat_metric.hpp"
#include "flock/meanfield.hpp"

namespace flock::acceptance {

namespace {

using fixtures::kAlpha;

SimOptions capped_options(double t_end, double cap)
{
    SimOptions o = fixtures::singular_options(t_end);
    o.weight = WeightSpec::capped(kAlpha, cap);
    return o;
}

struct BundledRun {
    std::string name;
    Trajectory traj;
};

// Every bundled fixture simulated once; shared by the criteria that sweep all runs.
const std::vector<BundledRun>& bundled_runs()
{
    static const std::vector<BundledRun> runs = [] {
        std::vector<BundledRun> out;
        auto add = [&](std::string name, const Ensemble& e0, const SimOptions& o) {
            out.push_back({std::move(name), simulate(e0, o)});
        };
        add("flocking pair", fixtures::flocking_pair(), fixtures::singular_options(20.0));
        add("sticking pair", fixtures::sticking_pair(), fixtures::singular_options(4.0));
        const auto three = fixtures::singular_options(6.0);
        add("three-body sticking", fixtures::three_body_sticking(three), three);
        auto cone = capped_options(0.1, 1000.0);
        cone.output_stride = 0.001;
        add("co-located pair", fixtures::colocated_pair(), cone);
        add("equal-velocity cloud", fixtures::equal_velocity_cloud(), fixtures::singular_options(1.0));
        add("random cloud", fixtures::random_cloud(2024, 40, 2, 1.0), fixtures::singular_options(5.0));
        add("uniform box h=0.125", quantize(fixtures::uniform_box(), 0.125), capped_options(1.0, 100.0));
        return out;
    }();
    return runs;
}

const Trajectory& bundled(const std::string& name)
{
    for (const auto& r : bundled_runs())
        if (r.name == name)
            return r.traj;
    throw std::logic_error("no bundled run named " + name);
}

Outcome verdict(bool passed, double value, double threshold, std::string detail)
{
    Outcome o;
    o.passed = passed;
    o.value = value;
    o.threshold = threshold;
    o.detail = std::move(detail);
    return o;
}

Outcome mass_conservation()
{
    constexpr double tol = 1e-12;
    double worst = 0.0;
    std::size_t merges = 0;
    for (const auto& r : bundled_runs()) {
        worst = std::max(worst, std::abs(total_mass(r.traj.snapshots.back()) - 1.0));
        merges += r.traj.events.size();
    }
    return verdict(worst <= tol && merges >= 1, worst, tol,
                   fmt::format("{} runs, {} merge events", bundled_runs().size(), merges));
}

Outcome momentum_conservation()
{
    constexpr double tol = 1e-8;
    const double drift = momentum_drift(bundled("random cloud"));

    // merges in isolation: dyadic masses and velocities make the weighted mean exact
    Ensemble e{1, {0.25, 0.125, 0.5, 0.125}, {0.0, 0.0, 1.0, 1.0}, {1.5, -0.75, 0.25, 2.0}, 0.0};
    const auto merged = merge_clusters(e, {{0, 1}, {2, 3}});
    const auto before = total_momentum(e), after = total_momentum(merged);
    const double isolated = std::abs(before[0] - after[0]);

    // logged events of the bundled runs, up to round-off of the weighted mean
    constexpr double event_tol = 1e-15;
    double logged = 0.0;
    for (const auto& r : bundled_runs())
        for (const auto& ev : r.traj.events) {
            const auto p = total_momentum(ev.before), q = total_momentum(ev.after);
            for (std::size_t k = 0; k < p.size(); ++k)
                logged = std::max(logged, std::abs(p[k] - q[k]));
        }
    return verdict(drift <= tol && isolated == 0.0 && logged <= event_tol, drift, tol,
                   fmt::format("isolated merge change {}, logged merge change {:.3g}", isolated, logged));
}

Outcome support_bound()
{
    const auto check = support_bound_check(bundled("uniform box h=0.125"), std::sqrt(2.0));
    return verdict(check.holds, check.support_max, check.bound, "uniform box, T = 1");
}

Outcome first_integral()
{
    constexpr double tol = 1e-6;
    const auto traj = simulate(fixtures::flocking_pair(), fixtures::singular_options(1.0));
    const double e0 = fixtures::two_body_invariant(traj.snapshots.front(), kAlpha);
    double drift = 0.0;
    for (const auto& s : traj.snapshots)
        drift = std::max(drift, std::abs(fixtures::two_body_invariant(s, kAlpha) - e0));
    return verdict(drift < tol, drift, tol, fmt::format("E(0) = {:.12f}", e0));
}

Outcome flocking_separation()
{
    constexpr double tol = 1e-3;
    const auto& last = bundled("flocking pair").snapshots.back();
    const double r = last.positions[1] - last.positions[0];
    const double err = std::abs(r - fixtures::flocking_separation());
    return verdict(err <= tol, err, tol,
                   fmt::format("r(20) = {:.10f}, r* = {:.10f}", r, fixtures::flocking_separation()));
}

Outcome finite_time_sticking()
{
    constexpr double tol = 0.02;
    const auto& traj = bundled("sticking pair");
    if (traj.events.size() != 1)
        return verdict(false, double(traj.events.size()), 1.0, "expected exactly one merge event");
    const double t = traj.events.front().time;
    const double err = std::abs(t - fixtures::sticking_time());
    return verdict(err <= tol, err, tol, fmt::format("merge at t = {:.6f}, predicted {}", t, fixtures::sticking_time()));
}

AtomicMeasure random_measure(std::mt19937_64& rng, int dim, std::size_t atoms, double mass)
{
    std::uniform_real_distribution<double> coord(-1.5, 1.5), weight(0.05, 1.0);
    AtomicMeasure mu;
    mu.dim = dim;
    double total = 0.0;
    for (std::size_t k = 0; k < atoms; ++k) {
        for (int c = 0; c < dim; ++c)
            mu.points.push_back(coord(rng));
        mu.weights.push_back(weight(rng));
        total += mu.weights.back();
    }
    for (double& w : mu.weights)
        w *= mass / total;
    return mu;
}

AtomicMeasure delta(std::vector<double> point, double weight)
{
    AtomicMeasure mu;
    mu.dim = int(point.size());
    mu.points = std::move(point);
    mu.weights = {weight};
    return mu;
}

Outcome flat_metric_correctness()
{
    constexpr double tol = 1e-9;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> atoms(1, 4);
    std::uniform_real_distribution<double> mass(0.5, 1.5);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto mu = random_measure(rng, 2, atoms(rng), 1.0);
        const auto nu = random_measure(rng, 2, atoms(rng), k % 2 ? 1.0 : mass(rng));
        worst = std::max(worst, std::abs(bl_distance(mu, nu) - bl_distance_bruteforce(mu, nu)));
    }

    bool unit_exact = true, colocated_exact = true;
    bool lipschitz = true;
    std::uniform_real_distribution<double> coord(-3.0, 3.0), weight(0.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const double a = coord(rng), b = a + std::abs(coord(rng));
        const double s = b - a; // the separation actually represented
        const double d = bl_distance(delta({a, 0.0}, 1.0), delta({b, 0.0}, 1.0));
        unit_exact = unit_exact && d == std::min(s, 2.0);
        lipschitz = lipschitz && d <= 2.0 * s;
        const double wa = weight(rng) + 0.01, wb = weight(rng) + 0.01;
        colocated_exact = colocated_exact && bl_distance(delta({a, s}, wa), delta({a, s}, wb)) == std::abs(wa - wb);

        const std::vector<double> x1{coord(rng), coord(rng)}, x2{coord(rng), coord(rng)};
        const double gap = std::hypot(x1[0] - x2[0], x1[1] - x2[1]);
        lipschitz = lipschitz && bl_distance(delta(x1, 1.0), delta(x2, 1.0)) <= 2.0 * gap;
    }
    auto word = [](bool ok) { return ok ? "exact" : "violated"; };
    return verdict(worst <= tol && unit_exact && colocated_exact && lipschitz, worst, tol,
                   fmt::format("unit deltas {}, co-located deltas {}, d <= 2|x1 - x2| {}", word(unit_exact),
                               word(colocated_exact), lipschitz ? "holds" : "violated"));
}

LipschitzObservable random_observable(std::mt19937_64& rng, int dim)
{
    std::uniform_real_distribution<double> u(-1.5, 1.5), bound(0.2, 2.0);
    std::uniform_int_distribution<int> count(1, 4);
    std::vector<AffinePiece> pieces(count(rng));
    for (auto& p : pieces) {
        p.slope.resize(dim);
        for (double& c : p.slope)
            c = u(rng);
        p.offset = u(rng);
    }
    return piecewise_linear(dim, std::move(pieces), bound(rng));
}

Outcome pairing_bound()
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> atoms(1, 6);
    int violations = 0;
    double worst_ratio = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto g = random_observable(rng, 2);
        const auto mu = random_measure(rng, 2, atoms(rng), 1.0);
        const auto nu = random_measure(rng, 2, atoms(rng), 1.0);
        const auto check = pairing_bound_check(g, mu, nu);
        violations += check.holds ? 0 : 1;
        if (check.rhs > 0.0)
            worst_ratio = std::max(worst_ratio, check.lhs / check.rhs);
    }
    return verdict(violations == 0, double(violations), 0.0,
                   fmt::format("largest lhs/rhs ratio {:.6f}", worst_ratio));
}

Outcome cauchy_trend()
{
    const std::vector<double> h{0.5, 0.25, 0.125};
    auto opts = capped_options(1.0, 100.0);
    opts.rel_tol = 1e-6;
    opts.abs_tol = 1e-9;
    const auto rows = convergence_study(fixtures::uniform_box(), h, opts, {0.0, 0.5, 1.0});
    for (const auto& r : rows)
        if (!r.error.empty())
            return verdict(false, r.h, 0.0, "simulation failed: " + r.error);

    bool bound = true;
    double worst_t0 = 0.0;
    for (double hk : h) {
        const double d0 = bl_distance(empirical_measure(quantize(fixtures::uniform_box(), hk)),
                                      empirical_measure(quantize(fixtures::uniform_box(), hk / 2)));
        bound = bound && d0 <= hk / 2;
        worst_t0 = std::max(worst_t0, d0 / (hk / 2));
    }
    const bool trend = rows[2].distance < rows[1].distance && rows[1].distance < rows[0].distance;
    return verdict(trend && bound, rows[2].distance, rows[1].distance,
                   fmt::format("D = {:.6g} / {:.6g} / {:.6g} (N = {}/{}/{}), max D(h,0)/(h/2) = {:.4f}",
                               rows[0].distance, rows[1].distance, rows[2].distance, rows[0].particles,
                               rows[1].particles, rows[2].particles, worst_t0));
}

Outcome cap_step_consistency()
{
    constexpr double tol = 1e-6;
    auto opts = capped_options(20.0, 10.0);
    opts.rel_tol = 1e-8;
    opts.abs_tol = 1e-9;
    const auto rows = cap_consistency(fixtures::flocking_pair(), {10.0, 1000.0}, opts);
    const bool empty = rows.front().window_empty;
    const double dev = max_deviation(rows);
    return verdict(!empty && dev < tol, dev, tol, fmt::format("window ends at t = {}", rows.front().window_end));
}

Outcome cone_propagation()
{
    constexpr double tol = 1e-9;
    constexpr double t_star = 0.1;
    const auto& traj = bundled("co-located pair");
    const auto& first = traj.snapshots.front();
    double worst = -INFINITY;
    std::vector<double> radii;
    for (std::size_t atom = 0; atom < first.size(); ++atom) {
        const std::vector<double> x0(first.x(atom).begin(), first.x(atom).end());
        const std::vector<double> v0(first.v(atom).begin(), first.v(atom).end());
        const double eps = cone_radius(velocity_wander(traj, atom, t_star), v0);
        radii.push_back(eps);
        worst = std::max(worst, cone_containment(traj, atom, x0, v0, eps, t_star));
    }
    // cones around v = +1 and v = -1 are disjoint when the radii sum below the gap
    const double gap = std::abs(first.velocities[0] - first.velocities[1]);
    const bool disjoint = radii[0] + radii[1] < gap;
    return verdict(worst <= tol && disjoint, worst, tol,
                   fmt::format("eps = {:.6g}, {:.6g}; cones {}", radii[0], radii[1],
                               disjoint ? "disjoint" : "overlap"));
}

Outcome restart_consistency()
{
    int failures = 0;
    double worst = 0.0, tol = 0.0;
    std::string detail;
    auto check = [&](const std::string& name, const Ensemble& e0, const SimOptions& o) {
        const auto r = atomic_preservation_experiment(e0, o);
        worst = std::max({worst, r.restart_deviation, r.refinement_deviation});
        tol = r.tolerance;
        if (!r.passed || r.merges == 0) {
            ++failures;
            detail += fmt::format("{}: {} ", name, r.merges == 0 ? "no merge" : r.message);
        }
    };
    check("sticking pair", fixtures::sticking_pair(), fixtures::singular_options(4.0));
    const auto three = fixtures::singular_options(6.0);
    check("three-body sticking", fixtures::three_body_sticking(three), three);
    return verdict(failures == 0, worst, tol, detail.empty() ? "2 merge-bearing fixtures" : detail);
}

Outcome velocity_extrema()
{
    constexpr double tol = 1e-10;
    double worst = -INFINITY;
    for (const auto& r : bundled_runs())
        worst = std::max(worst, velocity_extremum_violation(r.traj));
    return verdict(worst <= tol, worst, tol, fmt::format("{} runs", bundled_runs().size()));
}

} // namespace

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> list{
        {1, "mass conservation", false, mass_conservation},
        {2, "momentum conservation", false, momentum_conservation},
        {3, "support bound", false, support_bound},
        {4, "two-body first integral", false, first_integral},
        {5, "flocking separation", false, flocking_separation},
        {6, "finite-time sticking", false, finite_time_sticking},
        {7, "flat-metric correctness", false, flat_metric_correctness},
        {8, "pairing bound", false, pairing_bound},
        {9, "mean-field Cauchy trend", true, cauchy_trend},
        {10, "cap/step consistency", false, cap_step_consistency},
        {11, "cone propagation", false, cone_propagation},
        {12, "restart consistency", false, restart_consistency},
        {13, "velocity extremum monotonicity", false, velocity_extrema},
    };
    return list;
}

std::vector<Result> run(bool fast)
{
    std::vector<Result> out;
    for (const auto& c : criteria()) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        if (fast && c.slow) {
            o.skipped = true;
            o.passed = true;
            o.detail = "skipped in fast mode";
        } else {
            try {
                o = c.check();
            } catch (const std::exception& ex) {
                o.passed = false;
                o.detail = fmt::format("exception: {}", ex.what());
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back({c.id, c.name, std::move(o), secs});
    }
    return out;
}

bool all_passed(const std::vector<Result>& results)
{
    return std::all_of(results.begin(), results.end(), [](const Result& r) { return r.outcome.passed; });
}

std::string summary_line(const Result& r)
{
    const char* status = r.outcome.skipped ? "SKIP" : r.outcome.passed ? "PASS" : "FAIL";
    return fmt::format("[{}] {:2d} {:<31} value={:.6g} threshold={:.6g} ({:.2f}s) {}", status, r.id, r.name,
                       r.outcome.value, r.outcome.threshold, r.seconds, r.outcome.detail);
}

nlohmann::json to_json(const std::vector<Result>& results)
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : results)
        list.push_back({{"id", r.id},
                        {"name", r.name},
                        {"status", r.outcome.skipped ? "skip" : r.outcome.passed ? "pass" : "fail"},
                        {"value", r.outcome.value},
                        {"threshold", r.outcome.threshold},
                        {"detail", r.outcome.detail},
                        {"seconds", r.seconds}});
    return {{"passed", all_passed(results)}, {"criteria", list}};
}

} // namespace flock::acceptance
