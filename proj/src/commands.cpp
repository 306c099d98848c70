#include "flock/commands.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "flock/acceptance.hpp"
#include "flock/diagnostics.hpp"
#include "flock/flat_metric.hpp"
#include "flock/io.hpp"
#include "flock/meanfield.hpp"

namespace flock::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs body inside the output directory; any exception leaves a marker file behind.
template <class Body>
int guarded(const RunConfig& cfg, std::ostream& log, Body body)
{
    if (cfg.output_dir.empty()) {
        fmt::print(log, "error: field 'output_dir' is required\n");
        return 2;
    }
    try {
        fs::create_directories(cfg.output_dir);
        fs::remove(cfg.output_dir / kFailedMarker);
    } catch (const fs::filesystem_error& ex) {
        fmt::print(log, "error: {}\n", ex.what());
        return 2;
    }
    try {
        return body();
    } catch (const std::exception& ex) {
        fmt::print(log, "error: {}\n", ex.what());
        try {
            io::write_text_file(cfg.output_dir / kFailedMarker, std::string(ex.what()) + "\n");
        } catch (const std::exception&) {
        }
        return 1;
    }
}

json assertion(bool passed, double value, double bound)
{
    return {{"passed", passed}, {"value", value}, {"bound", bound}};
}

bool all_pass(const json& assertions)
{
    for (const auto& [name, a] : assertions.items())
        if (!a.at("passed").get<bool>())
            return false;
    return true;
}

} // namespace

int simulate(const RunConfig& cfg, std::ostream& log)
{
    return guarded(cfg, log, [&] {
        const Ensemble e0 = initial_ensemble(cfg);
        io::write_text_file(cfg.output_dir / "initial.json", io::to_json(e0).dump(2) + "\n");

        const Trajectory traj = simulate(e0, cfg.options);
        io::write_trajectory(cfg.output_dir, traj);

        json summary;
        json assertions;
        const double mass = mass_drift(traj);
        assertions["mass_conservation"] = assertion(mass <= kMassTolerance, mass, kMassTolerance);
        if (traj.snapshots.size() >= kMinSnapshots) {
            const double R0 = cfg.R0 ? *cfg.R0 : support_radius(e0);
            const int phase = 2 * e0.dim;
            if (cfg.observable_coordinate >= phase)
                throw ConfigError(fmt::format("field 'observable_coordinate': must be below {}", phase));
            const auto g = clamped_coordinate(phase, cfg.observable_coordinate);
            const auto report = diagnose(traj, R0, cfg.p, g);
            io::write_text_file(cfg.output_dir / "report.json", io::to_json(report).dump(2) + "\n");
            assertions["support_bound"] =
                assertion(report.support_max <= report.support_bound, report.support_max, report.support_bound);
            summary["R0"] = R0;
        } else {
            summary["diagnostics"] =
                fmt::format("skipped: {} snapshots, at least {} needed", traj.snapshots.size(), kMinSnapshots);
        }
        summary["assertions"] = assertions;
        summary["passed"] = all_pass(assertions);
        summary["snapshots"] = traj.snapshots.size();
        summary["merges"] = traj.events.size();
        summary["final_particles"] = traj.snapshots.back().size();
        io::write_text_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

        fmt::print(log, "simulated {} particles to t = {} ({} snapshots, {} merges) -> {}\n", e0.size(),
                   cfg.options.t_end, traj.snapshots.size(), traj.events.size(), cfg.output_dir.string());
        return summary["passed"].get<bool>() ? 0 : 1;
    });
}

int converge(const RunConfig& cfg, std::ostream& log)
{
    return guarded(cfg, log, [&] {
        if (cfg.h_list.empty())
            throw ConfigError("field 'h_list': required for converge");
        const auto sample_times = cfg.sample_times.empty() ? std::vector<double>{0.0, cfg.options.t_end}
                                                            : cfg.sample_times;
        const InitialDatum source = initial_datum(cfg);
        const auto rows = convergence_study(source, cfg.h_list, cfg.options, sample_times);
        io::write_text_file(cfg.output_dir / "convergence.csv", io::convergence_csv(rows));

        json assertions;
        bool rows_ok = true;
        json errors = json::array();
        for (const auto& r : rows)
            if (!r.error.empty()) {
                rows_ok = false;
                errors.push_back({{"h", r.h}, {"error", r.error}});
            }
        assertions["simulations"] = {{"passed", rows_ok}, {"errors", errors}};

        bool trend = rows_ok;
        for (std::size_t k = 1; k < rows.size(); ++k)
            trend = trend && rows[k].distance < rows[k - 1].distance;
        assertions["cauchy_trend"] = {{"passed", trend}};

        bool bound = true;
        double worst = 0.0;
        for (double h : cfg.h_list) {
            const double d0 = bl_distance(empirical_measure(quantize(source, h)),
                                          empirical_measure(quantize(source, h / 2)));
            bound = bound && d0 <= h / 2;
            worst = std::max(worst, d0 / (h / 2));
        }
        assertions["quantization_bound"] = assertion(bound, worst, 1.0);

        json summary;
        if (!cfg.caps.empty()) {
            if (!cfg.options.weight.is_capped())
                throw ConfigError("field 'caps': the cap comparison needs weight \"capped\"");
            const Ensemble e0 = cfg.h ? quantize(source, *cfg.h) : quantize(source, cfg.h_list.front());
            const auto caps = cap_consistency(e0, cfg.caps, cfg.options);
            io::write_text_file(cfg.output_dir / "caps.csv", io::cap_csv(caps));
            json jcaps = json::array();
            for (const auto& c : caps)
                jcaps.push_back({{"cap_a", c.cap_a},
                                 {"cap_b", c.cap_b},
                                 {"deviation", c.deviation},
                                 {"window_end", c.window_end},
                                 {"window_empty", c.window_empty}});
            summary["caps"] = jcaps;
        }

        json jrows = json::array();
        for (const auto& r : rows)
            jrows.push_back({{"h", r.h}, {"N", r.particles}, {"D", r.distance}});
        summary["rows"] = jrows;
        summary["assertions"] = assertions;
        summary["passed"] = all_pass(assertions);
        io::write_text_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

        for (const auto& r : rows)
            fmt::print(log, "h = {:<8g} N = {:<6} D = {:.6g}{}\n", r.h, r.particles, r.distance,
                       r.error.empty() ? "" : "  (" + r.error + ")");
        return summary["passed"].get<bool>() ? 0 : 1;
    });
}

int distance(const fs::path& mu, const fs::path& nu, std::ostream& out)
{
    const auto a = io::read_measure_file(mu);
    const auto b = io::read_measure_file(nu);
    fmt::print(out, "{:.12f}\n", bl_distance(a, b));
    return 0;
}

int verify(bool fast, const fs::path& report, std::ostream& log)
{
    const auto results = acceptance::run(fast);
    for (const auto& r : results)
        fmt::print(log, "{}\n", acceptance::summary_line(r));
    auto j = acceptance::to_json(results);
    j["fast"] = fast;
    if (report.has_parent_path())
        fs::create_directories(report.parent_path());
    io::write_text_file(report, j.dump(2) + "\n");
    const bool ok = acceptance::all_passed(results);
    fmt::print(log, "{} -> {}\n", ok ? "all criteria passed" : "some criteria failed", report.string());
    return ok ? 0 : 1;
}

} // namespace flock::commands
