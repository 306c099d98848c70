#pragma once

#include <filesystem>
#include <ostream>

#include "flock/config.hpp"

// Subcommand bodies behind the command-line tool. Each returns the process exit status:
// 0 iff every assertion of the run passed.
namespace flock::commands {

/// Writes initial.json, trajectory.json, snapshots.csv, events.csv, report.json and
/// summary.json into the output directory.
int simulate(const RunConfig& cfg, std::ostream& log);

/// Writes convergence.csv, caps.csv (when caps are configured) and summary.json.
int converge(const RunConfig& cfg, std::ostream& log);

/// Prints the flat distance between two measure files with 12 decimals.
int distance(const std::filesystem::path& mu, const std::filesystem::path& nu, std::ostream& out);

/// Runs the acceptance suite, printing one line per criterion and writing a JSON report.
int verify(bool fast, const std::filesystem::path& report, std::ostream& log);

/// Marker written next to partial outputs of a failed run.
inline constexpr const char* kFailedMarker = ".failed";

} // namespace flock::commands
