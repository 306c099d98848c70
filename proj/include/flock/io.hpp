#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "flock/diagnostics.hpp"
#include "flock/dynamics.hpp"
#include "flock/ensemble.hpp"
#include "flock/meanfield.hpp"

// Persistence. Every double is written with 17 significant digits so that reading a file
// back reproduces the values bit for bit.
namespace flock::io {

using json = nlohmann::json;

std::string format_double(double v);

json to_json(const Ensemble& e);
Ensemble ensemble_from_json(const json& j);

json to_json(const AtomicMeasure& mu);
AtomicMeasure measure_from_json(const json& j);

json to_json(const WeightSpec& w);
WeightSpec weight_from_json(const json& j);

json to_json(const SimOptions& opts);
SimOptions options_from_json(const json& j);

json to_json(const DiagnosticsReport& r);

/// Header `i,m,x0..x{d-1},v0..v{d-1}`, one row per particle.
std::string ensemble_csv(const Ensemble& e);
Ensemble ensemble_from_csv(const std::string& text, double time = 0.0);

/// Writes trajectory.json (options and events), snapshots.csv (`t,i,m,x..,v..`) and
/// events.csv (`t,indices,mass_after`) into dir.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& dir);

std::string convergence_csv(const std::vector<ConvergenceRow>& rows);
std::string cap_csv(const std::vector<CapComparison>& rows);

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// AtomicMeasure file, or an Ensemble file (read as its empirical measure).
AtomicMeasure read_measure_file(const std::filesystem::path& path);

} // namespace flock::io
