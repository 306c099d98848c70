#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flock/dynamics.hpp"
#include "flock/ensemble.hpp"
#include "flock/error.hpp"

namespace flock {

/// Configuration problem, reported as "<file>:<line>: field '<name>': <reason>".
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Parsed flat JSON run configuration. Exactly one initial-datum source is set: a named
/// fixture, an inline atom list, an ensemble file, a samples file or a uniform density box.
struct RunConfig {
    std::string kind; // "simulate" or "converge"; empty when the file does not say
    SimOptions options;

    std::string fixture;
    std::optional<Ensemble> atoms;
    std::optional<WeightedSamples> samples;
    std::optional<DensityBox> density;

    std::optional<double> h; // quantization cell size for density and sample sources
    std::filesystem::path output_dir;

    std::optional<double> R0; // support bound radius; defaults to the initial support
    double p = 1.05;
    int observable_coordinate = 0;

    std::vector<double> h_list;
    std::vector<double> sample_times;
    std::vector<double> caps;

    // random_cloud fixture
    std::size_t n = 10;
    int dim = 1;
    double radius = 1.0;
};

/// Relative paths inside the file resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& origin,
                       const std::filesystem::path& base_dir = {});

/// Initial ensemble of a config; density and sample sources are quantized with cell size h.
Ensemble initial_ensemble(const RunConfig& cfg);

/// Initial datum of a config for the convergence study; atom sources become samples.
InitialDatum initial_datum(const RunConfig& cfg);

} // namespace flock
