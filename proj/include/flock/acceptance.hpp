#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flock::acceptance {

struct Outcome {
    bool passed = false;
    bool skipped = false;
    double value = 0.0;     // measured quantity compared against the threshold
    double threshold = 0.0;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    bool slow; // skipped by the fast suite
    std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria();

struct Result {
    int id;
    std::string name;
    Outcome outcome;
    double seconds;
};

/// Runs every criterion in order; with fast set the slow ones are reported as skipped.
/// Exceptions thrown by a check count as failures.
std::vector<Result> run(bool fast);

bool all_passed(const std::vector<Result>& results);

std::string summary_line(const Result& r);

nlohmann::json to_json(const std::vector<Result>& results);

} // namespace flock::acceptance
