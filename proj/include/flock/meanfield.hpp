#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flock/dynamics.hpp"
#include "flock/ensemble.hpp"

namespace flock {

struct ConvergenceRow {
    double h = 0.0;
    std::size_t particles = 0;
    double distance = 0.0; // D(h): max over sample times of d(f_h(t), f_{next h}(t))
    std::string error;     // empty unless this row or its partner failed
};

/// Quantizes the source at every cell size, simulates each resolution and compares
/// consecutive resolutions in the flat metric at the sample times. The last listed h is
/// compared with an extra resolution h/2 so that every listed h gets a D value.
/// Sample times must lie on the output grid of opts.
std::vector<ConvergenceRow> convergence_study(const InitialDatum& source, const std::vector<double>& h_list,
                                              const SimOptions& opts, const std::vector<double>& sample_times);

struct CapComparison {
    double cap_a = 0.0;
    double cap_b = 0.0;
    double deviation = 0.0;  // max |state difference| over the separated window
    double window_end = 0.0; // last snapshot time inside the window
    bool window_empty = false;
};

/// Runs one trajectory per cap (opts.weight must be capped; its cap is replaced) and
/// compares every pair of caps on the window where all particles stay farther apart than
/// the activation radius of the smallest cap and no merge has happened.
std::vector<CapComparison> cap_consistency(const Ensemble& e0, const std::vector<double>& caps,
                                           const SimOptions& opts);

double max_deviation(const std::vector<CapComparison>& rows);

struct PreservationReport {
    bool passed = true;
    double tolerance = 0.0;
    double refinement_deviation = 0.0; // rel_tol vs rel_tol/10 before the first merge
    double restart_deviation = 0.0;    // restart from each post-merge state vs continuation
    std::size_t merges = 0;
    double first_divergence = -1.0; // time of the first violation, -1 if none
    std::string message;
};

/// Step-refinement and restart consistency of the atomic flow: the run is compared with a
/// run at a tenfold tighter tolerance until the first merge, and at each merge a fresh
/// simulation started from the post-merge state is compared with the continued original.
/// Agreement is required within 10 * rel_tol.
PreservationReport atomic_preservation_experiment(const Ensemble& e0, const SimOptions& opts);

/// max_q |a_q - b_q| over positions and velocities; requires equal particle counts.
double state_deviation(const Ensemble& a, const Ensemble& b);

} // namespace flock
