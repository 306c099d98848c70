#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flock/ensemble.hpp"
#include "flock/kernel.hpp"

namespace flock {

struct SimOptions {
    WeightSpec weight = WeightSpec::singular(0.25);
    double t_end = 1.0;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double stick_dx = 1e-6;
    double stick_dv = 1e-6;
    double max_dt = 0.05;
    double output_stride = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

/// a_i = sum_j m_j (v_j - v_i) psi(|x_j - x_i|), row-major like Ensemble::velocities.
/// Throws CollisionAtSingularity when a singular weight meets two coincident particles
/// with distinct velocities.
std::vector<double> alignment_rhs(const Ensemble& e, const WeightSpec& w);

struct StepResult {
    Ensemble state;
    double dt_used;
    double dt_next;
};

/// One accepted Dormand-Prince 5(4) step. The attempted size is capped by max_dt and, for
/// the singular weight, by half the smallest ratio r_ij / |v_i - v_j| over pairs farther
/// apart than stick_dx.
/// Rejected attempts shrink the step; falling below 1e-14 * t_end throws StiffnessFailure.
StepResult step(const Ensemble& e, const SimOptions& opts, double dt_suggest);

/// Largest step the pair-separation limiter allows for this state.
double separation_step_limit(const Ensemble& e, double stick_dx);

using Cluster = std::vector<std::size_t>;

/// Connected components of size >= 2 of the graph with an edge (i, j) whenever
/// |x_i - x_j| <= stick_dx and |v_i - v_j| <= stick_dv. Indices ascend within each
/// cluster and clusters are ordered by their smallest index.
std::vector<Cluster> detect_sticking(const Ensemble& e, double stick_dx, double stick_dv);

struct MergeEvent {
    double time;
    std::vector<Cluster> clusters;
    Ensemble before;
    Ensemble after;
};

struct Trajectory {
    std::vector<Ensemble> snapshots;
    std::vector<MergeEvent> events;
    SimOptions options;
};

/// Integrates from e0.time to opts.t_end, merging every sticking cluster after each
/// accepted step. Snapshots are taken at e0.time, at every multiple of output_stride,
/// at t_end and right after each merge (post-merge state).
Trajectory simulate(const Ensemble& e0, const SimOptions& opts);

/// Snapshot recorded at time t (within 1e-9 * max(1, |t|)); throws if there is none.
const Ensemble& state_at(const Trajectory& traj, double t);

/// State at the left limit of snapshot k: the pre-merge state if an event happened at
/// that snapshot's time, else the snapshot itself.
const Ensemble& left_state(const Trajectory& traj, std::size_t k);

double min_pairwise_distance(const Ensemble& e);

} // namespace flock
