#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flock/dynamics.hpp"
#include "flock/flat_metric.hpp"

namespace flock {

struct DiagnosticsReport {
    double mass_drift = 0.0;
    double momentum_drift = 0.0;
    double support_max = 0.0;
    double support_bound = 0.0;
    double dissipation_p = 0.0;
    double coupling_p = 0.0;
    double coupling_pp = 0.0;
    double modulus_lp = 0.0;
    double p_used = 0.0;
};

inline constexpr double kDefaultExponent = 1.05;
inline constexpr std::size_t kMinSnapshots = 8;

/// max over snapshots of |sum m - 1|
double mass_drift(const Trajectory& traj);

/// max over snapshots of |P(t) - P(t0)| with P = sum m v
double momentum_drift(const Trajectory& traj);

struct SupportCheck {
    double support_max;
    double bound;
    bool holds;
};

/// Compares the largest support radius over all snapshots with 2 R0 (t_end + 1).
/// Throws if the initial state is not contained in B(R0).
SupportCheck support_bound_check(const Trajectory& traj, double R0);

struct DissipationIntegrals {
    double dissipation_p; // int sum_i m_i |dv_i/dt|^p
    double coupling_pp;   // int sum_ij m_i m_j psi^p |v_i - v_j|^p
    double coupling_p;    // int sum_ij m_i m_j psi^p |v_i - v_j|
};

/// Trapezoid rule on the snapshot grid, one segment per pair of consecutive snapshots;
/// a segment ending at a merge uses the pre-merge state as its right endpoint.
DissipationIntegrals dissipation_integrals(const Trajectory& traj, double p);

/// G(t) = d/dt sum_i m_i g(x_i, v_i) = sum_i m_i (v_i . grad_x g + a_i . grad_v g).
double observable_rate(const Ensemble& e, const WeightSpec& w, const LipschitzObservable& g);

/// L^p([t0, t_end]) norm of G(t).
double time_modulus(const Trajectory& traj, const LipschitzObservable& g, double p);

/// max over snapshot times t in (t0, t_star] of |x_atom(t) - x0 - v0 (t - t0)| - eps (t - t0).
/// The window stops at the first merge, whose pre-merge state is the last sample.
/// Returns -infinity when the window holds no snapshot.
double cone_containment(const Trajectory& traj, std::size_t atom, std::span<const double> x0,
                        std::span<const double> v0, double eps, double t_star);

/// sqrt(2 R (R + |v0|))
double cone_radius(double velocity_wander, std::span<const double> v0);

/// max |v_atom(t) - v_atom(t0)| over the same window as cone_containment.
double velocity_wander(const Trajectory& traj, std::size_t atom, double t_star);

/// Largest increase of max_i v_i^k or decrease of min_i v_i^k between consecutive
/// snapshots (merges included); nonpositive for the exact flow.
double velocity_extremum_violation(const Trajectory& traj);

DiagnosticsReport diagnose(const Trajectory& traj, double R0, double p, const LipschitzObservable& g);

} // namespace flock
