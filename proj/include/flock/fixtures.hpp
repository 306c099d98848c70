#pragma once

#include <cstdint>

#include "flock/dynamics.hpp"
#include "flock/ensemble.hpp"

// Bundled initial configurations used by the acceptance suite, the CLI and the tests.
namespace flock::fixtures {

inline constexpr double kAlpha = 0.25;

/// Two equal masses in d=1 at x = (0, r0) with relative velocity w0 (center of mass at rest).
Ensemble two_body(double r0, double w0);

/// w + sign(r) |r|^(1-alpha) / (1-alpha) for a two-particle d=1 state.
double two_body_invariant(const Ensemble& e, double alpha);

/// E = 5/6: r0 = 1, w0 = -1/2. Flocks to r* = (0.625)^(4/3).
Ensemble flocking_pair();
double flocking_separation();

/// E = 0: r0 = 1, w0 = -4/3. Sticks at t = (1 - alpha) / alpha = 3.
Ensemble sticking_pair();
double sticking_time();

/// Co-located pair in d=1 with velocities +1 and -1.
Ensemble colocated_pair();

/// Four particles in d=2 sharing one velocity.
Ensemble equal_velocity_cloud();

/// Singular weight, defaults otherwise.
SimOptions singular_options(double t_end);

/// N particles in B(R0) (both x and v), masses uniform in [0.2, 1] then normalized.
Ensemble random_cloud(std::uint64_t seed, std::size_t n, int dim, double radius);

/// Uniform density on [0, 1] x [0, 1] in d=1 phase space.
DensityBox uniform_box();

/// d=1 three-body state (masses 0.4, 0.4, 0.2 at x = 0, 1, 3, third particle at rest)
/// whose first two particles stick under the singular weight. The pair's closing speed
/// is found by bisection between crossing and flocking outcomes.
Ensemble three_body_sticking(const SimOptions& opts);

} // namespace flock::fixtures
