#pragma once

#include <functional>
#include <span>
#include <vector>

#include "flock/ensemble.hpp"

namespace flock {

/// Bounded Lipschitz test function on R^dim with certified bounds. The gradient is used by
/// the time-modulus diagnostic; where g is not differentiable any element of the
/// generalized gradient will do.
struct LipschitzObservable {
    int dim = 2;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    double sup_bound = 0.0;
    double lip_bound = 0.0;
};

LipschitzObservable constant_observable(int dim, double c);

/// clamp(z_k, -1, 1)
LipschitzObservable clamped_coordinate(int dim, int k);

/// An affine piece a.z + b of a piecewise-linear observable.
struct AffinePiece {
    std::vector<double> slope;
    double offset;
};

/// clamp(min_k (a_k . z + b_k), -bound, bound); Lipschitz constant max_k |a_k|.
LipschitzObservable piecewise_linear(int dim, std::vector<AffinePiece> pieces, double bound);

/// Checks sup and Lipschitz bounds of g on every point and pair of points given.
bool spot_check(const LipschitzObservable& g, std::span<const double> points);

double integrate(const LipschitzObservable& g, const AtomicMeasure& mu);

/// Bounded-Lipschitz distance sup_g |int g dmu - int g dnu| over ||g||_inf <= 1, Lip(g) <= 1.
///
/// The supremum equals the value of the finite LP over the union support
///     max sum_k (mu_k - nu_k) g_k   s.t.  |g_k| <= 1,  g_k - g_l <= |z_k - z_l|,
/// since any feasible g extends to R^dim by McShane extension followed by clamping.
/// This routine solves the dual of that LP: a transportation problem from the positive to
/// the negative part of mu - nu with unit cost min(|z - z'|, 2), where unmatched mass is
/// routed to or from a ground node at unit cost 1. Successive shortest paths with node
/// potentials give the exact optimum; measures of unequal total mass are allowed.
double bl_distance(const AtomicMeasure& mu, const AtomicMeasure& nu);

/// Independent oracle for bl_distance: dense primal simplex on the LP above (Bland's rule).
/// Refuses unions of more than kBruteforceMaxSupport distinct points.
double bl_distance_bruteforce(const AtomicMeasure& mu, const AtomicMeasure& nu);

inline constexpr std::size_t kBruteforceMaxSupport = 8;

/// ||mu - nu||_TV
double total_variation(const AtomicMeasure& mu, const AtomicMeasure& nu);

struct PairingCheck {
    double lhs;
    double rhs;
    bool holds;
};

/// |int g dmu - int g dnu| against max(sup_bound, lip_bound) * d(mu, nu) with slack 1e-9.
PairingCheck pairing_bound_check(const LipschitzObservable& g, const AtomicMeasure& mu, const AtomicMeasure& nu);

} // namespace flock
