#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace flock {

/// N weighted particles in R^d x R^d at a common time. Positions and velocities are
/// stored row-major (particle i occupies [i*dim, (i+1)*dim)).
struct Ensemble {
    int dim = 1;
    std::vector<double> masses;
    std::vector<double> positions;
    std::vector<double> velocities;
    double time = 0.0;

    std::size_t size() const { return masses.size(); }

    std::span<const double> x(std::size_t i) const { return {positions.data() + i * dim, std::size_t(dim)}; }
    std::span<const double> v(std::size_t i) const { return {velocities.data() + i * dim, std::size_t(dim)}; }
    std::span<double> x(std::size_t i) { return {positions.data() + i * dim, std::size_t(dim)}; }
    std::span<double> v(std::size_t i) { return {velocities.data() + i * dim, std::size_t(dim)}; }

    bool operator==(const Ensemble&) const = default;
};

inline constexpr double kMassTolerance = 1e-12;

/// Throws InvalidArgument unless lengths agree, N >= 1, masses are positive, every
/// coordinate is finite and (when require_unit_mass) the masses sum to 1 within 1e-12.
void validate(const Ensemble& e, bool require_unit_mass = true);

double total_mass(const Ensemble& e);
std::vector<double> total_momentum(const Ensemble& e);

/// max_i max(|x_i|, |v_i|)
double support_radius(const Ensemble& e);

/// Finite nonnegative weighted point set in R^dim (dim = 2d for phase space).
struct AtomicMeasure {
    int dim = 2;
    std::vector<double> points; // row-major, size() * dim
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    std::span<const double> point(std::size_t k) const { return {points.data() + k * dim, std::size_t(dim)}; }

    bool operator==(const AtomicMeasure&) const = default;
};

void validate(const AtomicMeasure& mu);
double total_weight(const AtomicMeasure& mu);

/// Sorts atoms lexicographically and sums the weights of coincident points.
AtomicMeasure canonicalize(const AtomicMeasure& mu);

/// sum_i m_i delta_{x_i} (x) delta_{v_i}; atom k is (x_k, v_k) with weight m_k.
AtomicMeasure empirical_measure(const Ensemble& e);

/// Bounded density on the phase-space box [lo, hi] (both of length 2d). The evaluator
/// receives a phase-space point (x, v) and returns a nonnegative density value.
struct DensityBox {
    int dim = 1;
    std::vector<double> lo;
    std::vector<double> hi;
    std::function<double(std::span<const double>)> density;
};

/// Finite list of weighted phase-space samples (each point has 2d coordinates).
struct WeightedSamples {
    int dim = 1;
    std::vector<double> points;
    std::vector<double> weights;
};

using InitialDatum = std::variant<DensityBox, WeightedSamples>;

int phase_dim(const InitialDatum& source);

/// Bins the source on a grid of cubic cells of side h centered on its bounding box and
/// puts one atom at the center of every nonempty cell, carrying the cell mass. Masses
/// are renormalized to 1. Every unit of mass moves by at most h*sqrt(2d)/2.
Ensemble quantize(const InitialDatum& source, double h);

/// Replaces the cluster by one particle carrying the cluster's mass, center of mass
/// and mass-weighted mean velocity. The merged particle takes the slot of the smallest
/// index; the other particles keep their relative order.
Ensemble merge(const Ensemble& e, std::span<const std::size_t> cluster);

/// Merges several disjoint clusters at once.
Ensemble merge_clusters(const Ensemble& e, const std::vector<std::vector<std::size_t>>& clusters);

} // namespace flock
