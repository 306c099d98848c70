#include "flock/ensemble.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "flock/error.hpp"
#include "flock/linalg.hpp"

namespace flock {

void validate(const Ensemble& e, bool require_unit_mass)
{
    if (e.dim < 1)
        throw InvalidArgument(fmt::format("ensemble dimension {} < 1", e.dim));
    const std::size_t n = e.masses.size();
    if (n == 0)
        throw InvalidArgument("ensemble has no particles");
    if (e.positions.size() != n * e.dim || e.velocities.size() != n * e.dim)
        throw InvalidArgument(fmt::format("ensemble arrays disagree: {} masses, {} position and {} velocity "
                                          "coordinates at dim {}",
                                          n, e.positions.size(), e.velocities.size(), e.dim));
    for (std::size_t i = 0; i < n; ++i)
        if (!(e.masses[i] > 0.0) || !std::isfinite(e.masses[i]))
            throw InvalidArgument(fmt::format("particle {} has invalid mass {}", i, e.masses[i]));
    auto finite = [](double c) { return std::isfinite(c); };
    if (!std::all_of(e.positions.begin(), e.positions.end(), finite) ||
        !std::all_of(e.velocities.begin(), e.velocities.end(), finite) || !std::isfinite(e.time))
        throw InvalidArgument("ensemble has non-finite coordinates");
    if (require_unit_mass && std::abs(total_mass(e) - 1.0) > kMassTolerance)
        throw InvalidArgument(fmt::format("ensemble mass {:.17g} is not 1", total_mass(e)));
}

double total_mass(const Ensemble& e)
{
    return std::accumulate(e.masses.begin(), e.masses.end(), 0.0);
}

std::vector<double> total_momentum(const Ensemble& e)
{
    std::vector<double> p(e.dim, 0.0);
    for (std::size_t i = 0; i < e.size(); ++i)
        for (int k = 0; k < e.dim; ++k)
            p[k] += e.masses[i] * e.v(i)[k];
    return p;
}

double support_radius(const Ensemble& e)
{
    double r = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        r = std::max({r, norm(e.x(i)), norm(e.v(i))});
    return r;
}

void validate(const AtomicMeasure& mu)
{
    if (mu.dim < 1)
        throw InvalidArgument("atomic measure dimension < 1");
    if (mu.points.size() != mu.weights.size() * mu.dim)
        throw InvalidArgument("atomic measure points/weights length mismatch");
    for (double w : mu.weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument(fmt::format("atomic measure has invalid weight {}", w));
    for (double c : mu.points)
        if (!std::isfinite(c))
            throw InvalidArgument("atomic measure has non-finite coordinates");
}

double total_weight(const AtomicMeasure& mu)
{
    return std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
}

AtomicMeasure canonicalize(const AtomicMeasure& mu)
{
    std::map<std::vector<double>, double> atoms;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        auto z = mu.point(k);
        atoms[std::vector<double>(z.begin(), z.end())] += mu.weights[k];
    }
    AtomicMeasure out;
    out.dim = mu.dim;
    for (const auto& [z, w] : atoms) {
        out.points.insert(out.points.end(), z.begin(), z.end());
        out.weights.push_back(w);
    }
    return out;
}

AtomicMeasure empirical_measure(const Ensemble& e)
{
    AtomicMeasure mu;
    mu.dim = 2 * e.dim;
    mu.points.reserve(e.size() * mu.dim);
    for (std::size_t i = 0; i < e.size(); ++i) {
        auto x = e.x(i);
        auto v = e.v(i);
        mu.points.insert(mu.points.end(), x.begin(), x.end());
        mu.points.insert(mu.points.end(), v.begin(), v.end());
    }
    mu.weights = e.masses;
    return mu;
}

int phase_dim(const InitialDatum& source)
{
    return std::visit([](const auto& s) { return s.dim; }, source);
}

namespace {

// Axis-aligned grid of cubic cells of side h, centered on [lo, hi].
struct Grid {
    std::vector<double> origin;
    std::vector<double> middle;
    std::vector<std::size_t> cells;
    double h;

    Grid(std::span<const double> lo, std::span<const double> hi, double h_) : h(h_)
    {
        for (std::size_t a = 0; a < lo.size(); ++a) {
            const double extent = hi[a] - lo[a];
            const auto n = std::max<std::size_t>(1, std::size_t(std::ceil(extent / h - 1e-9)));
            cells.push_back(n);
            middle.push_back(0.5 * (lo[a] + hi[a]));
            origin.push_back(middle.back() - 0.5 * double(n) * h);
        }
    }

    std::size_t count() const
    {
        return std::accumulate(cells.begin(), cells.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t index_of(std::span<const double> z) const
    {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < cells.size(); ++a) {
            auto c = std::int64_t(std::floor((z[a] - origin[a]) / h));
            c = std::clamp<std::int64_t>(c, 0, std::int64_t(cells[a]) - 1);
            flat = flat * cells[a] + std::size_t(c);
        }
        return flat;
    }

    std::vector<std::size_t> multi_index(std::size_t flat) const
    {
        std::vector<std::size_t> idx(cells.size());
        for (std::size_t a = cells.size(); a-- > 0;) {
            idx[a] = flat % cells[a];
            flat /= cells[a];
        }
        return idx;
    }

    std::vector<double> center(std::size_t flat) const
    {
        auto idx = multi_index(flat);
        std::vector<double> c(cells.size());
        for (std::size_t a = 0; a < cells.size(); ++a)
            c[a] = middle[a] + (double(idx[a]) + 0.5 - 0.5 * double(cells[a])) * h;
        return c;
    }
};

// 3-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 3> kGaussNodes{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGaussWeights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Cell mass by tensor Gauss-Legendre quadrature, restricted to the part of the cell inside [lo, hi].
double cell_mass(const DensityBox& box, const std::vector<double>& center, double h)
{
    const std::size_t dims = center.size();
    std::vector<double> a(dims), b(dims);
    for (std::size_t k = 0; k < dims; ++k) {
        a[k] = std::max(center[k] - 0.5 * h, box.lo[k]);
        b[k] = std::min(center[k] + 0.5 * h, box.hi[k]);
        if (b[k] <= a[k])
            return 0.0;
    }
    std::size_t total = 1;
    for (std::size_t k = 0; k < dims; ++k)
        total *= kGaussNodes.size();
    std::vector<double> z(dims);
    double mass = 0.0;
    for (std::size_t q = 0; q < total; ++q) {
        double w = 1.0;
        std::size_t rest = q;
        for (std::size_t k = 0; k < dims; ++k) {
            const std::size_t j = rest % kGaussNodes.size();
            rest /= kGaussNodes.size();
            const double half = 0.5 * (b[k] - a[k]);
            z[k] = 0.5 * (a[k] + b[k]) + half * kGaussNodes[j];
            w *= half * kGaussWeights[j];
        }
        const double f = box.density(z);
        if (!std::isfinite(f) || f < 0.0)
            throw QuadratureFailure(fmt::format("density evaluator returned {} inside the box", f));
        mass += w * f;
    }
    return mass;
}

Ensemble build_ensemble(int dim, const Grid& grid, const std::map<std::size_t, double>& cell_masses)
{
    double total = 0.0;
    for (const auto& [cell, m] : cell_masses)
        total += m;
    if (!(total > 0.0))
        throw InvalidArgument("initial datum has empty support");
    Ensemble e;
    e.dim = dim;
    for (const auto& [cell, m] : cell_masses) {
        if (!(m > 0.0))
            continue;
        auto c = grid.center(cell);
        e.masses.push_back(m / total);
        e.positions.insert(e.positions.end(), c.begin(), c.begin() + dim);
        e.velocities.insert(e.velocities.end(), c.begin() + dim, c.end());
    }
    // Renormalize once more so the stored masses sum to 1 in floating point.
    const double s = total_mass(e);
    for (double& m : e.masses)
        m /= s;
    return e;
}

Ensemble quantize_box(const DensityBox& box, double h)
{
    const std::size_t dims = 2 * std::size_t(box.dim);
    if (box.lo.size() != dims || box.hi.size() != dims)
        throw InvalidArgument(fmt::format("density box needs {} bounds per side", dims));
    for (std::size_t k = 0; k < dims; ++k)
        if (!(box.hi[k] > box.lo[k]))
            throw InvalidArgument("density box has empty extent");
    if (!box.density)
        throw InvalidArgument("density box has no evaluator");
    Grid grid(box.lo, box.hi, h);
    std::map<std::size_t, double> masses;
    for (std::size_t cell = 0; cell < grid.count(); ++cell) {
        const double m = cell_mass(box, grid.center(cell), h);
        if (m > 0.0)
            masses[cell] = m;
    }
    return build_ensemble(box.dim, grid, masses);
}

Ensemble quantize_samples(const WeightedSamples& s, double h)
{
    const std::size_t dims = 2 * std::size_t(s.dim);
    if (s.weights.empty() || s.points.size() != s.weights.size() * dims)
        throw InvalidArgument("weighted samples are empty or malformed");
    std::vector<double> lo(s.points.begin(), s.points.begin() + dims), hi = lo;
    for (std::size_t k = 0; k < s.weights.size(); ++k) {
        if (!(s.weights[k] >= 0.0) || !std::isfinite(s.weights[k]))
            throw InvalidArgument(fmt::format("sample {} has invalid weight", k));
        for (std::size_t a = 0; a < dims; ++a) {
            lo[a] = std::min(lo[a], s.points[k * dims + a]);
            hi[a] = std::max(hi[a], s.points[k * dims + a]);
        }
    }
    Grid grid(lo, hi, h);
    std::map<std::size_t, double> masses;
    for (std::size_t k = 0; k < s.weights.size(); ++k)
        if (s.weights[k] > 0.0)
            masses[grid.index_of({s.points.data() + k * dims, dims})] += s.weights[k];
    return build_ensemble(s.dim, grid, masses);
}

} // namespace

Ensemble quantize(const InitialDatum& source, double h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw InvalidArgument(fmt::format("cell size h={} must be positive", h));
    if (phase_dim(source) < 1)
        throw InvalidArgument("initial datum dimension < 1");
    struct Visitor {
        double h;
        Ensemble operator()(const DensityBox& b) const { return quantize_box(b, h); }
        Ensemble operator()(const WeightedSamples& s) const { return quantize_samples(s, h); }
    };
    return std::visit(Visitor{h}, source);
}

Ensemble merge(const Ensemble& e, std::span<const std::size_t> cluster)
{
    return merge_clusters(e, {std::vector<std::size_t>(cluster.begin(), cluster.end())});
}

Ensemble merge_clusters(const Ensemble& e, const std::vector<std::vector<std::size_t>>& clusters)
{
    const std::size_t n = e.size();
    // owner[i] = cluster id of particle i, or -1
    std::vector<long> owner(n, -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (clusters[c].size() < 2)
            throw InvalidArgument("merge needs a cluster of at least two particles");
        for (std::size_t i : clusters[c]) {
            if (i >= n)
                throw InvalidArgument(fmt::format("cluster index {} out of range (N={})", i, n));
            if (owner[i] != -1)
                throw InvalidArgument(fmt::format("particle {} appears in more than one cluster slot", i));
            owner[i] = long(c);
        }
    }

    Ensemble out;
    out.dim = e.dim;
    out.time = e.time;
    std::vector<bool> emitted(clusters.size(), false);
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] < 0) {
            out.masses.push_back(e.masses[i]);
            out.positions.insert(out.positions.end(), e.x(i).begin(), e.x(i).end());
            out.velocities.insert(out.velocities.end(), e.v(i).begin(), e.v(i).end());
            continue;
        }
        const auto c = std::size_t(owner[i]);
        if (emitted[c])
            continue;
        emitted[c] = true;
        double mass = 0.0;
        std::vector<double> mx(e.dim, 0.0), mv(e.dim, 0.0);
        for (std::size_t j : clusters[c]) {
            mass += e.masses[j];
            for (int k = 0; k < e.dim; ++k) {
                mx[k] += e.masses[j] * e.x(j)[k];
                mv[k] += e.masses[j] * e.v(j)[k];
            }
        }
        out.masses.push_back(mass);
        for (int k = 0; k < e.dim; ++k) {
            out.positions.push_back(mx[k] / mass);
            out.velocities.push_back(mv[k] / mass);
        }
    }
    return out;
}

} // namespace flock
