#include "flock/flat_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "flock/error.hpp"
#include "flock/linalg.hpp"

namespace flock {

LipschitzObservable constant_observable(int dim, double c)
{
    LipschitzObservable g;
    g.dim = dim;
    g.value = [c](std::span<const double>) { return c; };
    g.gradient = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    g.sup_bound = std::abs(c);
    g.lip_bound = 0.0;
    return g;
}

LipschitzObservable clamped_coordinate(int dim, int k)
{
    if (k < 0 || k >= dim)
        throw InvalidArgument(fmt::format("coordinate {} outside dimension {}", k, dim));
    LipschitzObservable g;
    g.dim = dim;
    g.value = [k](std::span<const double> z) { return std::clamp(z[k], -1.0, 1.0); };
    g.gradient = [k](std::span<const double> z, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        if (std::abs(z[k]) < 1.0)
            out[k] = 1.0;
    };
    g.sup_bound = 1.0;
    g.lip_bound = 1.0;
    return g;
}

LipschitzObservable piecewise_linear(int dim, std::vector<AffinePiece> pieces, double bound)
{
    if (pieces.empty() || !(bound >= 0.0))
        throw InvalidArgument("piecewise-linear observable needs pieces and a nonnegative bound");
    double lip = 0.0;
    for (const auto& p : pieces) {
        if (p.slope.size() != std::size_t(dim))
            throw InvalidArgument("affine piece slope has wrong dimension");
        lip = std::max(lip, norm(p.slope));
    }
    // Index of the active piece and the unclamped value.
    auto active = [pieces](std::span<const double> z) {
        std::size_t best = 0;
        double val = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < pieces.size(); ++q) {
            double s = pieces[q].offset;
            for (std::size_t k = 0; k < z.size(); ++k)
                s += pieces[q].slope[k] * z[k];
            if (s < val) {
                val = s;
                best = q;
            }
        }
        return std::pair{best, val};
    };
    LipschitzObservable g;
    g.dim = dim;
    g.value = [active, bound](std::span<const double> z) { return std::clamp(active(z).second, -bound, bound); };
    g.gradient = [active, pieces, bound](std::span<const double> z, std::span<double> out) {
        auto [q, val] = active(z);
        if (std::abs(val) < bound)
            std::copy(pieces[q].slope.begin(), pieces[q].slope.end(), out.begin());
        else
            std::fill(out.begin(), out.end(), 0.0);
    };
    g.sup_bound = bound;
    g.lip_bound = lip;
    return g;
}

bool spot_check(const LipschitzObservable& g, std::span<const double> points)
{
    const std::size_t dim = std::size_t(g.dim);
    const std::size_t n = points.size() / dim;
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = g.value(points.subspan(i * dim, dim));
        if (!std::isfinite(values[i]) || std::abs(values[i]) > g.sup_bound + 1e-12)
            return false;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = distance(points.subspan(i * dim, dim), points.subspan(j * dim, dim));
            if (std::abs(values[i] - values[j]) > g.lip_bound * r + 1e-12)
                return false;
        }
    return true;
}

double integrate(const LipschitzObservable& g, const AtomicMeasure& mu)
{
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k)
        s += mu.weights[k] * g.value(mu.point(k));
    return s;
}

namespace {

// Distinct points of supp(mu) u supp(nu) with the signed weight mu - nu at each.
struct SignedSupport {
    int dim = 0;
    std::vector<std::vector<double>> points;
    std::vector<double> charge;
};

SignedSupport signed_union(const AtomicMeasure& mu, const AtomicMeasure& nu)
{
    validate(mu);
    validate(nu);
    if (mu.size() > 0 && nu.size() > 0 && mu.dim != nu.dim)
        throw InvalidArgument(fmt::format("measures live in different dimensions ({} vs {})", mu.dim, nu.dim));
    std::map<std::vector<double>, double> net;
    auto add = [&net](const AtomicMeasure& m, double sign) {
        for (std::size_t k = 0; k < m.size(); ++k) {
            auto z = m.point(k);
            net[std::vector<double>(z.begin(), z.end())] += sign * m.weights[k];
        }
    };
    add(mu, 1.0);
    add(nu, -1.0);
    SignedSupport s;
    s.dim = mu.size() > 0 ? mu.dim : nu.dim;
    for (auto& [z, c] : net) {
        s.points.push_back(z);
        s.charge.push_back(c);
    }
    return s;
}

// Dense successive-shortest-path solver for an uncapacitated balanced transportation
// problem. Reduced cost of arc (i -> j) is cost[i][j] + pu[i] - pv[j] >= 0.
class Transportation {
public:
    Transportation(std::vector<double> supply, std::vector<double> demand, std::vector<std::vector<double>> cost)
        : supply_(std::move(supply)), demand_(std::move(demand)), cost_(std::move(cost)),
          flow_(supply_.size(), std::vector<double>(demand_.size(), 0.0)), pu_(supply_.size(), 0.0),
          pv_(demand_.size(), std::numeric_limits<double>::infinity())
    {
        double scale = 0.0;
        for (double s : supply_)
            scale += s;
        eps_ = 1e-15 * std::max(scale, 1e-300);
        for (std::size_t i = 0; i < supply_.size(); ++i)
            for (std::size_t j = 0; j < demand_.size(); ++j)
                pv_[j] = std::min(pv_[j], cost_[i][j]);
    }

    double solve()
    {
        const std::size_t a = supply_.size(), b = demand_.size();
        const std::size_t n = a + b;
        const double inf = std::numeric_limits<double>::infinity();
        // Generous bound; each augmentation exhausts a supply, a demand or a reverse arc.
        const std::size_t max_rounds = 64 * (n + 1) * (n + 1);
        for (std::size_t round = 0;; ++round) {
            if (remaining() <= eps_)
                break;
            if (round > max_rounds)
                throw SolverFault("transportation solver did not converge");

            std::vector<double> dist(n, inf);
            std::vector<long> pred(n, -1);
            std::vector<bool> done(n, false);
            for (std::size_t i = 0; i < a; ++i)
                if (supply_[i] > eps_)
                    dist[i] = 0.0;

            long target = -1;
            for (;;) {
                long u = -1;
                for (std::size_t q = 0; q < n; ++q)
                    if (!done[q] && dist[q] < inf && (u < 0 || dist[q] < dist[std::size_t(u)]))
                        u = long(q);
                if (u < 0)
                    break;
                const auto uu = std::size_t(u);
                done[uu] = true;
                if (uu < a) {
                    for (std::size_t j = 0; j < b; ++j) {
                        const double nd = dist[uu] + std::max(0.0, cost_[uu][j] + pu_[uu] - pv_[j]);
                        if (nd < dist[a + j]) {
                            dist[a + j] = nd;
                            pred[a + j] = u;
                        }
                    }
                } else {
                    const std::size_t j = uu - a;
                    if (demand_[j] > eps_) {
                        target = u;
                        break;
                    }
                    for (std::size_t i = 0; i < a; ++i) {
                        if (flow_[i][j] <= eps_)
                            continue;
                        const double nd = dist[uu] + std::max(0.0, -cost_[i][j] + pv_[j] - pu_[i]);
                        if (nd < dist[i]) {
                            dist[i] = nd;
                            pred[i] = u;
                        }
                    }
                }
            }
            if (target < 0)
                throw SolverFault("transportation problem has no augmenting path");

            const double reach = dist[std::size_t(target)];
            for (std::size_t i = 0; i < a; ++i)
                pu_[i] += std::min(dist[i], reach);
            for (std::size_t j = 0; j < b; ++j)
                pv_[j] += std::min(dist[a + j], reach);

            // Walk back to the originating source and find the bottleneck.
            double amount = demand_[std::size_t(target) - a];
            long v = target;
            while (pred[std::size_t(v)] >= 0) {
                const long u = pred[std::size_t(v)];
                if (std::size_t(u) >= a) // reverse arc sink u -> source v
                    amount = std::min(amount, flow_[std::size_t(v)][std::size_t(u) - a]);
                v = u;
            }
            amount = std::min(amount, supply_[std::size_t(v)]);
            supply_[std::size_t(v)] -= amount;
            demand_[std::size_t(target) - a] -= amount;
            v = target;
            while (pred[std::size_t(v)] >= 0) {
                const long u = pred[std::size_t(v)];
                if (std::size_t(u) < a)
                    flow_[std::size_t(u)][std::size_t(v) - a] += amount;
                else
                    flow_[std::size_t(v)][std::size_t(u) - a] -= amount;
                v = u;
            }
        }
        double total = 0.0;
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < b; ++j)
                total += flow_[i][j] * cost_[i][j];
        return total;
    }

private:
    double remaining() const
    {
        double r = 0.0;
        for (double s : supply_)
            r += s;
        return r;
    }

    std::vector<double> supply_, demand_;
    std::vector<std::vector<double>> cost_, flow_;
    std::vector<double> pu_, pv_;
    double eps_ = 0.0;
};

} // namespace

double bl_distance(const AtomicMeasure& mu, const AtomicMeasure& nu)
{
    const SignedSupport s = signed_union(mu, nu);
    std::vector<std::size_t> pos, neg;
    double imbalance = 0.0;
    for (std::size_t k = 0; k < s.charge.size(); ++k) {
        if (s.charge[k] > 0.0)
            pos.push_back(k);
        else if (s.charge[k] < 0.0)
            neg.push_back(k);
        imbalance += s.charge[k];
    }
    if (pos.empty() && neg.empty())
        return 0.0;

    // Ground node: absorbs surplus positive mass or supplies missing mass at cost 1.
    const bool ground_sink = imbalance > 0.0;
    const bool ground_source = imbalance < 0.0;

    std::vector<double> supply, demand;
    for (std::size_t k : pos)
        supply.push_back(s.charge[k]);
    if (ground_source)
        supply.push_back(-imbalance);
    for (std::size_t k : neg)
        demand.push_back(-s.charge[k]);
    if (ground_sink)
        demand.push_back(imbalance);

    std::vector<std::vector<double>> cost(supply.size(), std::vector<double>(demand.size(), 0.0));
    for (std::size_t i = 0; i < supply.size(); ++i)
        for (std::size_t j = 0; j < demand.size(); ++j) {
            const bool gi = i >= pos.size(), gj = j >= neg.size();
            if (gi && gj)
                cost[i][j] = 0.0;
            else if (gi || gj)
                cost[i][j] = 1.0;
            else
                cost[i][j] = std::min(distance(s.points[pos[i]], s.points[neg[j]]), 2.0);
        }
    return Transportation(std::move(supply), std::move(demand), std::move(cost)).solve();
}

double bl_distance_bruteforce(const AtomicMeasure& mu, const AtomicMeasure& nu)
{
    const SignedSupport s = signed_union(mu, nu);
    const std::size_t K = s.points.size();
    if (K > kBruteforceMaxSupport)
        throw InvalidArgument(
            fmt::format("brute-force oracle handles at most {} support points, got {}", kBruteforceMaxSupport, K));
    if (K == 0)
        return 0.0;

    // Shift y = g + 1 so that y >= 0 and every right-hand side is nonnegative:
    //   y_k <= 2,   y_k - y_l <= |z_k - z_l|.
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> r(K, 0.0);
        r[k] = 1.0;
        rows.push_back(r);
        rhs.push_back(2.0);
    }
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < K; ++l) {
            if (k == l)
                continue;
            std::vector<double> r(K, 0.0);
            r[k] = 1.0;
            r[l] = -1.0;
            rows.push_back(r);
            rhs.push_back(distance(s.points[k], s.points[l]));
        }

    // Tableau with slack basis: columns [y (K) | slack (m) | rhs].
    const std::size_t m = rows.size();
    const std::size_t cols = K + m + 1;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t r = 0; r < m; ++r) {
        std::copy(rows[r].begin(), rows[r].end(), T[r].begin());
        T[r][K + r] = 1.0;
        T[r][cols - 1] = rhs[r];
        basis[r] = K + r;
    }
    for (std::size_t k = 0; k < K; ++k)
        T[m][k] = -s.charge[k]; // objective row holds -c

    constexpr double tol = 1e-12;
    for (std::size_t iter = 0; iter < 100000; ++iter) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j + 1 < cols; ++j)
            if (T[m][j] < -tol) {
                enter = j;
                break;
            }
        if (enter == cols) {
            double shift = 0.0;
            for (double c : s.charge)
                shift += c;
            return std::abs(T[m][cols - 1] - shift);
        }
        std::size_t leave = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            if (T[r][enter] <= tol)
                continue;
            const double ratio = T[r][cols - 1] / T[r][enter];
            if (leave == m || ratio < best - tol || (std::abs(ratio - best) <= tol && basis[r] < basis[leave])) {
                best = ratio;
                leave = r;
            }
        }
        if (leave == m)
            throw SolverFault("brute-force LP unbounded");
        const double piv = T[leave][enter];
        for (double& c : T[leave])
            c /= piv;
        for (std::size_t r = 0; r <= m; ++r) {
            if (r == leave || T[r][enter] == 0.0)
                continue;
            const double f = T[r][enter];
            for (std::size_t j = 0; j < cols; ++j)
                T[r][j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }
    throw SolverFault("brute-force LP did not terminate");
}

double total_variation(const AtomicMeasure& mu, const AtomicMeasure& nu)
{
    const SignedSupport s = signed_union(mu, nu);
    double tv = 0.0;
    for (double c : s.charge)
        tv += std::abs(c);
    return tv;
}

PairingCheck pairing_bound_check(const LipschitzObservable& g, const AtomicMeasure& mu, const AtomicMeasure& nu)
{
    const double lhs = std::abs(integrate(g, mu) - integrate(g, nu));
    const double rhs = std::max(g.sup_bound, g.lip_bound) * bl_distance(mu, nu);
    return {lhs, rhs, lhs <= rhs + 1e-9};
}

} // namespace flock
