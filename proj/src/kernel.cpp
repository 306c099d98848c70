#include "flock/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "flock/error.hpp"

namespace flock {

namespace {

void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 0.5))
        throw InvalidArgument(fmt::format("weight exponent alpha={} outside (0, 1/2)", alpha));
}

} // namespace

WeightSpec WeightSpec::singular(double alpha)
{
    check_alpha(alpha);
    return WeightSpec(SingularWeight{alpha});
}

WeightSpec WeightSpec::capped(double alpha, double cap)
{
    check_alpha(alpha);
    if (!(cap > 0.0) || !std::isfinite(cap))
        throw InvalidArgument(fmt::format("weight cap n={} must be positive and finite", cap));
    return WeightSpec(CappedWeight{alpha, cap});
}

WeightSpec WeightSpec::regular(double amplitude, double beta)
{
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
        throw InvalidArgument(fmt::format("weight amplitude K={} must be positive", amplitude));
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw InvalidArgument(fmt::format("weight exponent beta={} must be nonnegative", beta));
    return WeightSpec(RegularWeight{amplitude, beta});
}

WeightSpec WeightSpec::with_cap(double cap) const
{
    const auto* c = std::get_if<CappedWeight>(&variant_);
    if (c == nullptr)
        throw InvalidArgument("with_cap requires a capped weight");
    return capped(c->alpha, cap);
}

std::string WeightSpec::describe() const
{
    struct Visitor {
        std::string operator()(const SingularWeight& w) const { return fmt::format("singular(alpha={})", w.alpha); }
        std::string operator()(const CappedWeight& w) const
        {
            return fmt::format("capped(alpha={}, n={})", w.alpha, w.cap);
        }
        std::string operator()(const RegularWeight& w) const
        {
            return fmt::format("regular(K={}, beta={})", w.amplitude, w.beta);
        }
    };
    return std::visit(Visitor{}, variant_);
}

double evaluate(const WeightSpec& spec, double s)
{
    struct Visitor {
        double s;
        double operator()(const SingularWeight& w) const
        {
            if (s == 0.0)
                return std::numeric_limits<double>::infinity();
            return std::pow(s, -w.alpha);
        }
        double operator()(const CappedWeight& w) const
        {
            if (s == 0.0)
                return w.cap;
            return std::min(std::pow(s, -w.alpha), w.cap);
        }
        double operator()(const RegularWeight& w) const
        {
            return w.amplitude / std::pow(1.0 + s * s, 0.5 * w.beta);
        }
    };
    return std::visit(Visitor{s}, spec.variant());
}

double cap_activation_radius(const WeightSpec& spec)
{
    const auto* c = std::get_if<CappedWeight>(&spec.variant());
    if (c == nullptr)
        throw InvalidArgument("cap_activation_radius requires a capped weight");
    return std::pow(c->cap, -1.0 / c->alpha);
}

} // namespace flock
