#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace flock {

inline double norm(std::span<const double> a)
{
    double s = 0.0;
    for (double c : a)
        s += c * c;
    return std::sqrt(s);
}

inline double distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace flock
