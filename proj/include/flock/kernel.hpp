#pragma once

#include <string>
#include <variant>

namespace flock {

// psi(s) = s^-alpha
struct SingularWeight {
    double alpha;
};

// psi_n(s) = min(s^-alpha, n)
struct CappedWeight {
    double alpha;
    double cap;
};

// psi(s) = K / (1 + s^2)^(beta/2)
struct RegularWeight {
    double amplitude;
    double beta;
};

/// Communication weight governing the alignment force. Construction validates the
/// parameters, so every WeightSpec in circulation is admissible: 0 < alpha < 1/2 for the
/// singular and capped variants, cap > 0, K > 0 and beta >= 0 for the regular one.
class WeightSpec {
public:
    using Variant = std::variant<SingularWeight, CappedWeight, RegularWeight>;

    static WeightSpec singular(double alpha);
    static WeightSpec capped(double alpha, double cap);
    static WeightSpec regular(double amplitude, double beta);

    const Variant& variant() const { return variant_; }

    bool is_singular() const { return std::holds_alternative<SingularWeight>(variant_); }
    bool is_capped() const { return std::holds_alternative<CappedWeight>(variant_); }

    // Same variant with a different cap; throws unless capped.
    WeightSpec with_cap(double cap) const;

    std::string describe() const;

private:
    explicit WeightSpec(Variant v) : variant_(v) {}
    Variant variant_;
};

/// Weight at separation s >= 0. The singular weight returns +infinity at s == 0.
double evaluate(const WeightSpec& spec, double s);

/// Radius n^(-1/alpha) below which the cap of a capped weight is active.
double cap_activation_radius(const WeightSpec& spec);

} // namespace flock
