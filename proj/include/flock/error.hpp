#pragma once

#include <stdexcept>
#include <string>

namespace flock {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Singular weight evaluated at zero separation inside the right-hand side.
class CollisionAtSingularity : public Error {
public:
    using Error::Error;
};

// Adaptive step size fell below 1e-14 * t_end.
class StiffnessFailure : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class SolverFault : public Error {
public:
    using Error::Error;
};

} // namespace flock
