#pragma once

#include <stdexcept>
#include <string>

namespace impscat {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

/// Obstacle or chain geometry violates a required containment / contact property.
class GeometryError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Quadrature too coarse for the requested band limits.
class AliasingError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Discrete system is numerically singular.
class SingularityError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Solution not resolved by the band limit (tail energy too large).
class ResolutionError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Iterative procedure failed to converge or bracket.
class ConvergenceError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration.
class ValidationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace impscat
