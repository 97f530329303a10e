#pragma once

#include <stdexcept>
#include <string>

namespace hermvas {

/// Invalid model or numerical parameter (H out of (1/2,1), a <= 0, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A resolution/refinement setting cannot deliver the requested accuracy.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quadrature or other numerical procedure failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (path CSV, manifest, config).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Empirical variance too small to invert for a_hat.
class DegenerateVariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A CDF goodness-of-fit target was requested for a limit law that has none.
class UnsupportedDistributionTarget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ParameterError(what);
}

} // namespace detail
} // namespace hermvas
