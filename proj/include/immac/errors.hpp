#pragma once

#include <stdexcept>
#include <string>

namespace immac {

// Base for every failure the library signals. Each subclass names the
// contract that was broken so callers (and the CLI) can map it to a code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameter outside the mathematical domain of an operation (M = 0, eps >= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A state with zero norm where a normalizable state is required.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

// Quadrature too coarse for the band limit of the integrand.
class AliasingError : public Error {
public:
    using Error::Error;
};

// Asymptotic formula requested outside the regime where it is defined.
class RegimeError : public Error {
public:
    using Error::Error;
};

// Series that does not converge for the given argument.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Linearly independent set too close to dependence at double precision.
class NearDegenerateError : public Error {
public:
    using Error::Error;
};

// Objects built for different configurations combined together.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// Fock cutoff too small to represent an operator or state.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Phase reference <a> vanishes, so radial/phase quadratures are undefined.
class UndefinedPhaseError : public Error {
public:
    using Error::Error;
};

// Command line that does not describe a valid run.
class UsageError : public Error {
public:
    using Error::Error;
};

// Output location that cannot be created or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace immac
