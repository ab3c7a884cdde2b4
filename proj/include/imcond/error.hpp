#pragma once

// Exception hierarchy shared by every imcond module. Numeric kernels throw,
// callers (the coverage harness, the CLI) decide whether to count or abort.

#include <sstream>
#include <stdexcept>
#include <string>

namespace imcond {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameter outside the domain of a distribution or function (sigma <= 0, p
// outside (0,1), K0 at x <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Integrand produced a non-finite value.
class IntegrandError : public Error {
public:
    IntegrandError(double abscissa, double value)
        : Error(describe(abscissa, value)), abscissa_(abscissa), value_(value) {}

    double abscissa() const noexcept { return abscissa_; }
    double value() const noexcept { return value_; }

private:
    static std::string describe(double a, double v) {
        std::ostringstream os;
        os << "integrand is not finite at x=" << a << " (f=" << v << ")";
        return os.str();
    }
    double abscissa_;
    double value_;
};

// Missing hook or incompatible combination of model / PRS / method.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// MLE or root finding failed to converge.
class EstimationError : public Error {
public:
    using Error::Error;
};

// No threshold of a nested family yields a nonempty parameter set.
class ModelInconsistencyError : public Error {
public:
    using Error::Error;
};

// Markov chain started where the target density vanishes.
class InitializationError : public Error {
public:
    using Error::Error;
};

// Scale family with rank-deficient log-derivative.
class DegenerateFamilyError : public Error {
public:
    using Error::Error;
};

// Interval-type assertion against a non-monotone reduced association.
class UnsupportedAssertionError : public Error {
public:
    using Error::Error;
};

// Variance-components design whose eigenvalue clusters are ambiguous.
class DesignDegeneracyError : public Error {
public:
    using Error::Error;
};

// A statistic that must satisfy an identity does not (e.g. gamma T2 > 0).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// Statistic fails T(x + c 1) = T(x) + c.
class EquivarianceError : public Error {
public:
    EquivarianceError(double witness, double violation)
        : Error(describe(witness, violation)), witness_(witness), violation_(violation) {}

    double witness() const noexcept { return witness_; }
    double violation() const noexcept { return violation_; }

private:
    static std::string describe(double c, double v) {
        std::ostringstream os;
        os << "statistic is not location equivariant: shift c=" << c << " violates by " << v;
        return os.str();
    }
    double witness_;
    double violation_;
};

} // namespace imcond
