#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace holo_rmt {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Error hierarchy. The CLI maps these onto exit codes.

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A factorization that should succeed did not (non-HPD input, singular system).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// det(I - B) <= 0 or a singular S_j: the inputs are outside the regime where
// the asymptotic variance is defined.
struct InvalidRegimeError : NumericalError {
    using NumericalError::NumericalError;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace holo_rmt
