#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace metachan {

using Complex = std::complex<double>;

/// Operator on a d-dimensional Hilbert space, entry (i,j) <-> |i><j|.
using Operator = Eigen::MatrixXcd;

/// Vector in Hilbert-Schmidt space; entry i*d+j holds the coefficient of |ij>>.
using HsVector = Eigen::VectorXcd;

/// Linear operator on Hilbert-Schmidt space (d^2 x d^2).
using SuperOp = Eigen::MatrixXcd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An analysis cannot run because its inputs violate a stated precondition
/// (maps to CLI exit code 2).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace metachan
