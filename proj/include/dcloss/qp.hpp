#pragma once

#include <Eigen/Dense>

#include "dcloss/errors.hpp"

namespace dcloss {

/// q(x) = x^T Q x + b^T x + c with Q symmetric positive semidefinite.
struct QuadraticForm {
    Eigen::MatrixXd Q;
    Eigen::VectorXd b;
    double c = 0.0;

    double value(const Eigen::VectorXd& x) const { return x.dot(Q * x) + b.dot(x) + c; }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return 2.0 * (Q * x) + b; }
    int dimension() const { return static_cast<int>(Q.rows()); }
};

/// Minimizes q over {x : A x = rhs} through the stationarity system with
/// multipliers:
///
///   [ 2Q  A^T ] [x]   [-b ]
///   [ A    0  ] [l] = [rhs]
///
/// A may have zero rows (plain unconstrained minimization).  Throws
/// Error{ConstraintInconsistent} when the system is singular, which for the
/// potentials of a validated circuit indicates mis-assembled constraints.
Eigen::VectorXd minimize_equality_constrained(const QuadraticForm& q, const Eigen::MatrixXd& A,
                                              const Eigen::VectorXd& rhs);

} // namespace dcloss
