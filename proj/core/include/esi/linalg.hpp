#pragma once

#include <Eigen/Core>

namespace esi::linalg {

/// C^{-1/2} of a symmetric positive-definite matrix via its eigendecomposition.
/// Throws LinAlgError if C is not symmetric or its smallest eigenvalue is <= 0.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& c);

/// Throws LinAlgError unless c is square and symmetric to 1e-10 relative.
void require_symmetric(const Eigen::MatrixXd& c, const char* what);

/// Reciprocal condition estimate from a Cholesky factorisation; 0 if the
/// factorisation fails.
double spd_rcond(const Eigen::MatrixXd& a);

/// Scales each column so its entry of largest magnitude is positive.
void canonicalize_column_signs(Eigen::MatrixXd& columns);

}  // namespace esi::linalg
