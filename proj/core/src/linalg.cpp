#include "esi/linalg.hpp"

#include "esi/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>

namespace esi::linalg {

void require_symmetric(const Eigen::MatrixXd& c, const char* what) {
  if (c.rows() != c.cols()) {
    throw LinAlgError(std::string(what) + " must be square");
  }
  const double scale = c.cwiseAbs().maxCoeff();
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw LinAlgError(std::string(what) + " is not symmetric");
  }
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& c) {
  require_symmetric(c, "covariance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()));
  if (eig.info() != Eigen::Success) throw LinAlgError("eigendecomposition failed");
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) {
    throw LinAlgError("covariance is not positive definite (smallest eigenvalue " +
                      std::to_string(smallest) + ")");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

double spd_rcond(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return 0.0;
  return llt.rcond();
}

void canonicalize_column_signs(Eigen::MatrixXd& columns) {
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    Eigen::Index arg = 0;
    columns.col(c).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, c) < 0.0) columns.col(c) *= -1.0;
  }
}

}  // namespace esi::linalg
