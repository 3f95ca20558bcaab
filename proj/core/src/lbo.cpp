#include "esi/lbo.hpp"

#include "esi/errors.hpp"
#include "esi/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace esi {

DiscreteLBO assemble_lbo(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.face_count()) * 6);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);

  for (int f = 0; f < mesh.face_count(); ++f) {
    const int idx[3] = {mesh.faces()(f, 0), mesh.faces()(f, 1), mesh.faces()(f, 2)};
    const Eigen::Vector3d p[3] = {mesh.vertex(idx[0]), mesh.vertex(idx[1]), mesh.vertex(idx[2])};
    const double twice_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();

    for (int k = 0; k < 3; ++k) {
      // Corner k is opposite the edge (k+1, k+2).
      const Eigen::Vector3d u = p[(k + 1) % 3] - p[k];
      const Eigen::Vector3d v = p[(k + 2) % 3] - p[k];
      const double cot = u.dot(v) / twice_area;
      if (!std::isfinite(cot) || std::abs(cot) > kMaxCotangent) {
        throw NumericalError("face " + std::to_string(f) + ": cotangent " + std::to_string(cot) +
                             " exceeds limit; triangle is nearly degenerate");
      }
      const int a = idx[(k + 1) % 3];
      const int b = idx[(k + 2) % 3];
      triplets.emplace_back(a, b, -0.5 * cot);
      triplets.emplace_back(b, a, -0.5 * cot);
      mass[idx[k]] += twice_area / 6.0;
    }
  }

  Eigen::SparseMatrix<double> off(n, n);
  off.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (int col = 0; col < off.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(off, col); it; ++it) {
      diag[it.row()] -= it.value();
    }
  }
  std::vector<Eigen::Triplet<double>> all;
  all.reserve(static_cast<std::size_t>(off.nonZeros()) + static_cast<std::size_t>(n));
  for (int col = 0; col < off.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(off, col); it; ++it) {
      all.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int i = 0; i < n; ++i) all.emplace_back(i, i, diag[i]);

  DiscreteLBO lbo;
  lbo.stiffness.resize(n, n);
  lbo.stiffness.setFromTriplets(all.begin(), all.end());
  lbo.mass = std::move(mass);
  return lbo;
}

namespace {

double stiffness_norm_inf(const Eigen::SparseMatrix<double>& s) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(s.rows());
  for (int col = 0; col < s.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(s, col); it; ++it) {
      row_sums[it.row()] += std::abs(it.value());
    }
  }
  return row_sums.maxCoeff();
}

// Largest relative residual ||S x - l M x|| / ((|S| + |l| |M|) ||x||) over columns.
double max_relative_residual(const DiscreteLBO& lbo, const Eigen::VectorXd& values,
                             const Eigen::MatrixXd& vectors) {
  const double s_norm = stiffness_norm_inf(lbo.stiffness);
  const double m_norm = lbo.mass.maxCoeff();
  const Eigen::MatrixXd sx = lbo.stiffness * vectors;
  double worst = 0.0;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const Eigen::VectorXd r =
        sx.col(c) - values[c] * lbo.mass.cwiseProduct(vectors.col(c));
    const double denom = (s_norm + std::abs(values[c]) * m_norm) * vectors.col(c).norm();
    worst = std::max(worst, r.norm() / denom);
  }
  return worst;
}

EigenmodeResult solve_dense(const DiscreteLBO& lbo, int count) {
  const Eigen::VectorXd inv_sqrt_mass = lbo.mass.cwiseSqrt().cwiseInverse();
  // M^{-1/2} S M^{-1/2} is symmetric with the same spectrum as the pencil.
  Eigen::MatrixXd a = Eigen::MatrixXd(lbo.stiffness);
  a = inv_sqrt_mass.asDiagonal() * a * inv_sqrt_mass.asDiagonal();
  a = 0.5 * (a + a.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("dense symmetric eigensolver did not converge");
  }
  EigenmodeResult out;
  out.eigenvalues = solver.eigenvalues().head(count);
  out.eigenvectors = inv_sqrt_mass.asDiagonal() * solver.eigenvectors().leftCols(count);
  return out;
}

// M-orthonormalises the columns of y in place (Cholesky QR, applied twice).
bool mass_orthonormalize(Eigen::MatrixXd& y, const Eigen::VectorXd& mass) {
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::MatrixXd gram = y.transpose() * mass.asDiagonal() * y;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd d = llt.matrixLLT().diagonal();
    if (!(d.minCoeff() > 1e-6 * d.maxCoeff())) return false;
    // y <- y L^{-T} with gram = L L^T.
    y = llt.matrixL().solve(y.transpose()).transpose();
  }
  return true;
}

void mass_gram_schmidt(Eigen::MatrixXd& y, const Eigen::VectorXd& mass, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index p = 0; p < c; ++p) {
          y.col(c) -= (y.col(p).dot(mass.cwiseProduct(y.col(c)))) * y.col(p);
        }
      }
      const double norm = std::sqrt(y.col(c).dot(mass.cwiseProduct(y.col(c))));
      if (norm > 1e-300 && std::isfinite(norm)) {
        y.col(c) /= norm;
        break;
      }
      for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, c) = normal(rng);
    }
  }
}

EigenmodeResult solve_shift_invert(const DiscreteLBO& lbo, int count,
                                   const EigenOptions& options) {
  const Eigen::Index n = lbo.mass.size();
  const Eigen::Index block =
      std::min<Eigen::Index>(n, count + std::max<Eigen::Index>(count, 16));

  const double scale = lbo.stiffness.diagonal().sum() / lbo.mass.sum();
  const double sigma = options.shift * scale;
  Eigen::SparseMatrix<double> shifted = lbo.stiffness;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma * lbo.mass[i];

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success) {
    throw NumericalError("factorisation of the shifted stiffness matrix failed");
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, c) = normal(rng);
  }
  mass_gram_schmidt(x, lbo.mass, rng);

  const double s_norm = stiffness_norm_inf(lbo.stiffness);
  const double m_norm = lbo.mass.maxCoeff();
  double worst = 0.0;
  Eigen::VectorXd ritz;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::MatrixXd y = factor.solve(lbo.mass.asDiagonal() * x);
    if (!mass_orthonormalize(y, lbo.mass)) mass_gram_schmidt(y, lbo.mass, rng);

    // Rayleigh-Ritz on the M-orthonormal block.
    Eigen::MatrixXd h = y.transpose() * (lbo.stiffness * y);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(h);
    ritz = small.eigenvalues();
    x = y * small.eigenvectors();

    const Eigen::MatrixXd sx = lbo.stiffness * x.leftCols(count);
    worst = 0.0;
    for (Eigen::Index c = 0; c < count; ++c) {
      const Eigen::VectorXd r = sx.col(c) - ritz[c] * lbo.mass.cwiseProduct(x.col(c));
      const double denom = (s_norm + std::abs(ritz[c]) * m_norm) * x.col(c).norm();
      worst = std::max(worst, r.norm() / denom);
    }
    if (worst <= options.tolerance) {
      EigenmodeResult out;
      out.eigenvalues = ritz.head(count);
      out.eigenvectors = x.leftCols(count);
      out.iterations = iter;
      return out;
    }
  }
  throw ConvergenceError("shift-invert subspace iteration did not converge in " +
                         std::to_string(options.max_iterations) +
                         " iterations; max relative residual " + std::to_string(worst));
}

}  // namespace

EigenmodeResult eigenmodes(const DiscreteLBO& lbo, int count, const EigenOptions& options) {
  const auto n = static_cast<int>(lbo.mass.size());
  if (count < 1 || count > n) {
    throw DimensionError("eigenmode count must be in [1, " + std::to_string(n) + "], got " +
                         std::to_string(count));
  }
  if ((lbo.mass.array() <= 0.0).any()) {
    throw NumericalError("mass matrix has a non-positive diagonal entry");
  }

  const bool dense = options.solver == EigenSolverKind::Dense ||
                     (options.solver == EigenSolverKind::Auto && n <= options.dense_limit);
  EigenmodeResult out = dense ? solve_dense(lbo, count) : solve_shift_invert(lbo, count, options);

  linalg::canonicalize_column_signs(out.eigenvectors);
  out.mass_orthonormal = true;
  out.max_relative_residual = max_relative_residual(lbo, out.eigenvalues, out.eigenvectors);
  return out;
}

EigenmodeResult mesh_eigenmodes(const TriMesh& mesh, int count, const EigenOptions& options) {
  return eigenmodes(assemble_lbo(mesh), count, options);
}

}  // namespace esi
