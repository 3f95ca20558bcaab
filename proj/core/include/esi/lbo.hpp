#pragma once

#include "esi/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace esi {

/// Cotangent stiffness and lumped (barycentric) mass of a triangle mesh.
/// The generalized problem stiffness * psi = lambda * diag(mass) * psi is the
/// discrete form of -Laplace-Beltrami psi = lambda psi.
struct DiscreteLBO {
  Eigen::SparseMatrix<double> stiffness;  // symmetric positive semidefinite, N x N
  Eigen::VectorXd mass;                   // vertex areas in mm^2, strictly positive
};

inline constexpr double kMaxCotangent = 1e8;

/// Off-diagonal (i,j) = -(cot alpha + cot beta)/2 over the faces sharing edge
/// (i,j); diagonal = -(row sum of off-diagonals); mass[i] = area(star(i))/3.
/// Throws NumericalError if any |cot| exceeds kMaxCotangent.
DiscreteLBO assemble_lbo(const TriMesh& mesh);

enum class EigenSolverKind { Auto, Dense, ShiftInvert };

struct EigenOptions {
  EigenSolverKind solver = EigenSolverKind::Auto;
  int dense_limit = 2000;      // Auto uses the dense solver up to this N
  double tolerance = 1e-9;     // relative residual, sparse path
  int max_iterations = 5000;   // sparse path
  double shift = -1e-8;        // relative to trace(stiffness)/trace(mass)
  unsigned long long seed = 0x5eed;  // start block of the sparse path
};

struct EigenmodeResult {
  Eigen::VectorXd eigenvalues;   // ascending, 1/mm^2
  Eigen::MatrixXd eigenvectors;  // N x S, mass-orthonormal
  bool mass_orthonormal = false;
  int iterations = 0;            // 0 for the dense path
  double max_relative_residual = 0.0;
};

/// The `count` smallest eigenpairs. Each eigenvector is scaled so that
/// psi^T M psi = 1 and its entry of largest magnitude is positive.
/// Throws DimensionError if count is outside [1, N], ConvergenceError if the
/// iterative solver does not reach the tolerance.
EigenmodeResult eigenmodes(const DiscreteLBO& lbo, int count, const EigenOptions& options = {});

/// Convenience: assemble and solve.
EigenmodeResult mesh_eigenmodes(const TriMesh& mesh, int count, const EigenOptions& options = {});

}  // namespace esi
