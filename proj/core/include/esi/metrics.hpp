#pragma once

#include "esi/mesh.hpp"
#include "esi/source.hpp"

#include <Eigen/Core>

namespace esi {

inline constexpr double kDefaultThresholdFrac = 0.5;

struct EvaluationReport {
  double se = 0.0;
  double mcc = 0.0;
  double le_mm = 0.0;
  double sd_mm = 0.0;
  double threshold_frac = kDefaultThresholdFrac;
};

/// Total-variation distance between the L1-normalised absolute maps, in [0, 1].
double shape_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);
/// Pearson correlation over vertices.
double mean_corr(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);
/// Geodesic distance between the peaks of |est| and |truth| (lowest index wins ties).
double localization_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                          const TriMesh& mesh);
/// Mean distance from each est-active vertex to the nearest truth-active vertex.
/// A vertex is active when |v| >= threshold_frac * max|v|.
double source_divergence(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                         const TriMesh& mesh, double threshold_frac = kDefaultThresholdFrac);

EvaluationReport evaluate(const SourceEstimate& est, const SourceEstimate& truth,
                          const TriMesh& mesh, double threshold_frac = kDefaultThresholdFrac);

/// Index of the largest |v|, lowest index on ties.
Eigen::Index peak_index(const Eigen::VectorXd& v);

}  // namespace esi
