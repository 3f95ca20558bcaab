#include "esi/metrics.hpp"

#include "esi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace esi {

namespace {

void require_pair(const Eigen::VectorXd& est, const Eigen::VectorXd& truth, const char* what) {
  if (est.size() != truth.size()) {
    throw ShapeError(std::string(what) + ": maps differ in length (" +
                     std::to_string(est.size()) + " vs " + std::to_string(truth.size()) + ")");
  }
  if (est.size() == 0) throw ShapeError(std::string(what) + ": empty maps");
  if (!est.allFinite() || !truth.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite map value");
  }
}

void require_nonzero(const Eigen::VectorXd& v, const char* what, const char* which) {
  if (v.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateError(std::string(what) + ": " + which + " map is identically zero");
  }
}

void require_mesh(const Eigen::VectorXd& v, const TriMesh& mesh, const char* what) {
  if (v.size() != mesh.vertex_count()) {
    throw ShapeError(std::string(what) + ": map length does not match the mesh");
  }
}

std::vector<int> active_set(const Eigen::VectorXd& v, double threshold_frac) {
  const Eigen::VectorXd a = v.cwiseAbs();
  const double cut = threshold_frac * a.maxCoeff();
  std::vector<int> out;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] >= cut) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

Eigen::Index peak_index(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  double best_val = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best_val) {
      best_val = std::abs(v[i]);
      best = i;
    }
  }
  return best;
}

double shape_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  require_pair(est, truth, "shape_error");
  require_nonzero(est, "shape_error", "estimate");
  require_nonzero(truth, "shape_error", "truth");
  const Eigen::ArrayXd e = est.cwiseAbs().array() / est.cwiseAbs().sum();
  const Eigen::ArrayXd t = truth.cwiseAbs().array() / truth.cwiseAbs().sum();
  return std::min(1.0, 0.5 * (e - t).abs().sum());
}

double mean_corr(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  require_pair(est, truth, "mean_corr");
  const Eigen::ArrayXd e = est.array() - est.mean();
  const Eigen::ArrayXd t = truth.array() - truth.mean();
  const double ee = e.square().sum();
  const double tt = t.square().sum();
  if (!(ee > 0.0)) throw DegenerateError("mean_corr: estimate has zero variance");
  if (!(tt > 0.0)) throw DegenerateError("mean_corr: truth has zero variance");
  const double r = (e * t).sum() / std::sqrt(ee * tt);
  return std::clamp(r, -1.0, 1.0);
}

double localization_error(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                          const TriMesh& mesh) {
  require_pair(est, truth, "localization_error");
  require_mesh(est, mesh, "localization_error");
  require_nonzero(est, "localization_error", "estimate");
  require_nonzero(truth, "localization_error", "truth");
  const auto pe = static_cast<int>(peak_index(est));
  const auto pt = static_cast<int>(peak_index(truth));
  if (pe == pt) return 0.0;
  return geodesic_distances(mesh, pt)[pe];
}

double source_divergence(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                         const TriMesh& mesh, double threshold_frac) {
  require_pair(est, truth, "source_divergence");
  require_mesh(est, mesh, "source_divergence");
  if (!(threshold_frac > 0.0 && threshold_frac <= 1.0)) {
    throw ValidationError("source_divergence: threshold_frac must be in (0, 1]");
  }
  require_nonzero(est, "source_divergence", "estimate");
  require_nonzero(truth, "source_divergence", "truth");
  const auto est_active = active_set(est, threshold_frac);
  const auto truth_active = active_set(truth, threshold_frac);
  const Eigen::VectorXd d = geodesic_distances(mesh, truth_active);
  double sum = 0.0;
  for (int i : est_active) sum += d[i];
  return sum / static_cast<double>(est_active.size());
}

EvaluationReport evaluate(const SourceEstimate& est, const SourceEstimate& truth,
                          const TriMesh& mesh, double threshold_frac) {
  EvaluationReport r;
  r.threshold_frac = threshold_frac;
  r.se = shape_error(est.values, truth.values);
  r.mcc = mean_corr(est.values, truth.values);
  r.le_mm = localization_error(est.values, truth.values, mesh);
  r.sd_mm = source_divergence(est.values, truth.values, mesh, threshold_frac);
  return r;
}

}  // namespace esi
