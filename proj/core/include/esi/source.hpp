#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>

namespace esi {

/// Per-vertex source amplitudes (arbitrary units) with a provenance tag such
/// as "patch-synthetic", "file-import" or "solver:MNE".
struct SourceEstimate {
  Eigen::VectorXd values;
  std::string provenance;

  SourceEstimate() = default;
  SourceEstimate(Eigen::VectorXd v, std::string tag)
      : values(std::move(v)), provenance(std::move(tag)) {}

  Eigen::Index size() const { return values.size(); }
};

}  // namespace esi
