#pragma once

#include "esi/forward.hpp"
#include "esi/lbo.hpp"
#include "esi/matrix_io.hpp"
#include "esi/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace esi {

enum class BasisFamily { GBF, Harmonic, MSP, Identity };

std::string_view to_string(BasisFamily family);
BasisFamily parse_basis_family(std::string_view name);

/// Columns of `functions()` are spatial basis functions over N vertices.
/// `weights()` are the spectral weights that feed the coefficient prior:
/// LBO eigenvalues for GBF, l(l+1) for Harmonic, 1 or sv-derived for MSP.
class BasisSet {
 public:
  BasisSet(BasisFamily family, Eigen::MatrixXd functions, Eigen::VectorXd weights,
           std::uint64_t mesh_fingerprint);

  BasisFamily family() const { return family_; }
  const Eigen::MatrixXd& functions() const { return functions_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  int size() const { return static_cast<int>(functions_.cols()); }
  int vertex_count() const { return static_cast<int>(functions_.rows()); }
  std::uint64_t mesh_fingerprint() const { return mesh_fingerprint_; }

 private:
  BasisFamily family_;
  Eigen::MatrixXd functions_;
  Eigen::VectorXd weights_;
  std::uint64_t mesh_fingerprint_;
};

/// LBO eigenmodes as basis functions. With `per_hemisphere`, `count` modes
/// are computed on every connected component and zero-padded elsewhere; the
/// columns of all components are merged in ascending eigenvalue order
/// (ties keep component order).
BasisSet gbf_basis(const TriMesh& mesh, int count, bool per_hemisphere = true,
                   const EigenOptions& options = {});

/// Real orthonormal spherical harmonics without the Condon-Shortley phase,
/// evaluated at `direction` (unit vector). Requires |m| <= l.
double real_spherical_harmonic(int degree, int order, const Eigen::Vector3d& direction);

/// All Y_lm for l <= max_degree at one direction; index l*l + (m + l).
Eigen::VectorXd real_spherical_harmonics(int max_degree, const Eigen::Vector3d& direction);

/// Each component (or the whole mesh when !per_hemisphere) is projected onto
/// the unit sphere about its vertex centroid and Y_lm are sampled there:
/// (max_degree+1)^2 columns per component, weights l(l+1).
/// Throws GeometryError if a vertex coincides with its centroid.
BasisSet harmonic_basis(const TriMesh& mesh, int max_degree, bool per_hemisphere = true);

enum class MspWeighting { Uniform, InverseSvSquared };

std::string_view to_string(MspWeighting weighting);
MspWeighting parse_msp_weighting(std::string_view name);

struct MspOptions {
  MspWeighting weighting = MspWeighting::Uniform;
  std::uint64_t mesh_fingerprint = 0;
};

/// First `count` right singular vectors of C^{-1/2} K (descending singular
/// values). Uniform weights by default; InverseSvSquared gives
/// sigma_1^2 / sigma_i^2 (min weight 1).
/// Throws LinAlgError if C is not SPD, DimensionError if count > min(M, N).
BasisSet msp_basis(const ForwardModel& fm, const Eigen::MatrixXd& noise_cov, int count,
                   const MspOptions& options = {});

/// N x N identity with zero weights; turns the basis solver into plain
/// Tikhonov on the sources.
BasisSet identity_basis(int vertex_count, std::uint64_t mesh_fingerprint = 0);

/// Writes <dir>/basis.{csv|bin}, <dir>/weights.vec and <dir>/basis.header
/// (family, S, mesh_fingerprint).
void save_basis(const std::filesystem::path& dir, const BasisSet& basis,
                io::MatrixFormat format = io::MatrixFormat::Csv);
BasisSet load_basis(const std::filesystem::path& dir);

}  // namespace esi
