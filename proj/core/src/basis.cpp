#include "esi/basis.hpp"

#include "esi/errors.hpp"
#include "esi/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace esi {

std::string_view to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::GBF: return "GBF";
    case BasisFamily::Harmonic: return "Harmonic";
    case BasisFamily::MSP: return "MSP";
    case BasisFamily::Identity: return "Identity";
  }
  return "?";
}

BasisFamily parse_basis_family(std::string_view name) {
  if (name == "GBF") return BasisFamily::GBF;
  if (name == "Harmonic") return BasisFamily::Harmonic;
  if (name == "MSP") return BasisFamily::MSP;
  if (name == "Identity") return BasisFamily::Identity;
  throw ParseError("unknown basis family '" + std::string(name) + "'");
}

std::string_view to_string(MspWeighting weighting) {
  return weighting == MspWeighting::Uniform ? "uniform" : "inverse-sv-squared";
}

MspWeighting parse_msp_weighting(std::string_view name) {
  if (name == "uniform") return MspWeighting::Uniform;
  if (name == "inverse-sv-squared") return MspWeighting::InverseSvSquared;
  throw ParseError("unknown MSP weighting '" + std::string(name) +
                   "' (expected uniform or inverse-sv-squared)");
}

BasisSet::BasisSet(BasisFamily family, Eigen::MatrixXd functions, Eigen::VectorXd weights,
                   std::uint64_t mesh_fingerprint)
    : family_(family),
      functions_(std::move(functions)),
      weights_(std::move(weights)),
      mesh_fingerprint_(mesh_fingerprint) {
  if (functions_.cols() == 0) throw ShapeError("basis has no columns");
  if (functions_.cols() > functions_.rows()) {
    throw ShapeError("basis has more columns (" + std::to_string(functions_.cols()) +
                     ") than vertices (" + std::to_string(functions_.rows()) + ")");
  }
  if (weights_.size() != functions_.cols()) {
    throw ShapeError("basis weight count does not match column count");
  }
  if (!functions_.allFinite() || !weights_.allFinite()) {
    throw NumericalError("basis contains non-finite values");
  }
  if ((weights_.array() < 0.0).any()) throw ValidationError("basis weights must be non-negative");
  for (Eigen::Index c = 0; c < functions_.cols(); ++c) {
    if ((functions_.col(c).array() == 0.0).all()) {
      throw DegenerateError("basis column " + std::to_string(c) + " is identically zero");
    }
  }
  if (family_ == BasisFamily::GBF || family_ == BasisFamily::Harmonic) {
    for (Eigen::Index i = 1; i < weights_.size(); ++i) {
      if (weights_[i] < weights_[i - 1]) {
        throw ValidationError("GBF/Harmonic basis weights must be sorted ascending");
      }
    }
  }
}

namespace {

struct Block {
  Eigen::MatrixXd columns;   // parent-mesh rows
  Eigen::VectorXd weights;
};

// Interleaves component blocks by ascending weight; stable across components.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> merge_by_weight(const std::vector<Block>& blocks,
                                                            Eigen::Index rows) {
  struct Ref {
    double weight;
    std::size_t block;
    Eigen::Index col;
  };
  std::vector<Ref> refs;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (Eigen::Index c = 0; c < blocks[b].weights.size(); ++c) {
      refs.push_back({blocks[b].weights[c], b, c});
    }
  }
  std::stable_sort(refs.begin(), refs.end(),
                   [](const Ref& a, const Ref& b) { return a.weight < b.weight; });
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(refs.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(refs.size()));
  for (std::size_t k = 0; k < refs.size(); ++k) {
    a.col(static_cast<Eigen::Index>(k)) = blocks[refs[k].block].columns.col(refs[k].col);
    w[static_cast<Eigen::Index>(k)] = refs[k].weight;
  }
  return {std::move(a), std::move(w)};
}

Eigen::MatrixXd scatter_rows(const Eigen::MatrixXd& local, const std::vector<int>& to_parent,
                             Eigen::Index parent_rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(parent_rows, local.cols());
  for (std::size_t i = 0; i < to_parent.size(); ++i) {
    out.row(to_parent[i]) = local.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::MatrixXd harmonic_block(const TriMesh& mesh, const std::vector<int>& vertices,
                               int max_degree) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int v : vertices) centroid += mesh.vertex(v);
  centroid /= static_cast<double>(vertices.size());

  const int cols = (max_degree + 1) * (max_degree + 1);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(vertices.size()), cols);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Eigen::Vector3d d = mesh.vertex(vertices[i]) - centroid;
    const double len = d.norm();
    if (!(len > 1e-9)) {
      throw GeometryError("vertex " + std::to_string(vertices[i]) +
                          " coincides with its component centroid");
    }
    out.row(static_cast<Eigen::Index>(i)) =
        real_spherical_harmonics(max_degree, d / len).transpose();
  }
  return out;
}

}  // namespace

BasisSet gbf_basis(const TriMesh& mesh, int count, bool per_hemisphere,
                   const EigenOptions& options) {
  if (!per_hemisphere || mesh.component_count() == 1) {
    auto modes = mesh_eigenmodes(mesh, count, options);
    // Clamp round-off negatives of the zero mode.
    Eigen::VectorXd w = modes.eigenvalues.cwiseMax(0.0);
    return BasisSet(BasisFamily::GBF, std::move(modes.eigenvectors), std::move(w),
                    mesh.fingerprint());
  }

  std::vector<Block> blocks;
  for (int c = 0; c < mesh.component_count(); ++c) {
    auto part = extract_component(mesh, c);
    if (count > part.mesh.vertex_count()) {
      throw DimensionError("component " + std::to_string(c) + " has " +
                           std::to_string(part.mesh.vertex_count()) + " vertices, fewer than " +
                           std::to_string(count) + " requested modes");
    }
    auto modes = mesh_eigenmodes(part.mesh, count, options);
    blocks.push_back({scatter_rows(modes.eigenvectors, part.to_parent, mesh.vertex_count()),
                      modes.eigenvalues.cwiseMax(0.0)});
  }
  auto [a, w] = merge_by_weight(blocks, mesh.vertex_count());
  return BasisSet(BasisFamily::GBF, std::move(a), std::move(w), mesh.fingerprint());
}

Eigen::VectorXd real_spherical_harmonics(int max_degree, const Eigen::Vector3d& direction) {
  if (max_degree < 0) throw ValidationError("harmonic degree must be non-negative");
  const int L = max_degree;
  const double x = std::clamp(direction.z(), -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  const double phi = std::atan2(direction.y(), direction.x());

  // Fully normalised associated Legendre functions pbar(l, m) such that
  // Y_l0 = pbar(l,0), Y_l,+-m = sqrt(2) pbar(l,m) {cos, sin}(m phi).
  Eigen::MatrixXd pbar = Eigen::MatrixXd::Zero(L + 1, L + 1);
  pbar(0, 0) = std::sqrt(1.0 / (4.0 * std::numbers::pi));
  for (int m = 1; m <= L; ++m) {
    pbar(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pbar(m - 1, m - 1);
  }
  for (int m = 0; m < L; ++m) pbar(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * pbar(m, m);
  for (int m = 0; m <= L; ++m) {
    for (int l = m + 2; l <= L; ++l) {
      const double ll = static_cast<double>(l) * l;
      const double mm = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * ll - 1.0) / (ll - mm));
      const double lm1 = static_cast<double>(l - 1) * (l - 1);
      const double b = std::sqrt((lm1 - mm) / (4.0 * lm1 - 1.0));
      pbar(l, m) = a * (x * pbar(l - 1, m) - b * pbar(l - 2, m));
    }
  }

  Eigen::VectorXd out((L + 1) * (L + 1));
  for (int l = 0; l <= L; ++l) {
    out[l * l + l] = pbar(l, 0);
    for (int m = 1; m <= l; ++m) {
      out[l * l + l + m] = std::numbers::sqrt2 * pbar(l, m) * std::cos(m * phi);
      out[l * l + l - m] = std::numbers::sqrt2 * pbar(l, m) * std::sin(m * phi);
    }
  }
  return out;
}

double real_spherical_harmonic(int degree, int order, const Eigen::Vector3d& direction) {
  if (degree < 0 || std::abs(order) > degree) {
    throw ValidationError("spherical harmonic requires |m| <= l");
  }
  return real_spherical_harmonics(degree, direction)[degree * degree + degree + order];
}

BasisSet harmonic_basis(const TriMesh& mesh, int max_degree, bool per_hemisphere) {
  if (max_degree < 0) throw ValidationError("harmonic degree must be non-negative");
  const int per_block = (max_degree + 1) * (max_degree + 1);
  Eigen::VectorXd block_weights(per_block);
  for (int l = 0; l <= max_degree; ++l) {
    for (int m = -l; m <= l; ++m) block_weights[l * l + l + m] = static_cast<double>(l) * (l + 1);
  }

  std::vector<Block> blocks;
  if (!per_hemisphere || mesh.component_count() == 1) {
    std::vector<int> all(static_cast<std::size_t>(mesh.vertex_count()));
    std::iota(all.begin(), all.end(), 0);
    blocks.push_back({harmonic_block(mesh, all, max_degree), block_weights});
  } else {
    for (int c = 0; c < mesh.component_count(); ++c) {
      const auto verts = mesh.component_vertices(c);
      blocks.push_back({scatter_rows(harmonic_block(mesh, verts, max_degree), verts,
                                     mesh.vertex_count()),
                        block_weights});
    }
  }
  auto [a, w] = merge_by_weight(blocks, mesh.vertex_count());
  if (a.cols() > a.rows()) {
    throw DimensionError("harmonic degree " + std::to_string(max_degree) + " needs " +
                         std::to_string(a.cols()) + " columns but the mesh has only " +
                         std::to_string(a.rows()) + " vertices");
  }
  return BasisSet(BasisFamily::Harmonic, std::move(a), std::move(w), mesh.fingerprint());
}

BasisSet msp_basis(const ForwardModel& fm, const Eigen::MatrixXd& noise_cov, int count,
                   const MspOptions& options) {
  const int m = fm.sensor_count();
  const int n = fm.source_count();
  if (noise_cov.rows() != m || noise_cov.cols() != m) {
    throw ShapeError("noise covariance must be " + std::to_string(m) + "x" + std::to_string(m));
  }
  if (count < 1 || count > std::min(m, n)) {
    throw DimensionError("MSP basis size must be in [1, " + std::to_string(std::min(m, n)) +
                         "], got " + std::to_string(count));
  }
  const Eigen::MatrixXd whitened = linalg::inverse_sqrt_spd(noise_cov) * fm.leadfield();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(whitened, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();

  Eigen::MatrixXd a = svd.matrixV().leftCols(count);
  linalg::canonicalize_column_signs(a);

  Eigen::VectorXd w = Eigen::VectorXd::Ones(count);
  if (options.weighting == MspWeighting::InverseSvSquared) {
    if (!(sv[count - 1] > 0.0)) {
      throw LinAlgError("whitened lead field has a zero singular value within the MSP basis");
    }
    for (int i = 0; i < count; ++i) w[i] = (sv[0] * sv[0]) / (sv[i] * sv[i]);
  }
  return BasisSet(BasisFamily::MSP, std::move(a), std::move(w), options.mesh_fingerprint);
}

BasisSet identity_basis(int vertex_count, std::uint64_t mesh_fingerprint) {
  return BasisSet(BasisFamily::Identity, Eigen::MatrixXd::Identity(vertex_count, vertex_count),
                  Eigen::VectorXd::Zero(vertex_count), mesh_fingerprint);
}

void save_basis(const std::filesystem::path& dir, const BasisSet& basis,
                io::MatrixFormat format) {
  std::filesystem::create_directories(dir);
  io::write_matrix(dir / (format == io::MatrixFormat::Bin ? "basis.bin" : "basis.csv"),
                   basis.functions(), format);
  io::write_vector(dir / "weights.vec", basis.weights());
  io::write_manifest(dir / "basis.header",
                     {{"family", std::string(to_string(basis.family()))},
                      {"S", std::to_string(basis.size())},
                      {"mesh_fingerprint", std::to_string(basis.mesh_fingerprint())},
                      {"matrix", format == io::MatrixFormat::Bin ? "basis.bin" : "basis.csv"}});
}

BasisSet load_basis(const std::filesystem::path& dir) {
  const auto header = io::read_manifest(dir / "basis.header");
  auto get = [&](const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError((dir / "basis.header").string() + ": missing " + key);
    return it->second;
  };
  auto a = io::read_matrix(dir / get("matrix"));
  auto w = io::read_vector(dir / "weights.vec");
  if (std::to_string(a.cols()) != get("S")) {
    throw ShapeError((dir / "basis.header").string() + ": S does not match the basis matrix");
  }
  return BasisSet(parse_basis_family(get("family")), std::move(a), std::move(w),
                  std::stoull(get("mesh_fingerprint")));
}

}  // namespace esi
