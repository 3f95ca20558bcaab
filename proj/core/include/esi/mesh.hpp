#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esi {

enum class Hemisphere : std::uint8_t { Single, Left, Right };

enum class MeshFormat { OffAscii, PlyAscii };

/// Immutable, validated triangle surface. Coordinates are millimetres.
///
/// Construction enforces: face indices in range, three distinct corners,
/// triangle area above 1e-12 mm^2, every edge shared by at most two faces and
/// traversed in opposite directions by those two faces (consistent
/// orientation). Violations throw TopologyError.
class TriMesh {
 public:
  using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
  using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

  static constexpr double kMinFaceArea = 1e-12;

  TriMesh(Vertices vertices, Faces faces);
  /// Explicit per-vertex hemisphere labels (e.g. from a sidecar file).
  TriMesh(Vertices vertices, Faces faces, std::vector<Hemisphere> labels);

  int vertex_count() const { return static_cast<int>(vertices_.rows()); }
  int face_count() const { return static_cast<int>(faces_.rows()); }
  int edge_count() const { return edge_count_; }
  int euler_characteristic() const { return vertex_count() - edge_count() + face_count(); }

  const Vertices& vertices() const { return vertices_; }
  const Faces& faces() const { return faces_; }
  Eigen::Vector3d vertex(int i) const { return vertices_.row(i).transpose(); }

  /// Connected components of the edge graph; isolated vertices form their own.
  int component_count() const { return component_count_; }
  int component_of(int vertex) const { return component_[static_cast<std::size_t>(vertex)]; }
  const std::vector<int>& components() const { return component_; }
  /// Vertex indices of one component, ascending.
  std::vector<int> component_vertices(int component) const;

  Hemisphere hemisphere(int vertex) const { return hemisphere_[static_cast<std::size_t>(vertex)]; }
  const std::vector<Hemisphere>& hemisphere_labels() const { return hemisphere_; }

  /// Edge-graph neighbours of a vertex, ascending.
  std::span<const int> neighbors(int vertex) const;

  double face_area(int face) const;
  double surface_area() const;

  /// Stable 64-bit hash of vertex coordinates and faces (FNV-1a over the
  /// raw little-endian bytes).
  std::uint64_t fingerprint() const;

 private:
  void validate_and_index();
  void label_hemispheres_by_centroid();

  Vertices vertices_;
  Faces faces_;
  int edge_count_ = 0;
  int component_count_ = 0;
  std::vector<int> component_;
  std::vector<Hemisphere> hemisphere_;
  std::vector<int> adjacency_offsets_;
  std::vector<int> adjacency_;
};

/// Sub-mesh made of one connected component, plus the map from local vertex
/// index to the parent mesh's vertex index.
struct ComponentMesh {
  TriMesh mesh;
  std::vector<int> to_parent;
};

ComponentMesh extract_component(const TriMesh& mesh, int component);

TriMesh parse_off(std::string_view text, const std::string& source_name = "<memory>");
TriMesh parse_ply(std::string_view text, const std::string& source_name = "<memory>");
std::string to_off(const TriMesh& mesh);
std::string to_ply(const TriMesh& mesh);

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format inferred from the extension (.off / .ply).
TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format);

/// Sidecar: one label per line, "L" or "R".
std::vector<Hemisphere> load_hemisphere_sidecar(const std::filesystem::path& path,
                                                int vertex_count);
TriMesh with_hemisphere_labels(const TriMesh& mesh, std::vector<Hemisphere> labels);

inline constexpr int kMaxIcosphereSubdivisions = 7;

/// Loop-free midpoint subdivision of the icosahedron projected onto a sphere
/// centred at the origin. N = 10*4^k + 2, F = 20*4^k.
TriMesh make_icosphere(int subdivisions, double radius = 1.0);

/// Disjoint union of two meshes (second mesh's indices shifted).
TriMesh merge_meshes(const TriMesh& a, const TriMesh& b);

/// Rigid/affine helper used in tests and fixtures: v -> scale * R v + t.
TriMesh transform_mesh(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation, double scale = 1.0);

/// Area-weighted vertex normals, unit length.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> vertex_normals(const TriMesh& mesh);

/// Dijkstra over the edge graph with Euclidean edge lengths. Unreachable
/// vertices get +infinity.
Eigen::VectorXd geodesic_distances(const TriMesh& mesh, int source_vertex);

/// Distance from every vertex to the nearest of several sources.
Eigen::VectorXd geodesic_distances(const TriMesh& mesh, std::span<const int> sources);

}  // namespace esi
