#include "esi/mesh.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"
#include "text_util.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <utility>

namespace esi {

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

struct EdgeUse {
  int count = 0;
  int first_from = -1;  // start vertex of the first directed traversal
};

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto& p = parent[static_cast<std::size_t>(x)];
    p = parent[static_cast<std::size_t>(p)];
    x = p;
  }
  return x;
}

}  // namespace

TriMesh::TriMesh(Vertices vertices, Faces faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  validate_and_index();
  label_hemispheres_by_centroid();
}

TriMesh::TriMesh(Vertices vertices, Faces faces, std::vector<Hemisphere> labels)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  validate_and_index();
  if (labels.size() != static_cast<std::size_t>(vertex_count())) {
    throw ShapeError("hemisphere labels: expected " + std::to_string(vertex_count()) +
                     " entries, got " + std::to_string(labels.size()));
  }
  hemisphere_ = std::move(labels);
}

void TriMesh::validate_and_index() {
  const int n = vertex_count();
  if (n == 0) throw TopologyError("mesh has no vertices");
  if (!vertices_.allFinite()) throw TopologyError("mesh has non-finite coordinates");

  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(static_cast<std::size_t>(face_count()) * 2);

  for (int f = 0; f < face_count(); ++f) {
    const auto tri = faces_.row(f);
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n) {
        throw TopologyError("face " + std::to_string(f) + " references vertex " +
                            std::to_string(tri[k]) + " of a " + std::to_string(n) +
                            "-vertex mesh");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw TopologyError("face " + std::to_string(f) + " has repeated vertex indices");
    }
    if (face_area(f) <= kMinFaceArea) {
      throw TopologyError("face " + std::to_string(f) + " is degenerate (zero area)");
    }
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      auto& use = edges[edge_key(a, b)];
      if (use.count == 0) {
        use.first_from = a;
      } else if (use.count == 1) {
        if (use.first_from == a) {
          throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") is traversed in the same direction by two faces; "
                              "mesh is not consistently oriented");
        }
      } else {
        throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") is shared by more than two faces");
      }
      ++use.count;
    }
  }
  edge_count_ = static_cast<int>(edges.size());

  // CSR adjacency, sorted for deterministic traversal.
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
  for (const auto& [key, use] : edges) {
    const int lo = static_cast<int>(key & 0xffffffffu);
    const int hi = static_cast<int>(key >> 32);
    nbrs[static_cast<std::size_t>(lo)].push_back(hi);
    nbrs[static_cast<std::size_t>(hi)].push_back(lo);
  }
  adjacency_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  adjacency_.clear();
  adjacency_.reserve(edges.size() * 2);
  for (int i = 0; i < n; ++i) {
    auto& list = nbrs[static_cast<std::size_t>(i)];
    std::sort(list.begin(), list.end());
    adjacency_.insert(adjacency_.end(), list.begin(), list.end());
    adjacency_offsets_[static_cast<std::size_t>(i) + 1] = static_cast<int>(adjacency_.size());
  }

  // Components, numbered in order of their lowest vertex.
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto unite = [&parent](int a, int b) {
    const int ra = find_root(parent, a);
    const int rb = find_root(parent, b);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  };
  for (int f = 0; f < face_count(); ++f) {
    unite(faces_(f, 0), faces_(f, 1));
    unite(faces_(f, 1), faces_(f, 2));
  }
  component_.assign(static_cast<std::size_t>(n), -1);
  std::map<int, int> root_to_id;
  for (int i = 0; i < n; ++i) {
    const int root = find_root(parent, i);
    auto [it, inserted] = root_to_id.try_emplace(root, static_cast<int>(root_to_id.size()));
    component_[static_cast<std::size_t>(i)] = it->second;
  }
  component_count_ = static_cast<int>(root_to_id.size());
}

void TriMesh::label_hemispheres_by_centroid() {
  hemisphere_.assign(static_cast<std::size_t>(vertex_count()), Hemisphere::Single);
  if (component_count_ < 2) return;
  std::vector<double> sum_x(static_cast<std::size_t>(component_count_), 0.0);
  std::vector<int> count(static_cast<std::size_t>(component_count_), 0);
  for (int i = 0; i < vertex_count(); ++i) {
    sum_x[static_cast<std::size_t>(component_[static_cast<std::size_t>(i)])] += vertices_(i, 0);
    ++count[static_cast<std::size_t>(component_[static_cast<std::size_t>(i)])];
  }
  for (int i = 0; i < vertex_count(); ++i) {
    const auto c = static_cast<std::size_t>(component_[static_cast<std::size_t>(i)]);
    hemisphere_[static_cast<std::size_t>(i)] =
        sum_x[c] / count[c] < 0.0 ? Hemisphere::Left : Hemisphere::Right;
  }
}

std::vector<int> TriMesh::component_vertices(int component) const {
  std::vector<int> out;
  for (int i = 0; i < vertex_count(); ++i) {
    if (component_[static_cast<std::size_t>(i)] == component) out.push_back(i);
  }
  return out;
}

std::span<const int> TriMesh::neighbors(int vertex) const {
  const auto b = static_cast<std::size_t>(adjacency_offsets_[static_cast<std::size_t>(vertex)]);
  const auto e =
      static_cast<std::size_t>(adjacency_offsets_[static_cast<std::size_t>(vertex) + 1]);
  return std::span<const int>(adjacency_).subspan(b, e - b);
}

double TriMesh::face_area(int face) const {
  const Eigen::Vector3d a = vertex(faces_(face, 0));
  const Eigen::Vector3d b = vertex(faces_(face, 1));
  const Eigen::Vector3d c = vertex(faces_(face, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriMesh::surface_area() const {
  double total = 0.0;
  for (int f = 0; f < face_count(); ++f) total += face_area(f);
  return total;
}

std::uint64_t TriMesh::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::int64_t dims[2] = {vertex_count(), face_count()};
  mix(dims, sizeof dims);
  mix(vertices_.data(), sizeof(double) * static_cast<std::size_t>(vertices_.size()));
  mix(faces_.data(), sizeof(int) * static_cast<std::size_t>(faces_.size()));
  return h;
}

ComponentMesh extract_component(const TriMesh& mesh, int component) {
  auto verts = mesh.component_vertices(component);
  if (verts.empty()) throw IndexError("no component " + std::to_string(component));
  std::vector<int> to_local(static_cast<std::size_t>(mesh.vertex_count()), -1);
  TriMesh::Vertices v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    to_local[static_cast<std::size_t>(verts[i])] = static_cast<int>(i);
    v.row(static_cast<Eigen::Index>(i)) = mesh.vertices().row(verts[i]);
  }
  std::vector<int> face_ids;
  for (int f = 0; f < mesh.face_count(); ++f) {
    if (mesh.component_of(mesh.faces()(f, 0)) == component) face_ids.push_back(f);
  }
  TriMesh::Faces faces(static_cast<Eigen::Index>(face_ids.size()), 3);
  for (std::size_t i = 0; i < face_ids.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      faces(static_cast<Eigen::Index>(i), k) =
          to_local[static_cast<std::size_t>(mesh.faces()(face_ids[i], k))];
    }
  }
  std::vector<Hemisphere> labels;
  labels.reserve(verts.size());
  for (int vi : verts) labels.push_back(mesh.hemisphere(vi));
  return {TriMesh(std::move(v), std::move(faces), std::move(labels)), std::move(verts)};
}

// ---------------------------------------------------------------------------
// File formats

namespace {

struct LineReader {
  std::vector<std::string_view> lines;
  std::size_t next = 0;
  std::string source;

  // Next non-blank line with '#' comments stripped; {0, ""} at EOF.
  std::pair<std::size_t, std::string_view> content() {
    while (next < lines.size()) {
      auto line = lines[next++];
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = detail::trim(line);
      if (!line.empty()) return {next, line};
    }
    return {0, {}};
  }

  std::pair<std::size_t, std::string_view> require(const char* what) {
    auto r = content();
    if (r.first == 0) throw ParseError(source + ": unexpected end of file, expected " + what);
    return r;
  }

  std::string at(std::size_t line) const { return source + ":" + std::to_string(line) + ": "; }
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

int parse_vertex_index(std::string_view tok, const std::string& ctx) {
  const auto v = detail::parse_index(tok, ctx);
  if (v > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw ParseError(ctx + "vertex index out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

TriMesh parse_off(std::string_view text, const std::string& source_name) {
  LineReader r{detail::split_lines(text), 0, source_name};
  auto [hl, header] = r.require("OFF header");
  if (header != "OFF") throw ParseError(r.at(hl) + "expected 'OFF' header");

  auto [cl, counts_line] = r.require("vertex/face counts");
  const auto counts = split_ws(counts_line);
  if (counts.size() != 3) throw ParseError(r.at(cl) + "expected \"V F E\"");
  const auto nv = detail::parse_index(counts[0], r.at(cl));
  const auto nf = detail::parse_index(counts[1], r.at(cl));
  (void)detail::parse_index(counts[2], r.at(cl));

  TriMesh::Vertices v(static_cast<Eigen::Index>(nv), 3);
  for (std::size_t i = 0; i < nv; ++i) {
    auto [ln, line] = r.require("vertex line");
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw ParseError(r.at(ln) + "expected \"x y z\"");
    for (int k = 0; k < 3; ++k) {
      v(static_cast<Eigen::Index>(i), k) = detail::parse_double(tok[static_cast<std::size_t>(k)], r.at(ln));
    }
  }
  TriMesh::Faces f(static_cast<Eigen::Index>(nf), 3);
  for (std::size_t i = 0; i < nf; ++i) {
    auto [ln, line] = r.require("face line");
    const auto tok = split_ws(line);
    if (tok.size() != 4 || tok[0] != "3") {
      throw ParseError(r.at(ln) + "expected triangle \"3 i j k\"");
    }
    for (int k = 0; k < 3; ++k) {
      f(static_cast<Eigen::Index>(i), k) =
          parse_vertex_index(tok[static_cast<std::size_t>(k) + 1], r.at(ln));
    }
  }
  if (auto [extra, _] = r.content(); extra != 0) {
    throw ParseError(r.at(extra) + "trailing data after faces");
  }
  return TriMesh(std::move(v), std::move(f));
}

TriMesh parse_ply(std::string_view text, const std::string& source_name) {
  LineReader r{detail::split_lines(text), 0, source_name};
  // PLY comments are "comment ..." lines, not '#', but '#' stripping is harmless.
  auto [ml, magic] = r.require("ply magic");
  if (magic != "ply") throw ParseError(r.at(ml) + "expected 'ply'");

  enum class Element { None, Vertex, Face, Other };
  Element current = Element::None;
  std::size_t nv = 0, nf = 0;
  std::vector<std::string> vertex_props;
  bool face_list_seen = false;
  bool format_seen = false;
  std::vector<std::pair<Element, std::size_t>> element_order;

  while (true) {
    auto [ln, line] = r.require("end_header");
    const auto tok = split_ws(line);
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError(r.at(ln) + "malformed format line");
      if (tok[1] != "ascii") {
        throw FormatError(r.at(ln) + "only ASCII PLY is supported, got '" +
                          std::string(tok[1]) + "'");
      }
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(r.at(ln) + "malformed element line");
      const auto count = detail::parse_index(tok[2], r.at(ln));
      if (tok[1] == "vertex") {
        current = Element::Vertex;
        nv = count;
      } else if (tok[1] == "face") {
        current = Element::Face;
        nf = count;
      } else {
        current = Element::Other;
      }
      element_order.emplace_back(current, count);
    } else if (tok[0] == "property") {
      if (current == Element::Vertex) {
        if (tok.size() != 3 || tok[1] == "list") {
          throw ParseError(r.at(ln) + "unsupported vertex property");
        }
        vertex_props.emplace_back(tok[2]);
      } else if (current == Element::Face) {
        if (tok.size() != 5 || tok[1] != "list") {
          throw ParseError(r.at(ln) + "face element must have one list property");
        }
        face_list_seen = true;
      } else if (current == Element::None) {
        throw ParseError(r.at(ln) + "property before any element");
      }
    } else {
      throw ParseError(r.at(ln) + "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!format_seen) throw ParseError(source_name + ": PLY header has no format line");
  if (nf > 0 && !face_list_seen) throw ParseError(source_name + ": face element without list");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    if (vertex_props[i] == "x") ix = static_cast<int>(i);
    if (vertex_props[i] == "y") iy = static_cast<int>(i);
    if (vertex_props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw ParseError(source_name + ": vertex element needs x, y, z properties");
  }

  TriMesh::Vertices v(static_cast<Eigen::Index>(nv), 3);
  TriMesh::Faces f(static_cast<Eigen::Index>(nf), 3);
  for (const auto& [element, count] : element_order) {
    for (std::size_t i = 0; i < count; ++i) {
      auto [ln, line] = r.require("element data");
      const auto tok = split_ws(line);
      if (element == Element::Vertex) {
        if (tok.size() != vertex_props.size()) {
          throw ParseError(r.at(ln) + "vertex line has wrong number of values");
        }
        v(static_cast<Eigen::Index>(i), 0) = detail::parse_double(tok[static_cast<std::size_t>(ix)], r.at(ln));
        v(static_cast<Eigen::Index>(i), 1) = detail::parse_double(tok[static_cast<std::size_t>(iy)], r.at(ln));
        v(static_cast<Eigen::Index>(i), 2) = detail::parse_double(tok[static_cast<std::size_t>(iz)], r.at(ln));
      } else if (element == Element::Face) {
        if (tok.size() != 4 || tok[0] != "3") {
          throw ParseError(r.at(ln) + "expected triangle \"3 i j k\"");
        }
        for (int k = 0; k < 3; ++k) {
          f(static_cast<Eigen::Index>(i), k) =
              parse_vertex_index(tok[static_cast<std::size_t>(k) + 1], r.at(ln));
        }
      }
    }
  }
  if (auto [extra, _] = r.content(); extra != 0) {
    throw ParseError(r.at(extra) + "trailing data after elements");
  }
  return TriMesh(std::move(v), std::move(f));
}

std::string to_off(const TriMesh& mesh) {
  std::string out = "OFF\n" + std::to_string(mesh.vertex_count()) + " " +
                    std::to_string(mesh.face_count()) + " " +
                    std::to_string(mesh.edge_count()) + "\n";
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    out += io::format_double(mesh.vertices()(i, 0)) + " " +
           io::format_double(mesh.vertices()(i, 1)) + " " +
           io::format_double(mesh.vertices()(i, 2)) + "\n";
  }
  for (int f = 0; f < mesh.face_count(); ++f) {
    out += "3 " + std::to_string(mesh.faces()(f, 0)) + " " + std::to_string(mesh.faces()(f, 1)) +
           " " + std::to_string(mesh.faces()(f, 2)) + "\n";
  }
  return out;
}

std::string to_ply(const TriMesh& mesh) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " +
                    std::to_string(mesh.vertex_count()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n"
                    "element face " +
                    std::to_string(mesh.face_count()) +
                    "\nproperty list uchar int vertex_indices\nend_header\n";
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    out += io::format_double(mesh.vertices()(i, 0)) + " " +
           io::format_double(mesh.vertices()(i, 1)) + " " +
           io::format_double(mesh.vertices()(i, 2)) + "\n";
  }
  for (int f = 0; f < mesh.face_count(); ++f) {
    out += "3 " + std::to_string(mesh.faces()(f, 0)) + " " + std::to_string(mesh.faces()(f, 1)) +
           " " + std::to_string(mesh.faces()(f, 2)) + "\n";
  }
  return out;
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const auto text = io::read_text_file(path);
  return format == MeshFormat::OffAscii ? parse_off(text, path.string())
                                        : parse_ply(text, path.string());
}

TriMesh load_mesh(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".off") return load_mesh(path, MeshFormat::OffAscii);
  if (ext == ".ply") return load_mesh(path, MeshFormat::PlyAscii);
  throw FormatError(path.string() + ": unknown mesh extension (expected .off or .ply)");
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format) {
  io::write_text_file(path, format == MeshFormat::OffAscii ? to_off(mesh) : to_ply(mesh));
}

std::vector<Hemisphere> load_hemisphere_sidecar(const std::filesystem::path& path,
                                                int vertex_count) {
  const auto text = io::read_text_file(path);
  std::vector<Hemisphere> labels;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line == "L") {
      labels.push_back(Hemisphere::Left);
    } else if (line == "R") {
      labels.push_back(Hemisphere::Right);
    } else {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) +
                       ": expected 'L' or 'R', got '" + std::string(line) + "'");
    }
  }
  if (labels.size() != static_cast<std::size_t>(vertex_count)) {
    throw ShapeError(path.string() + ": " + std::to_string(labels.size()) +
                     " labels for a " + std::to_string(vertex_count) + "-vertex mesh");
  }
  return labels;
}

TriMesh with_hemisphere_labels(const TriMesh& mesh, std::vector<Hemisphere> labels) {
  return TriMesh(mesh.vertices(), mesh.faces(), std::move(labels));
}

// ---------------------------------------------------------------------------
// Generators

TriMesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > kMaxIcosphereSubdivisions) {
    throw LimitError("icosphere subdivisions must be in [0, " +
                     std::to_string(kMaxIcosphereSubdivisions) + "], got " +
                     std::to_string(subdivisions));
  }
  if (!(radius > 0.0)) throw GeometryError("icosphere radius must be positive");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& p : v) p.normalize();

  for (int level = 0; level < subdivisions; ++level) {
    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = edge_key(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int ab = mid(tri[0], tri[1]);
      const int bc = mid(tri[1], tri[2]);
      const int ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }

  TriMesh::Vertices verts(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    verts.row(static_cast<Eigen::Index>(i)) = radius * v[i].transpose();
  }
  TriMesh::Faces faces(static_cast<Eigen::Index>(f.size()), 3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    faces.row(static_cast<Eigen::Index>(i)) << f[i][0], f[i][1], f[i][2];
  }
  return TriMesh(std::move(verts), std::move(faces));
}

TriMesh merge_meshes(const TriMesh& a, const TriMesh& b) {
  TriMesh::Vertices v(a.vertex_count() + b.vertex_count(), 3);
  v.topRows(a.vertex_count()) = a.vertices();
  v.bottomRows(b.vertex_count()) = b.vertices();
  TriMesh::Faces f(a.face_count() + b.face_count(), 3);
  f.topRows(a.face_count()) = a.faces();
  f.bottomRows(b.face_count()) = b.faces().array() + a.vertex_count();
  return TriMesh(std::move(v), std::move(f));
}

TriMesh transform_mesh(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation, double scale) {
  TriMesh::Vertices v(mesh.vertex_count(), 3);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    v.row(i) = (scale * (rotation * mesh.vertex(i)) + translation).transpose();
  }
  return TriMesh(std::move(v), mesh.faces(), mesh.hemisphere_labels());
}

Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> vertex_normals(const TriMesh& mesh) {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> n =
      Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>::Zero(mesh.vertex_count(), 3);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a = mesh.vertex(mesh.faces()(f, 0));
    const Eigen::Vector3d b = mesh.vertex(mesh.faces()(f, 1));
    const Eigen::Vector3d c = mesh.vertex(mesh.faces()(f, 2));
    // |cross| = 2 * area, so the sum is area-weighted.
    const Eigen::RowVector3d weighted = (b - a).cross(c - a).transpose();
    for (int k = 0; k < 3; ++k) n.row(mesh.faces()(f, k)) += weighted;
  }
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double len = n.row(i).norm();
    if (len > 0.0) n.row(i) /= len;
  }
  return n;
}

Eigen::VectorXd geodesic_distances(const TriMesh& mesh, int source_vertex) {
  const int sources[1] = {source_vertex};
  return geodesic_distances(mesh, std::span<const int>(sources));
}

Eigen::VectorXd geodesic_distances(const TriMesh& mesh, std::span<const int> sources) {
  const int n = mesh.vertex_count();
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (int s : sources) {
    if (s < 0 || s >= n) {
      throw IndexError("vertex " + std::to_string(s) + " out of range for a " +
                       std::to_string(n) + "-vertex mesh");
    }
    dist[s] = 0.0;
    queue.emplace(0.0, s);
  }
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    const Eigen::Vector3d pu = mesh.vertex(u);
    for (int w : mesh.neighbors(u)) {
      const double nd = d + (mesh.vertex(w) - pu).norm();
      if (nd < dist[w]) {
        dist[w] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  return dist;
}

}  // namespace esi
