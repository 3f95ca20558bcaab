#include "esi/forward.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"
#include "text_util.hpp"

#include <cmath>
#include <numbers>

namespace esi {

ForwardModel::ForwardModel(Eigen::MatrixXd leadfield, Points sensor_positions,
                           Points source_positions, std::vector<std::string> sensor_names)
    : leadfield_(std::move(leadfield)),
      sensor_positions_(std::move(sensor_positions)),
      source_positions_(std::move(source_positions)),
      sensor_names_(std::move(sensor_names)) {
  if (sensor_positions_.rows() != leadfield_.rows()) {
    throw ShapeError("lead field has " + std::to_string(leadfield_.rows()) + " rows but " +
                     std::to_string(sensor_positions_.rows()) + " sensor positions were given");
  }
  if (source_positions_.rows() != 0 && source_positions_.rows() != leadfield_.cols()) {
    throw ShapeError("lead field has " + std::to_string(leadfield_.cols()) + " columns but " +
                     std::to_string(source_positions_.rows()) + " source positions were given");
  }
  if (!sensor_names_.empty() &&
      sensor_names_.size() != static_cast<std::size_t>(leadfield_.rows())) {
    throw ShapeError("sensor name count does not match lead field rows");
  }
  if (sensor_names_.empty()) {
    for (Eigen::Index i = 0; i < leadfield_.rows(); ++i) {
      sensor_names_.push_back("S" + std::to_string(i + 1));
    }
  }
  if (!leadfield_.allFinite()) throw ParseError("lead field contains non-finite values");
}

std::vector<std::string> ForwardModel::diagnostics() const {
  std::vector<std::string> out;
  for (Eigen::Index r = 0; r < leadfield_.rows(); ++r) {
    if ((leadfield_.row(r).array() == 0.0).all()) {
      out.push_back("sensor " + sensor_names_[static_cast<std::size_t>(r)] +
                    " has an all-zero lead field row");
    }
  }
  for (Eigen::Index c = 0; c < leadfield_.cols(); ++c) {
    if ((leadfield_.col(c).array() == 0.0).all()) {
      out.push_back("source " + std::to_string(c) + " has an all-zero lead field column");
    }
  }
  return out;
}

SensorMeta load_sensor_meta(const std::filesystem::path& path) {
  const auto text = io::read_text_file(path);
  const auto lines = detail::split_lines(text);
  SensorMeta meta;
  std::vector<Eigen::Vector3d> pos;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto ctx = path.string() + ":" + std::to_string(i + 1) + ": ";
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) throw ParseError(ctx + "expected \"name x y z\"");
    meta.names.emplace_back(fields[0]);
    pos.emplace_back(detail::parse_double(fields[1], ctx), detail::parse_double(fields[2], ctx),
                     detail::parse_double(fields[3], ctx));
  }
  meta.positions.resize(static_cast<Eigen::Index>(pos.size()), 3);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    meta.positions.row(static_cast<Eigen::Index>(i)) = pos[i].transpose();
  }
  return meta;
}

void save_sensor_meta(const std::filesystem::path& path, const SensorMeta& meta) {
  std::string out;
  for (std::size_t i = 0; i < meta.names.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += meta.names[i] + " " + io::format_double(meta.positions(r, 0)) + " " +
           io::format_double(meta.positions(r, 1)) + " " +
           io::format_double(meta.positions(r, 2)) + "\n";
  }
  io::write_text_file(path, out);
}

ForwardModel load_leadfield(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& sensor_meta_path) {
  auto k = io::read_matrix(matrix_path);
  auto meta = load_sensor_meta(sensor_meta_path);
  if (static_cast<std::size_t>(k.rows()) != meta.names.size()) {
    throw ShapeError(matrix_path.string() + ": " + std::to_string(k.rows()) +
                     " rows but sensor metadata lists " + std::to_string(meta.names.size()) +
                     " sensors");
  }
  return ForwardModel(std::move(k), std::move(meta.positions), Points(0, 3),
                      std::move(meta.names));
}

ForwardModel load_leadfield(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& sensor_meta_path, const TriMesh& mesh) {
  auto fm = load_leadfield(matrix_path, sensor_meta_path);
  if (fm.source_count() != mesh.vertex_count()) {
    throw ShapeError(matrix_path.string() + ": " + std::to_string(fm.source_count()) +
                     " columns but the mesh has " + std::to_string(mesh.vertex_count()) +
                     " vertices");
  }
  return ForwardModel(fm.leadfield(), fm.sensor_positions(), mesh.vertices(), fm.sensor_names());
}

void save_leadfield(const std::filesystem::path& matrix_path,
                    const std::filesystem::path& sensor_meta_path, const ForwardModel& fm) {
  io::write_matrix(matrix_path, fm.leadfield());
  save_sensor_meta(sensor_meta_path, SensorMeta{fm.sensor_names(), fm.sensor_positions()});
}

double dipole_potential(const Eigen::Vector3d& sensor, const Eigen::Vector3d& position,
                        const Eigen::Vector3d& moment, double conductivity) {
  const Eigen::Vector3d d = sensor - position;
  const double r = d.norm();
  return moment.dot(d) / (4.0 * std::numbers::pi * conductivity * r * r * r);
}

ForwardModel analytic_leadfield(const TriMesh& mesh, const SensorMeta& sensors,
                                double conductivity) {
  if (!(conductivity > 0.0)) throw GeometryError("conductivity must be positive");
  if (sensors.positions.rows() == 0) throw ShapeError("no sensors given");
  if (static_cast<std::size_t>(sensors.positions.rows()) != sensors.names.size()) {
    throw ShapeError("sensor names and positions differ in length");
  }

  const Eigen::Vector3d centroid = mesh.vertices().colwise().mean().transpose();
  const double bound = (mesh.vertices().rowwise() - centroid.transpose()).rowwise().norm().maxCoeff();
  for (Eigen::Index m = 0; m < sensors.positions.rows(); ++m) {
    const double d = (sensors.positions.row(m).transpose() - centroid).norm();
    if (!(d > bound)) {
      throw GeometryError("sensor " + sensors.names[static_cast<std::size_t>(m)] +
                          " lies inside the mesh bounding sphere");
    }
  }

  const auto normals = vertex_normals(mesh);
  const int n = mesh.vertex_count();
  Eigen::MatrixXd k(sensors.positions.rows(), n);
  for (Eigen::Index m = 0; m < k.rows(); ++m) {
    const Eigen::Vector3d s = sensors.positions.row(m).transpose();
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d p = mesh.vertex(i);
      if ((s - p).norm() < 1e-6) {
        throw GeometryError("sensor " + sensors.names[static_cast<std::size_t>(m)] +
                            " coincides with source " + std::to_string(i));
      }
      k(m, i) = dipole_potential(s, p, normals.row(i).transpose(), conductivity);
    }
  }
  return ForwardModel(std::move(k), sensors.positions, mesh.vertices(), sensors.names);
}

SensorMeta make_sensor_cap(int count, double radius, const Eigen::Vector3d& center,
                           double coverage) {
  if (count < 1) throw ValidationError("sensor count must be positive");
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw ValidationError("sensor coverage must be in (0, 1]");
  }
  SensorMeta meta;
  meta.positions.resize(count, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    // z sweeps the cap [1 - 2 coverage, 1] in equal-area steps.
    const double z = 1.0 - 2.0 * coverage * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    meta.positions.row(i) =
        (center + radius * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z))
            .transpose();
    meta.names.push_back("E" + std::to_string(i + 1));
  }
  return meta;
}

Eigen::VectorXd project(const ForwardModel& fm, const Eigen::VectorXd& x) {
  if (x.size() != fm.source_count()) {
    throw ShapeError("source vector has length " + std::to_string(x.size()) +
                     ", lead field expects " + std::to_string(fm.source_count()));
  }
  return fm.leadfield() * x;
}

Eigen::VectorXd project(const ForwardModel& fm, const SourceEstimate& x) {
  return project(fm, x.values);
}

}  // namespace esi
