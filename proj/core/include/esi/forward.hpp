#pragma once

#include "esi/mesh.hpp"
#include "esi/source.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace esi {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Lead field K (M sensors x N sources) with sensor and source geometry.
/// Sources are fixed-orientation (one scalar per vertex).
class ForwardModel {
 public:
  ForwardModel(Eigen::MatrixXd leadfield, Points sensor_positions, Points source_positions,
               std::vector<std::string> sensor_names = {});

  const Eigen::MatrixXd& leadfield() const { return leadfield_; }
  int sensor_count() const { return static_cast<int>(leadfield_.rows()); }
  int source_count() const { return static_cast<int>(leadfield_.cols()); }

  const Points& sensor_positions() const { return sensor_positions_; }
  /// Empty (0 rows) when the lead field was loaded without a mesh.
  const Points& source_positions() const { return source_positions_; }
  const std::vector<std::string>& sensor_names() const { return sensor_names_; }

  /// Warnings for all-zero rows (dead sensors) and columns (invisible sources).
  std::vector<std::string> diagnostics() const;

 private:
  Eigen::MatrixXd leadfield_;
  Points sensor_positions_;
  Points source_positions_;
  std::vector<std::string> sensor_names_;
};

struct SensorMeta {
  std::vector<std::string> names;
  Points positions;
};

/// One sensor per line: "name x y z" (mm).
SensorMeta load_sensor_meta(const std::filesystem::path& path);
void save_sensor_meta(const std::filesystem::path& path, const SensorMeta& meta);

/// Reads K verbatim (MAT-CSV or MAT-BIN, rows = sensors).
/// Throws ShapeError if the row count differs from the sensor count.
ForwardModel load_leadfield(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& sensor_meta_path);
/// As above, binding the sources to mesh vertices (column count must equal N).
ForwardModel load_leadfield(const std::filesystem::path& matrix_path,
                            const std::filesystem::path& sensor_meta_path, const TriMesh& mesh);

void save_leadfield(const std::filesystem::path& matrix_path,
                    const std::filesystem::path& sensor_meta_path, const ForwardModel& fm);

inline constexpr double kDefaultConductivity = 3.3e-4;  // S/mm

/// Infinite homogeneous medium: K[m,i] = n_i . (r_m - r_i) / (4 pi sigma |r_m - r_i|^3)
/// with n_i the area-weighted vertex normal. Sensors must lie strictly
/// outside the mesh bounding sphere (centred at the vertex centroid).
ForwardModel analytic_leadfield(const TriMesh& mesh, const SensorMeta& sensors,
                                double conductivity = kDefaultConductivity);

/// Potential of a unit dipole at `position` with unit `moment` direction.
double dipole_potential(const Eigen::Vector3d& sensor, const Eigen::Vector3d& position,
                        const Eigen::Vector3d& moment, double conductivity);

/// Quasi-uniform (Fibonacci) sensor positions on a sphere cap around
/// `center`. `coverage` is the covered fraction of the sphere, measured
/// from the +z pole (1 = full sphere).
SensorMeta make_sensor_cap(int count, double radius, const Eigen::Vector3d& center,
                           double coverage = 0.6);

/// Clean sensor data K x. Throws ShapeError on length mismatch.
Eigen::VectorXd project(const ForwardModel& fm, const SourceEstimate& x);
Eigen::VectorXd project(const ForwardModel& fm, const Eigen::VectorXd& x);

}  // namespace esi
