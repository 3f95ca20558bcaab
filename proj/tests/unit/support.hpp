#pragma once

#include "esi/forward.hpp"
#include "esi/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/QR>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace esi::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("esi-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double icosahedron_edge(double radius = 1.0) {
  return radius * 4.0 / std::sqrt(10.0 + 2.0 * std::sqrt(5.0));
}

// Icosphere of radius 75 mm with a 64-sensor analytic lead field.
inline ForwardModel fixture_leadfield(const TriMesh& mesh, int sensors = 64) {
  const Eigen::Vector3d c = mesh.vertices().colwise().mean().transpose();
  const double r = (mesh.vertices().rowwise() - c.transpose()).rowwise().norm().maxCoeff();
  return analytic_leadfield(mesh, make_sensor_cap(sensors, 1.25 * r, c));
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

inline Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, n, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace esi::test

namespace esi::test {

// Lead field without geometry: sensors at arbitrary distinct points.
inline ForwardModel bare_model(const Eigen::MatrixXd& k) {
  Points sensors(k.rows(), 3);
  for (Eigen::Index i = 0; i < k.rows(); ++i) sensors.row(i) << static_cast<double>(i), 0.0, 0.0;
  return ForwardModel(k, sensors, Points(0, 3));
}

}  // namespace esi::test
