#pragma once

#include "esi/basis.hpp"
#include "esi/forward.hpp"
#include "esi/inverse.hpp"
#include "esi/mesh.hpp"
#include "esi/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace esi::cli {

/// Sectioned key-value configuration shared by `simulate`, `solve` and
/// `benchmark`. See README.md for the key reference.
struct BenchmarkConfig {
  std::filesystem::path base_dir;  // relative paths resolve here, then ESI_DATA_DIR

  // [mesh]
  std::string mesh = "icosphere:3:75";
  std::string hemisphere_sidecar;

  // [leadfield]
  std::string leadfield_kind = "analytic";  // analytic | file
  std::string sensors = "cap:64";           // cap:<count>[:<radius>[:<coverage>]] or a file
  double conductivity = kDefaultConductivity;
  std::string leadfield_matrix;
  std::string sensor_meta;

  // [methods]
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};

  // [basis]
  int gbf_count = 300;
  int harmonic_degree = 6;
  int msp_count = 50;
  bool per_hemisphere = true;
  MspWeighting msp_weights = MspWeighting::Uniform;
  double epsilon_frac = kDefaultEpsilonFrac;

  // [source]
  std::string source_kind = "patch";  // patch | import
  std::vector<int> centers;           // empty: a random centre per trial
  double fwhm_mm = 30.0;
  double amplitude = 1.0;
  std::vector<std::string> source_paths;

  // [noise]
  std::vector<NoiseKind> noise_kinds{NoiseKind::GaussianIid};
  std::string covariance;  // empty: kernel covariance over sensor positions
  double rho_mm = 40.0;
  CovNormalization normalization = CovNormalization::Correlation;

  // [benchmark]
  std::vector<double> snr_db{-20, -10, -5, 0, 5, 10, 20};
  int trials = 20;
  std::uint64_t seed = 1;
  std::string output = "results";
  int sample_maps = 0;
  double threshold_frac = 0.5;
  bool record_timing = false;

  // [solver]
  std::optional<double> beta;         // nullopt: discrepancy principle
  std::optional<double> noise_power;  // for `solve` with automatic beta
  bool prewhiten = false;
  double eloreta_tol = 1e-8;
  int eloreta_max_iter = 100;
};

/// Parses and validates; throws ParseError / ValidationError with the
/// offending key.
BenchmarkConfig load_config(const std::filesystem::path& path);
BenchmarkConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
void validate(const BenchmarkConfig& config);

/// Absolute path, config-relative path, or a path under ESI_DATA_DIR.
std::filesystem::path resolve_path(const BenchmarkConfig& config, const std::string& path);

/// Mesh path or "icosphere:<subdivisions>[:<radius>]".
TriMesh load_mesh_spec(const std::string& spec, const std::filesystem::path& base_dir);

/// Everything fixed across trials: mesh, lead field, noise covariance and
/// the basis sets the requested methods need.
struct Experiment {
  TriMesh mesh;
  ForwardModel fm;
  std::optional<Eigen::MatrixXd> covariance;  // for realistic noise
  std::optional<BasisSet> gbf;
  std::optional<BasisSet> harmonic;
  std::optional<BasisSet> msp;
};

Experiment build_experiment(const BenchmarkConfig& config);

const BasisSet& basis_for(const Experiment& ex, Method method);

/// Solves one method. beta: explicit, or discrepancy with noise_power.
InverseSolution run_method(const Experiment& ex, const BenchmarkConfig& config, Method method,
                           const Eigen::VectorXd& y, std::optional<double> beta,
                           std::optional<double> noise_power);

/// Source for trial `trial` (patch centre or import path chosen by index/seed).
SourceEstimate trial_source(const Experiment& ex, const BenchmarkConfig& config, int trial,
                            std::uint64_t seed);

}  // namespace esi::cli
