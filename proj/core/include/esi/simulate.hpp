#pragma once

#include "esi/forward.hpp"
#include "esi/mesh.hpp"
#include "esi/source.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

namespace esi {

enum class NoiseKind { GaussianIid, RealisticCovariance };
enum class CovNormalization { Correlation, TraceOne, None };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);  // "gaussian" | "realistic"
std::string_view to_string(CovNormalization norm);
CovNormalization parse_cov_normalization(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::GaussianIid;
  /// Sensor covariance for realistic noise. When absent, a Gaussian kernel
  /// over sensor positions with length scale kernel_rho_mm is used.
  std::optional<Eigen::MatrixXd> covariance;
  double kernel_rho_mm = 40.0;
  CovNormalization normalization = CovNormalization::Correlation;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct TrialRecord {
  SourceEstimate true_source;
  Eigen::VectorXd clean_sensors;
  Eigen::VectorXd noisy_sensors;
  NoiseSpec noise_spec;
  double achieved_snr_db = 0.0;
  double noise_power = 0.0;  // mean squared amplitude of the added noise
};

/// Gaussian bump of geodesic distance: amplitude * exp(-4 ln2 d^2 / fwhm^2).
/// Vertices unreachable from the centre get 0.
SourceEstimate patch_source(const TriMesh& mesh, int center_vertex, double fwhm_mm,
                            double amplitude = 1.0);

/// VEC file with one value per vertex. Throws ShapeError on length mismatch.
SourceEstimate import_source_map(const std::filesystem::path& path, const TriMesh& mesh);
void export_source_map(const std::filesystem::path& path, const SourceEstimate& source);

/// Standard normal samples; identical for identical seeds.
Eigen::VectorXd gaussian_noise(int sensor_count, std::uint64_t seed);

Eigen::MatrixXd normalize_covariance(const Eigen::MatrixXd& cov, CovNormalization norm);

/// exp(-|s_i - s_j|^2 / (2 rho^2)) over sensor positions.
Eigen::MatrixXd kernel_covariance(const Points& sensors, double rho_mm);

/// E sqrt(diag(V)) R with (V, E) the eigenpairs of the normalised covariance
/// and R standard normal (drawn exactly as gaussian_noise draws). Throws
/// LinAlgError for eigenvalues below -1e-10 * trace.
Eigen::VectorXd realistic_noise(const Eigen::MatrixXd& cov, std::uint64_t seed,
                                CovNormalization norm = CovNormalization::Correlation);

/// `count` independent realistic-noise samples as columns (one stream).
Eigen::MatrixXd realistic_noise_samples(const Eigen::MatrixXd& cov, int count,
                                        std::uint64_t seed,
                                        CovNormalization norm = CovNormalization::Correlation);

/// Mean squared amplitude.
double signal_power(const Eigen::VectorXd& v);

struct MixResult {
  Eigen::VectorXd noisy;
  double achieved_snr_db = 0.0;
  double noise_power = 0.0;
};

/// Rescales the noise so that 10 log10(P_clean / P_noise) = snr_db and adds it.
/// Throws DegenerateError for an all-zero clean signal or noise.
MixResult mix_at_snr(const Eigen::VectorXd& clean, const Eigen::VectorXd& noise, double snr_db);

/// Forward projection, noise draw and mixing for one trial.
TrialRecord make_trial(const ForwardModel& fm, const SourceEstimate& source,
                       const NoiseSpec& spec);

/// Independent 64-bit stream seed from a base seed and a path of indices.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// <dir>/{true_source,clean,noisy}.vec + manifest.txt
void write_trial_archive(const std::filesystem::path& dir, const TrialRecord& trial);

}  // namespace esi
