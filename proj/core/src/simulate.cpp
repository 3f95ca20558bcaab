#include "esi/simulate.hpp"

#include "esi/errors.hpp"
#include "esi/linalg.hpp"
#include "esi/matrix_io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace esi {

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::GaussianIid ? "gaussian" : "realistic";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "gaussian" || name == "gaussian-iid") return NoiseKind::GaussianIid;
  if (name == "realistic" || name == "realistic-covariance") {
    return NoiseKind::RealisticCovariance;
  }
  throw ParseError("unknown noise kind '" + std::string(name) +
                   "' (expected gaussian or realistic)");
}

std::string_view to_string(CovNormalization norm) {
  switch (norm) {
    case CovNormalization::Correlation: return "correlation";
    case CovNormalization::TraceOne: return "trace-one";
    case CovNormalization::None: return "none";
  }
  return "?";
}

CovNormalization parse_cov_normalization(std::string_view name) {
  if (name == "correlation") return CovNormalization::Correlation;
  if (name == "trace-one") return CovNormalization::TraceOne;
  if (name == "none") return CovNormalization::None;
  throw ParseError("unknown covariance normalization '" + std::string(name) + "'");
}

SourceEstimate patch_source(const TriMesh& mesh, int center_vertex, double fwhm_mm,
                            double amplitude) {
  if (!(fwhm_mm > 0.0)) throw ValidationError("patch FWHM must be positive");
  const Eigen::VectorXd d = geodesic_distances(mesh, center_vertex);
  const double k = 4.0 * std::numbers::ln2 / (fwhm_mm * fwhm_mm);
  Eigen::VectorXd values(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    values[i] = std::isfinite(d[i]) ? amplitude * std::exp(-k * d[i] * d[i]) : 0.0;
  }
  return {std::move(values), "patch-synthetic"};
}

SourceEstimate import_source_map(const std::filesystem::path& path, const TriMesh& mesh) {
  auto values = io::read_vector(path);
  if (values.size() != mesh.vertex_count()) {
    throw ShapeError(path.string() + ": " + std::to_string(values.size()) +
                     " values for a " + std::to_string(mesh.vertex_count()) + "-vertex mesh");
  }
  if (!values.allFinite()) throw ParseError(path.string() + ": non-finite source value");
  return {std::move(values), "file-import"};
}

void export_source_map(const std::filesystem::path& path, const SourceEstimate& source) {
  io::write_vector(path, source.values);
}

namespace {

Eigen::VectorXd draw_normal(std::mt19937_64& rng, int count) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(count);
  for (int i = 0; i < count; ++i) out[i] = normal(rng);
  return out;
}

// Columns of E scaled by sqrt(V): the colouring transform of the covariance.
Eigen::MatrixXd colouring_transform(const Eigen::MatrixXd& cov, CovNormalization norm) {
  const Eigen::MatrixXd c = normalize_covariance(cov, norm);
  const Eigen::Index m = c.rows();
  const Eigen::MatrixXd off = c - Eigen::MatrixXd(c.diagonal().asDiagonal());
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if ((off.array() == 0.0).all()) {
    values = c.diagonal();
    vectors = Eigen::MatrixXd::Identity(m, m);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw LinAlgError("covariance eigendecomposition failed");
    values = eig.eigenvalues();
    vectors = eig.eigenvectors();
  }
  const double trace = c.trace();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (values[i] < -1e-10 * trace) {
      throw LinAlgError("covariance has negative eigenvalue " + std::to_string(values[i]));
    }
    values[i] = std::max(values[i], 0.0);
  }
  return vectors * values.cwiseSqrt().asDiagonal();
}

}  // namespace

Eigen::VectorXd gaussian_noise(int sensor_count, std::uint64_t seed) {
  if (sensor_count < 1) throw ValidationError("sensor count must be positive");
  std::mt19937_64 rng(seed);
  return draw_normal(rng, sensor_count);
}

Eigen::MatrixXd normalize_covariance(const Eigen::MatrixXd& cov, CovNormalization norm) {
  linalg::require_symmetric(cov, "noise covariance");
  switch (norm) {
    case CovNormalization::Correlation: {
      const Eigen::VectorXd d = cov.diagonal();
      if ((d.array() <= 0.0).any()) {
        throw LinAlgError("covariance has a non-positive variance; cannot form correlations");
      }
      const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
      Eigen::MatrixXd c = s.asDiagonal() * cov * s.asDiagonal();
      c.diagonal().setOnes();
      return c;
    }
    case CovNormalization::TraceOne: {
      const double t = cov.trace();
      if (!(t > 0.0)) throw LinAlgError("covariance has non-positive trace");
      return cov / t;
    }
    case CovNormalization::None: return cov;
  }
  return cov;
}

Eigen::MatrixXd kernel_covariance(const Points& sensors, double rho_mm) {
  if (!(rho_mm > 0.0)) throw ValidationError("kernel length scale must be positive");
  const Eigen::Index m = sensors.rows();
  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d2 = (sensors.row(i) - sensors.row(j)).squaredNorm();
      c(i, j) = std::exp(-d2 / (2.0 * rho_mm * rho_mm));
    }
  }
  return c;
}

Eigen::VectorXd realistic_noise(const Eigen::MatrixXd& cov, std::uint64_t seed,
                                CovNormalization norm) {
  return realistic_noise_samples(cov, 1, seed, norm).col(0);
}

Eigen::MatrixXd realistic_noise_samples(const Eigen::MatrixXd& cov, int count,
                                        std::uint64_t seed, CovNormalization norm) {
  const Eigen::MatrixXd t = colouring_transform(cov, norm);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd r(t.cols(), count);
  for (int k = 0; k < count; ++k) r.col(k) = draw_normal(rng, static_cast<int>(t.cols()));
  return t * r;
}

double signal_power(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

MixResult mix_at_snr(const Eigen::VectorXd& clean, const Eigen::VectorXd& noise, double snr_db) {
  if (clean.size() != noise.size()) throw ShapeError("clean and noise lengths differ");
  if (!std::isfinite(snr_db)) throw ValidationError("SNR must be finite");
  const double p_clean = signal_power(clean);
  const double p_noise = signal_power(noise);
  if (!(p_clean > 0.0)) throw DegenerateError("clean signal is identically zero");
  if (!(p_noise > 0.0)) throw DegenerateError("noise is identically zero");

  const double alpha = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  const Eigen::VectorXd scaled = alpha * noise;
  MixResult out;
  out.noise_power = signal_power(scaled);
  out.noisy = clean + scaled;
  out.achieved_snr_db = 10.0 * std::log10(p_clean / out.noise_power);
  return out;
}

TrialRecord make_trial(const ForwardModel& fm, const SourceEstimate& source,
                       const NoiseSpec& spec) {
  TrialRecord trial;
  trial.true_source = source;
  trial.noise_spec = spec;
  trial.clean_sensors = project(fm, source);

  Eigen::VectorXd noise;
  if (spec.kind == NoiseKind::GaussianIid) {
    noise = gaussian_noise(fm.sensor_count(), spec.seed);
  } else {
    const Eigen::MatrixXd cov = spec.covariance
                                    ? *spec.covariance
                                    : kernel_covariance(fm.sensor_positions(), spec.kernel_rho_mm);
    if (cov.rows() != fm.sensor_count()) {
      throw ShapeError("noise covariance does not match the sensor count");
    }
    noise = realistic_noise(cov, spec.seed, spec.normalization);
  }

  auto mixed = mix_at_snr(trial.clean_sensors, noise, spec.snr_db);
  trial.noisy_sensors = std::move(mixed.noisy);
  trial.achieved_snr_db = mixed.achieved_snr_db;
  trial.noise_power = mixed.noise_power;
  return trial;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  // splitmix64 finaliser chained over the path.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto p : path) h = mix(h ^ mix(p));
  return h;
}

void write_trial_archive(const std::filesystem::path& dir, const TrialRecord& trial) {
  std::filesystem::create_directories(dir);
  io::write_vector(dir / "true_source.vec", trial.true_source.values);
  io::write_vector(dir / "clean.vec", trial.clean_sensors);
  io::write_vector(dir / "noisy.vec", trial.noisy_sensors);
  const auto& spec = trial.noise_spec;
  io::Manifest m{{"noise_kind", std::string(to_string(spec.kind))},
                 {"snr_db", io::format_double(spec.snr_db)},
                 {"achieved_snr_db", io::format_double(trial.achieved_snr_db)},
                 {"noise_power", io::format_double(trial.noise_power)},
                 {"seed", std::to_string(spec.seed)},
                 {"source_provenance", trial.true_source.provenance},
                 {"sensors", std::to_string(trial.clean_sensors.size())},
                 {"sources", std::to_string(trial.true_source.size())}};
  if (spec.kind == NoiseKind::RealisticCovariance) {
    m["covariance"] = spec.covariance ? "file" : "kernel";
    m["kernel_rho_mm"] = io::format_double(spec.kernel_rho_mm);
    m["normalization"] = std::string(to_string(spec.normalization));
  }
  io::write_manifest(dir / "manifest.txt", m);
}

}  // namespace esi
