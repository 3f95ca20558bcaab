#include "esi/cli/commands.hpp"

#include "esi/errors.hpp"
#include "esi/lbo.hpp"
#include "esi/matrix_io.hpp"

#include <algorithm>
#include <iostream>

namespace esi::cli {

void log(const GlobalOptions& g, const std::string& message) {
  if (g.verbose) std::cerr << "esi: " << message << '\n';
}

int cmd_eigenmodes(const std::string& mesh_spec, int count, const std::filesystem::path& out_dir,
                   bool binary, const GlobalOptions& g) {
  if (count < 1) throw ValidationError("eigenmode count must be at least 1");
  const TriMesh mesh = load_mesh_spec(mesh_spec, std::filesystem::current_path());
  log(g, "mesh: " + std::to_string(mesh.vertex_count()) + " vertices, " +
             std::to_string(mesh.face_count()) + " faces");

  const auto result = mesh_eigenmodes(mesh, count);
  std::filesystem::create_directories(out_dir);
  io::write_vector(out_dir / "eigenvalues.vec", result.eigenvalues);
  const auto vec_name = binary ? "eigenvectors.bin" : "eigenvectors.csv";
  io::write_matrix(out_dir / vec_name, result.eigenvectors,
                   binary ? io::MatrixFormat::Bin : io::MatrixFormat::Csv);
  io::write_manifest(out_dir / "manifest.txt",
                     {{"mesh", mesh_spec},
                      {"mesh_fingerprint", std::to_string(mesh.fingerprint())},
                      {"vertices", std::to_string(mesh.vertex_count())},
                      {"count", std::to_string(count)},
                      {"eigenvalues", "eigenvalues.vec"},
                      {"eigenvectors", vec_name},
                      {"mass_orthonormal", result.mass_orthonormal ? "true" : "false"},
                      {"max_relative_residual", io::format_double(result.max_relative_residual)}});
  log(g, "wrote " + std::to_string(count) + " modes to " + out_dir.string());
  return kExitOk;
}

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 const SimulateOptions& options, const GlobalOptions& g) {
  BenchmarkConfig config = load_config(config_path);
  if (g.seed) config.seed = *g.seed;
  if (options.trial < 0) throw ValidationError("trial index must be non-negative");
  const Experiment ex = build_experiment(config);

  NoiseSpec spec;
  spec.kind = options.noise ? parse_noise_kind(*options.noise) : config.noise_kinds.front();
  spec.snr_db = options.snr_db ? *options.snr_db : config.snr_db.front();
  spec.covariance = ex.covariance;
  spec.kernel_rho_mm = config.rho_mm;
  spec.normalization = config.normalization;
  spec.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(spec.kind),
                                        static_cast<std::uint64_t>(options.trial)});

  const auto source = trial_source(ex, config, options.trial,
                                   derive_seed(config.seed, {0x50u, static_cast<std::uint64_t>(
                                                                        options.trial)}));
  const auto trial = make_trial(ex.fm, source, spec);
  write_trial_archive(out_dir, trial);
  log(g, "trial written to " + out_dir.string() + " (achieved SNR " +
             io::format_double(trial.achieved_snr_db) + " dB)");
  return kExitOk;
}

int cmd_solve(const std::filesystem::path& config_path, const std::filesystem::path& data_path,
              const std::filesystem::path& out_dir, const GlobalOptions& g) {
  const BenchmarkConfig config = load_config(config_path);
  const Experiment ex = build_experiment(config);
  const Eigen::VectorXd y = io::read_vector(data_path);
  if (y.size() != ex.fm.sensor_count()) {
    throw ShapeError(data_path.string() + ": " + std::to_string(y.size()) +
                     " samples but the lead field has " + std::to_string(ex.fm.sensor_count()) +
                     " sensors");
  }

  std::optional<double> noise_power = config.noise_power;
  if (!config.beta && !noise_power) {
    // A trial archive records the exact noise power next to the data.
    const auto manifest = data_path.parent_path() / "manifest.txt";
    std::error_code ec;
    if (std::filesystem::exists(manifest, ec)) {
      const auto m = io::read_manifest(manifest);
      if (auto it = m.find("noise_power"); it != m.end()) {
        noise_power = std::stod(it->second);
        log(g, "noise power " + it->second + " taken from " + manifest.string());
      }
    }
    if (!noise_power) {
      throw ValidationError("solver.beta is auto but no noise power is known; set "
                            "solver.noise_power or solver.beta");
    }
  }

  std::filesystem::create_directories(out_dir);
  io::Manifest summary;
  int succeeded = 0;
  bool numeric_failure = false;
  for (Method method : config.methods) {
    const std::string name(to_string(method));
    io::Manifest m{{"method", name}, {"data", data_path.string()}};
    try {
      const auto sol = run_method(ex, config, method, y, config.beta, noise_power);
      io::write_vector(out_dir / (name + ".vec"), sol.source.values);
      m["status"] = "ok";
      m["beta_used"] = io::format_double(sol.beta_used);
      m["residual_norm"] = io::format_double(sol.residual_norm);
      m["provenance"] = sol.source.provenance;
      if (is_basis_method(method)) {
        m["family"] = std::string(family_name(method));
        m["basis_size"] = std::to_string(sol.coefficients.size());
      }
      if (method == Method::Eloreta) m["iterations"] = std::to_string(sol.iterations);
      ++succeeded;
      log(g, name + ": beta " + m["beta_used"]);
    } catch (const Error& e) {
      m["status"] = e.kind();
      m["error"] = e.what();
      numeric_failure = numeric_failure || dynamic_cast<const NumericError*>(&e) != nullptr;
      std::cerr << "esi: " << name << " failed: " << e.what() << '\n';
    }
    summary[name] = m["status"];
    io::write_manifest(out_dir / (name + ".manifest.txt"), m);
  }
  io::write_manifest(out_dir / "manifest.txt", summary);
  if (succeeded > 0) return kExitOk;
  return numeric_failure ? kExitNumeric : kExitData;
}

}  // namespace esi::cli
