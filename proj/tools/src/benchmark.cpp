#include "esi/cli/commands.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>

namespace esi::cli {

namespace {

struct Unit {
  std::size_t noise = 0;
  std::size_t snr = 0;
  int trial = 0;
};

std::uint64_t noise_seed(const BenchmarkConfig& c, NoiseKind kind, int trial) {
  return derive_seed(c.seed, {static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(trial)});
}

std::uint64_t source_seed(const BenchmarkConfig& c, int trial) {
  return derive_seed(c.seed, {0x50u, static_cast<std::uint64_t>(trial)});
}

std::string map_stem(const std::string& noise, double snr, int trial) {
  return noise + "_snr" + io::format_double(snr) + "_t" + std::to_string(trial);
}

int basis_size(const Experiment& ex, Method method) {
  return is_basis_method(method) ? basis_for(ex, method).size() : ex.fm.source_count();
}

// All methods on one (noise, snr, trial) unit; one shared synthetic trial.
std::vector<CellResult> run_unit(const Experiment& ex, const BenchmarkConfig& c, const Unit& u,
                                 const std::filesystem::path& map_dir) {
  const NoiseKind kind = c.noise_kinds[u.noise];
  const std::string noise_name(to_string(kind));
  const double snr = c.snr_db[u.snr];

  NoiseSpec spec;
  spec.kind = kind;
  spec.snr_db = snr;
  spec.covariance = ex.covariance;
  spec.kernel_rho_mm = c.rho_mm;
  spec.normalization = c.normalization;
  spec.seed = noise_seed(c, kind, u.trial);

  std::vector<CellResult> out;
  out.reserve(c.methods.size());
  auto blank = [&](Method m) {
    CellResult r;
    r.method = std::string(to_string(m));
    r.family = std::string(family_name(m));
    r.basis_size = basis_size(ex, m);
    r.noise = noise_name;
    r.snr_db = snr;
    r.trial = u.trial;
    r.seed = spec.seed;
    return r;
  };

  TrialRecord trial;
  try {
    trial = make_trial(ex.fm, trial_source(ex, c, u.trial, source_seed(c, u.trial)), spec);
  } catch (const Error& e) {
    for (Method m : c.methods) {
      auto r = blank(m);
      r.status = e.kind();
      out.push_back(std::move(r));
    }
    return out;
  }

  const bool keep_maps = !map_dir.empty() && u.trial < c.sample_maps;
  if (keep_maps) {
    io::write_vector(map_dir / (map_stem(noise_name, snr, u.trial) + "_truth.vec"),
                     trial.true_source.values);
  }

  for (Method m : c.methods) {
    auto r = blank(m);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto sol = run_method(ex, c, m, trial.noisy_sensors, c.beta, trial.noise_power);
      const auto stop = std::chrono::steady_clock::now();
      if (c.record_timing) {
        r.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      }
      r.beta_used = sol.beta_used;
      r.metrics = evaluate(sol.source, trial.true_source, ex.mesh, c.threshold_frac);
      if (keep_maps) {
        io::write_vector(map_dir / (map_stem(noise_name, snr, u.trial) + "_" + r.method + ".vec"),
                         sol.source.values);
      }
    } catch (const Error& e) {
      r.status = e.kind();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string fmt(double v) {
  return std::isfinite(v) ? io::format_double(v) : std::string("nan");
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& c, const GlobalOptions& g,
                              const std::filesystem::path& map_dir) {
  const Experiment ex = build_experiment(c);
  log(g, "experiment: " + std::to_string(ex.mesh.vertex_count()) + " sources, " +
             std::to_string(ex.fm.sensor_count()) + " sensors");
  for (const auto& d : ex.fm.diagnostics()) std::cerr << "esi: warning: " << d << '\n';
  if (!map_dir.empty() && c.sample_maps > 0) std::filesystem::create_directories(map_dir);

  std::vector<Unit> units;
  for (std::size_t n = 0; n < c.noise_kinds.size(); ++n) {
    for (std::size_t s = 0; s < c.snr_db.size(); ++s) {
      for (int t = 0; t < c.trials; ++t) units.push_back({n, s, t});
    }
  }

  std::vector<std::vector<CellResult>> done(units.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      try {
        done[i] = run_unit(ex, c, units[i], map_dir);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, g.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  // Units are noise-major; rows go out method-major.
  BenchmarkResult result;
  result.cells.reserve(units.size() * c.methods.size());
  for (std::size_t m = 0; m < c.methods.size(); ++m) {
    for (const auto& cells : done) result.cells.push_back(cells[m]);
  }
  result.summary = summarize(result.cells);
  return result;
}

std::vector<ConditionSummary> summarize(const std::vector<CellResult>& cells) {
  std::vector<ConditionSummary> out;
  std::vector<std::vector<const CellResult*>> groups;
  for (const auto& cell : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ConditionSummary& s) {
      return s.method == cell.method && s.noise == cell.noise && s.snr_db == cell.snr_db;
    });
    if (it == out.end()) {
      ConditionSummary s;
      s.method = cell.method;
      s.family = cell.family;
      s.basis_size = cell.basis_size;
      s.noise = cell.noise;
      s.snr_db = cell.snr_db;
      out.push_back(s);
      groups.emplace_back();
      it = out.end() - 1;
    }
    if (cell.status == "ok") groups[static_cast<std::size_t>(it - out.begin())].push_back(&cell);
  }

  auto stats = [](const std::vector<const CellResult*>& g, auto field, double& mean, double& sem) {
    const auto n = static_cast<double>(g.size());
    if (g.empty()) {
      mean = sem = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    double sum = 0.0;
    for (const auto* c : g) sum += field(*c);
    mean = sum / n;
    if (g.size() < 2) {
      sem = 0.0;
      return;
    }
    double ss = 0.0;
    for (const auto* c : g) ss += (field(*c) - mean) * (field(*c) - mean);
    sem = std::sqrt(ss / (n - 1.0) / n);
  };

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    const auto& g = groups[i];
    s.n = static_cast<int>(g.size());
    stats(g, [](const CellResult& c) { return c.metrics.se; }, s.se_mean, s.se_sem);
    stats(g, [](const CellResult& c) { return c.metrics.mcc; }, s.mcc_mean, s.mcc_sem);
    stats(g, [](const CellResult& c) { return c.metrics.le_mm; }, s.le_mean, s.le_sem);
    stats(g, [](const CellResult& c) { return c.metrics.sd_mm; }, s.sd_mean, s.sd_sem);
  }
  return out;
}

std::string long_csv(const std::vector<CellResult>& cells) {
  std::string out = std::string(kLongCsvHeader) + "\n";
  for (const auto& r : cells) {
    const bool ok = r.status == "ok";
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    out += r.method + "," + r.family + "," + std::to_string(r.basis_size) + "," + r.noise + "," +
           fmt(r.snr_db) + "," + std::to_string(r.trial) + "," + std::to_string(r.seed) + "," +
           fmt(ok ? r.beta_used : nan) + "," + fmt(ok ? r.metrics.se : nan) + "," +
           fmt(ok ? r.metrics.mcc : nan) + "," + fmt(ok ? r.metrics.le_mm : nan) + "," +
           fmt(ok ? r.metrics.sd_mm : nan) + "," + fmt(r.wall_ms) + "," + r.status + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<ConditionSummary>& summary) {
  std::string out =
      "method,family,S,noise,snr_db,n,se_mean,se_sem,mcc_mean,mcc_sem,le_mm_mean,le_mm_sem,"
      "sd_mm_mean,sd_mm_sem\n";
  for (const auto& s : summary) {
    out += s.method + "," + s.family + "," + std::to_string(s.basis_size) + "," + s.noise + "," +
           fmt(s.snr_db) + "," + std::to_string(s.n) + "," + fmt(s.se_mean) + "," +
           fmt(s.se_sem) + "," + fmt(s.mcc_mean) + "," + fmt(s.mcc_sem) + "," + fmt(s.le_mean) +
           "," + fmt(s.le_sem) + "," + fmt(s.sd_mean) + "," + fmt(s.sd_sem) + "\n";
  }
  return out;
}

int cmd_benchmark(const std::filesystem::path& config_path,
                  const std::optional<std::filesystem::path>& out_dir, const GlobalOptions& g) {
  BenchmarkConfig config = load_config(config_path);
  if (g.seed) config.seed = *g.seed;
  const auto dir = out_dir ? *out_dir : resolve_path(config, config.output);
  std::filesystem::create_directories(dir);

  const auto result = run_benchmark(config, g, dir / "maps");
  io::write_text_file(dir / "results.csv", long_csv(result.cells));
  io::write_text_file(dir / "summary.csv", summary_csv(result.summary));

  std::string methods;
  for (Method m : config.methods) methods += (methods.empty() ? "" : ",") + std::string(to_string(m));
  std::string snrs;
  for (double s : config.snr_db) snrs += (snrs.empty() ? "" : ",") + io::format_double(s);
  io::write_manifest(dir / "manifest.txt",
                     {{"methods", methods},
                      {"snr_db", snrs},
                      {"trials", std::to_string(config.trials)},
                      {"seed", std::to_string(config.seed)},
                      {"source", config.source_kind == "patch"
                                     ? (config.centers.empty() ? "patch, random centre per trial"
                                                               : "patch, configured centres")
                                     : "imported maps"},
                      {"beta", config.beta ? io::format_double(*config.beta)
                                           : "discrepancy, tuned per method and trial"}});

  std::size_t ok = 0;
  for (const auto& c : result.cells) ok += c.status == "ok";
  log(g, std::to_string(ok) + "/" + std::to_string(result.cells.size()) + " cells succeeded");
  if (ok == 0) {
    std::cerr << "esi: every benchmark cell failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace esi::cli
