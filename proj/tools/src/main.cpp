#include "esi/cli/commands.hpp"
#include "esi/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace esi::cli;

  CLI::App app{"Geometric basis-function EEG/MEG source imaging toolkit", "esi"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured base seed");
  app.add_option("-j,--jobs", g.jobs, "Worker threads for the benchmark")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

  std::string mesh_spec;
  int count = 0;
  std::string out_dir;
  bool binary = false;
  auto* eig = app.add_subcommand("eigenmodes", "Compute Laplace-Beltrami eigenmodes of a mesh");
  eig->add_option("mesh", mesh_spec, "Mesh file (.off/.ply) or icosphere:<subdiv>[:<radius>]")
      ->required();
  eig->add_option("-n,--count", count, "Number of modes")->required()->check(CLI::PositiveNumber);
  eig->add_option("-o,--out", out_dir, "Output directory")->required();
  eig->add_flag("--binary", binary, "Write eigenvectors as MAT-BIN");

  std::string config_path;
  SimulateOptions sim_opts;
  std::string noise;
  double snr = 0.0;
  auto* sim = app.add_subcommand("simulate", "Generate one synthetic trial archive");
  sim->add_option("config", config_path, "Configuration file")->required();
  sim->add_option("-o,--out", out_dir, "Output directory")->required();
  auto* noise_opt = sim->add_option("--noise", noise, "gaussian or realistic");
  auto* snr_opt = sim->add_option("--snr", snr, "SNR in dB");
  sim->add_option("--trial", sim_opts.trial, "Trial index")->check(CLI::NonNegativeNumber);

  std::string data_path;
  auto* solve = app.add_subcommand("solve", "Solve the inverse problem for one sensor vector");
  solve->add_option("config", config_path, "Configuration file")->required();
  solve->add_option("data", data_path, "Sensor data (VEC)")->required();
  solve->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* bench = app.add_subcommand("benchmark", "Run the SNR sweep benchmark");
  bench->add_option("config", config_path, "Configuration file")->required();
  auto* bench_out = bench->add_option("-o,--out", out_dir, "Output directory (overrides config)");

  std::string csv_path;
  double bar_snr = 5.0;
  auto* report = app.add_subcommand("report", "Turn benchmark results into plot-ready tables");
  report->add_option("results", csv_path, "Long-format results CSV")->required();
  report->add_option("-o,--out", out_dir, "Output directory")->required();
  report->add_option("--bar-snr", bar_snr, "SNR of the bar table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*eig) return cmd_eigenmodes(mesh_spec, count, out_dir, binary, g);
    if (*sim) {
      if (*noise_opt) sim_opts.noise = noise;
      if (*snr_opt) sim_opts.snr_db = snr;
      return cmd_simulate(config_path, out_dir, sim_opts, g);
    }
    if (*solve) return cmd_solve(config_path, data_path, out_dir, g);
    if (*bench) {
      std::optional<std::filesystem::path> out;
      if (*bench_out) out = out_dir;
      return cmd_benchmark(config_path, out, g);
    }
    if (*report) return cmd_report(csv_path, out_dir, bar_snr, g);
  } catch (const esi::NumericError& e) {
    std::cerr << "esi: " << e.kind() << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const esi::Error& e) {
    std::cerr << "esi: " << e.kind() << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "esi: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
