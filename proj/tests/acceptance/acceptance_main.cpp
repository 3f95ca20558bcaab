// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "esi/basis.hpp"
#include "esi/cli/commands.hpp"
#include "esi/cli/config.hpp"
#include "esi/errors.hpp"
#include "esi/forward.hpp"
#include "esi/inverse.hpp"
#include "esi/lbo.hpp"
#include "esi/metrics.hpp"
#include "esi/simulate.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace esi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

ForwardModel cap_leadfield(const TriMesh& mesh, int sensors) {
  const Eigen::Vector3d c = mesh.vertices().colwise().mean().transpose();
  const double r = (mesh.vertices().rowwise() - c.transpose()).rowwise().norm().maxCoeff();
  return analytic_leadfield(mesh, make_sensor_cap(sensors, 1.25 * r, c));
}

Outcome sphere_spectrum() {
  const auto t0 = Clock::now();
  const auto result = mesh_eigenmodes(make_icosphere(3, 1.0), 16);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  int k = 0;
  for (int l = 0; l <= 3; ++l) {
    for (int m = 0; m < 2 * l + 1; ++m, ++k) {
      const double exact = l * (l + 1.0);
      const double got = result.eigenvalues[k];
      worst = std::max(worst, l == 0 ? std::abs(got) : std::abs(got - exact) / exact);
    }
  }
  return {worst < 0.02 && elapsed < 5.0,
          "max relative error " + num(worst) + ", " + num(elapsed, 3) + " s"};
}

Outcome prior_formula() {
  const auto p = build_prior(Eigen::Vector3d(0, 2, 4));
  const Eigen::Vector3d expected(5.0, 1.0 / 2.2, 1.0 / 4.2);
  const double err = (p.sigma_diag - expected).cwiseAbs().maxCoeff();
  return {err <= 1e-12, "max abs error " + num(err)};
}

Outcome in_span_recovery() {
  const auto mesh = make_icosphere(3, 75.0);
  const auto fm = cap_leadfield(mesh, 64);
  const auto basis = gbf_basis(mesh, 50);
  const auto patch = patch_source(mesh, 100, 30.0);
  const Eigen::VectorXd theta = basis.functions().colPivHouseholderQr().solve(patch.values);
  const Eigen::VectorXd x = basis.functions() * theta;
  const MapProblem problem(fm.leadfield() * x, fm, basis, build_prior(basis));
  const auto sol = problem.solve(1e-10 * problem.beta_scale());
  const double rel = (sol.source.values - x).norm() / x.norm();
  const double se = shape_error(sol.source.values, x);
  return {rel < 1e-3 && se < 0.01, "relative error " + num(rel) + ", SE " + num(se)};
}

Outcome mne_equivalence() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    Points sensors = Points::Zero(8, 3);
    for (int i = 0; i < 8; ++i) sensors(i, 0) = i;
    const ForwardModel fm(gaussian_matrix(8, 20, rng), sensors, Points(0, 3));
    const Eigen::VectorXd y = gaussian_matrix(8, 1, rng);
    const double beta = std::exp(std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
    const auto mne = solve_mne(y, fm, std::nullopt, beta);
    const auto map = solve_map(y, fm, identity_basis(20), identity_prior(20), beta);
    worst = std::max(worst, (map.source.values - mne.source.values).norm() /
                                mne.source.values.norm());
  }
  return {worst <= 1e-9, "worst relative difference " + num(worst) + " over 50 instances"};
}

Outcome sloreta_zero_le() {
  const auto mesh = make_icosphere(2, 75.0);
  const auto fm = cap_leadfield(mesh, 64);
  const MneProblem problem(fm);
  const double beta = 1e-8 * problem.beta_scale();
  int exact = 0;
  double worst = 0.0;
  for (int j = 0; j < mesh.vertex_count(); ++j) {
    const Eigen::VectorXd truth = Eigen::VectorXd::Unit(mesh.vertex_count(), j);
    const auto sol = problem.sloreta(fm.leadfield().col(j), beta);
    const double le = localization_error(sol.source.values, truth, mesh);
    worst = std::max(worst, le);
    exact += le == 0.0;
  }
  return {exact == mesh.vertex_count(),
          std::to_string(exact) + "/" + std::to_string(mesh.vertex_count()) +
              " dipoles exact, worst LE " + num(worst) + " mm"};
}

Outcome snr_exactness() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> snr(-20.0, 20.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd clean = gaussian_matrix(64, 1, rng);
    const Eigen::VectorXd noise = gaussian_matrix(64, 1, rng);
    const double target = snr(rng);
    const auto mixed = mix_at_snr(clean, noise, target);
    const double got =
        10.0 * std::log10(signal_power(clean) / signal_power(mixed.noisy - clean));
    worst = std::max(worst, std::abs(got - target));
  }
  return {worst <= 1e-6, "worst deviation " + num(worst) + " dB over 1000 cases"};
}

cli::BenchmarkConfig directional_config() {
  // 642 vertices, 64 sensors covering the whole sphere, Gaussian noise.
  return cli::parse_config(
      "[mesh]\npath = icosphere:3:75\n"
      "[leadfield]\nkind = analytic\nsensors = cap:64:93.75:1.0\n"
      "[basis]\ngbf_count = 300\nharmonic_degree = 6\nmsp_count = 50\n"
      "[source]\nkind = patch\ncenters = random\nfwhm_mm = 30\n"
      "[noise]\nkinds = gaussian\n"
      "[benchmark]\nsnr_db = -20, -10, -5, 0, 5, 10, 20\ntrials = 20\nseed = 1\n",
      ".");
}

Outcome directional_benchmark() {
  const auto config = directional_config();
  const auto t0 = Clock::now();
  const auto result = cli::run_benchmark(config, {});
  const double elapsed = seconds_since(t0);

  std::map<std::pair<std::string, double>, double> se;
  for (const auto& s : result.summary) se[{s.method, s.snr_db}] = s.se_mean;
  bool ok = elapsed < 600.0;
  std::ostringstream detail;
  for (double snr : {0.0, 5.0, 10.0}) {
    const double gbf = se[{"GBF-MAP", snr}];
    detail << "SNR " << snr << ": GBF " << num(gbf, 3);
    for (const char* other : {"MNE", "dSPM", "sLORETA", "MSP-MAP"}) {
      const double v = se[{other, snr}];
      detail << ", " << other << " " << num(v, 3);
      ok = ok && std::isfinite(gbf) && gbf < v;
    }
    detail << "; ";
  }
  detail << num(elapsed, 3) << " s";
  return {ok, detail.str()};
}

Outcome realistic_covariance() {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd b = gaussian_matrix(16, 16, rng);
  const Eigen::MatrixXd cov = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(16, 16);
  const Eigen::MatrixXd target = normalize_covariance(cov, CovNormalization::Correlation);
  const Eigen::MatrixXd samples = realistic_noise_samples(cov, 100'000, 88);
  const Eigen::MatrixXd emp = samples * samples.transpose() / 100'000.0;
  const double rel = (emp - target).norm() / target.norm();
  return {rel < 0.05, "Frobenius relative error " + num(rel)};
}

Outcome determinism() {
  const auto config = directional_config();
  const auto a = cli::long_csv(cli::run_benchmark(config, {}).cells);
  const auto b = cli::long_csv(cli::run_benchmark(config, {std::nullopt, 2, false}).cells);
  return {a == b && a.size() > 100,
          std::string(a == b ? "identical" : "different") + " CSVs (" +
              std::to_string(a.size()) + " bytes)"};
}

Outcome eloreta_convergence() {
  const auto mesh = make_icosphere(2, 75.0);
  const auto fm = cap_leadfield(mesh, 64);
  const double beta = 0.01 * MneProblem(fm).beta_scale();
  const auto y = project(fm, patch_source(mesh, 0, 30.0));
  const auto sol = solve_eloreta(y, fm, std::nullopt, beta, {1e-8, 100, std::nullopt});
  return {sol.iterations <= 100, "converged in " + std::to_string(sol.iterations) + " iterations"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sphere spectrum oracle", sphere_spectrum},
      {"prior formula", prior_formula},
      {"noiseless in-span recovery", in_span_recovery},
      {"MNE equivalence oracle", mne_equivalence},
      {"sLORETA zero localization error", sloreta_zero_le},
      {"SNR exactness", snr_exactness},
      {"directional SNR sweep (GBF-MAP lowest SE)", directional_benchmark},
      {"realistic-noise covariance", realistic_covariance},
      {"benchmark determinism", determinism},
      {"eLORETA convergence", eloreta_convergence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
