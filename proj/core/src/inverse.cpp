#include "esi/inverse.hpp"

#include "esi/errors.hpp"
#include "esi/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace esi {

PriorSpec build_prior(const Eigen::VectorXd& weights, double epsilon_frac) {
  if (weights.size() == 0) throw ShapeError("prior needs at least one weight");
  if ((weights.array() < 0.0).any()) throw ValidationError("prior weights must be non-negative");
  if (!(epsilon_frac >= 0.0)) throw ValidationError("epsilon_frac must be non-negative");
  PriorSpec prior;
  prior.epsilon_frac = epsilon_frac;
  prior.lambda_bar = weights.mean();
  const Eigen::ArrayXd denom = weights.array() + epsilon_frac * prior.lambda_bar;
  if ((denom <= 0.0).any()) {
    throw DegenerateError("prior variance is unbounded: zero weight with zero regularisation");
  }
  prior.sigma_diag = denom.inverse().matrix();
  return prior;
}

PriorSpec build_prior(const BasisSet& basis, double epsilon_frac) {
  return build_prior(basis.weights(), epsilon_frac);
}

PriorSpec identity_prior(int size) {
  PriorSpec prior;
  prior.sigma_diag = Eigen::VectorXd::Ones(size);
  prior.epsilon_frac = 0.0;
  prior.lambda_bar = 1.0;
  return prior;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::GbfMap: return "GBF-MAP";
    case Method::HarmonicMap: return "Harmonic-MAP";
    case Method::MspMap: return "MSP-MAP";
    case Method::Mne: return "MNE";
    case Method::Dspm: return "dSPM";
    case Method::Sloreta: return "sLORETA";
    case Method::Eloreta: return "eLORETA";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (auto m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  std::string valid;
  for (auto m : kAllMethods) {
    if (!valid.empty()) valid += ", ";
    valid += to_string(m);
  }
  throw ValidationError("unknown method '" + std::string(name) + "'; valid methods: " + valid);
}

bool is_basis_method(Method method) {
  return method == Method::GbfMap || method == Method::HarmonicMap || method == Method::MspMap;
}

std::string_view family_name(Method method) {
  switch (method) {
    case Method::GbfMap: return "GBF";
    case Method::HarmonicMap: return "Harmonic";
    case Method::MspMap: return "MSP";
    default: return "none";
  }
}

// ---------------------------------------------------------------------------
// Basis-coefficient MAP

MapProblem::MapProblem(const Eigen::VectorXd& y, const ForwardModel& fm, const BasisSet& basis,
                       const PriorSpec& prior, const MapOptions& options)
    : basis_(basis) {
  if (y.size() != fm.sensor_count()) {
    throw ShapeError("data has " + std::to_string(y.size()) + " channels, lead field has " +
                     std::to_string(fm.sensor_count()));
  }
  if (basis.vertex_count() != fm.source_count()) {
    throw ShapeError("basis has " + std::to_string(basis.vertex_count()) +
                     " rows, lead field has " + std::to_string(fm.source_count()) + " sources");
  }
  if (prior.sigma_diag.size() != basis.size()) {
    throw ShapeError("prior size does not match basis size");
  }
  if (!(prior.sigma_diag.array() > 0.0).all() || !prior.sigma_diag.allFinite()) {
    throw ValidationError("prior variances must be positive and finite");
  }

  l_ = fm.leadfield() * basis.functions();
  y_ = y;
  if (options.prewhiten) {
    const Eigen::MatrixXd c = options.noise_cov
                                  ? *options.noise_cov
                                  : Eigen::MatrixXd::Identity(fm.sensor_count(), fm.sensor_count());
    const Eigen::MatrixXd w = linalg::inverse_sqrt_spd(c);
    l_ = w * l_;
    y_ = w * y_;
  }
  ltl_ = l_.transpose() * l_;
  lty_ = l_.transpose() * y_;
  sigma_inv_ = prior.sigma_diag.cwiseInverse();
  beta_scale_ = ltl_.trace() / static_cast<double>(basis.size());
}

Eigen::VectorXd MapProblem::coefficients(double beta) const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
  Eigen::MatrixXd g = ltl_;
  g.diagonal() += beta * sigma_inv_;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw LinAlgError("MAP normal matrix is not positive definite");
  const double rcond = llt.rcond();
  if (!(rcond * kMaxConditionNumber >= 1.0)) {
    throw LinAlgError("MAP normal matrix is numerically singular (condition estimate " +
                      std::to_string(1.0 / rcond) + ")");
  }
  return llt.solve(lty_);
}

double MapProblem::residual_sq(double beta) const {
  return (y_ - l_ * coefficients(beta)).squaredNorm();
}

InverseSolution MapProblem::solve(double beta) const {
  InverseSolution out;
  out.coefficients = coefficients(beta);
  out.method = std::string(to_string(basis_.family())) + "-MAP";
  out.source = SourceEstimate(basis_.functions() * out.coefficients, "solver:" + out.method);
  out.beta_used = beta;
  out.residual_norm = (y_ - l_ * out.coefficients).norm();
  return out;
}

InverseSolution solve_map(const Eigen::VectorXd& y, const ForwardModel& fm,
                          const BasisSet& basis, const PriorSpec& prior, double beta,
                          const MapOptions& options) {
  return MapProblem(y, fm, basis, prior, options).solve(beta);
}

BetaSelection select_beta_discrepancy(const Eigen::VectorXd& y, const ForwardModel& fm,
                                      const BasisSet& basis, const PriorSpec& prior,
                                      double noise_power, const MapOptions& options) {
  if (!(noise_power > 0.0)) throw ValidationError("noise power must be positive");
  const MapProblem problem(y, fm, basis, prior, options);
  return bisect_discrepancy([&](double beta) { return problem.residual_sq(beta); },
                            problem.beta_scale(), fm.sensor_count() * noise_power);
}

// ---------------------------------------------------------------------------
// Minimum-norm family

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& kkt, const Eigen::MatrixXd& c,
                                        double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(kkt + beta * c);
  if (llt.info() != Eigen::Success) throw LinAlgError("sensor Gram matrix is not positive definite");
  const double rcond = llt.rcond();
  if (!(rcond * kMaxConditionNumber >= 1.0)) {
    throw LinAlgError("sensor Gram matrix is numerically singular (condition estimate " +
                      std::to_string(1.0 / rcond) + ")");
  }
  return llt;
}

Eigen::MatrixXd covariance_or_identity(const std::optional<Eigen::MatrixXd>& cov, int m) {
  if (!cov) return Eigen::MatrixXd::Identity(m, m);
  if (cov->rows() != m || cov->cols() != m) {
    throw ShapeError("noise covariance must be " + std::to_string(m) + "x" + std::to_string(m));
  }
  linalg::require_symmetric(*cov, "noise covariance");
  return *cov;
}

void require_data(const Eigen::VectorXd& y, const ForwardModel& fm) {
  if (y.size() != fm.sensor_count()) {
    throw ShapeError("data has " + std::to_string(y.size()) + " channels, lead field has " +
                     std::to_string(fm.sensor_count()));
  }
}

InverseSolution make_solution(std::string_view method, Eigen::VectorXd x, double beta,
                              double residual) {
  InverseSolution out;
  out.method = std::string(method);
  out.source = SourceEstimate(std::move(x), "solver:" + out.method);
  out.beta_used = beta;
  out.residual_norm = residual;
  return out;
}

}  // namespace

MneProblem::MneProblem(const ForwardModel& fm, std::optional<Eigen::MatrixXd> noise_cov)
    : fm_(fm), c_(covariance_or_identity(noise_cov, fm.sensor_count())) {
  kkt_ = fm.leadfield() * fm.leadfield().transpose();
  beta_scale_ = kkt_.trace() / static_cast<double>(fm.sensor_count());
}

InverseSolution MneProblem::mne(const Eigen::VectorXd& y, double beta) const {
  require_data(y, fm_);
  const auto llt = factor_gram(kkt_, c_, beta);
  const Eigen::VectorXd z = llt.solve(y);
  Eigen::VectorXd x = fm_.leadfield().transpose() * z;
  const double residual = (beta * (c_ * z)).norm();  // y - K x = beta C z
  return make_solution("MNE", std::move(x), beta, residual);
}

double MneProblem::residual_sq(const Eigen::VectorXd& y, double beta) const {
  require_data(y, fm_);
  const auto llt = factor_gram(kkt_, c_, beta);
  return (beta * (c_ * llt.solve(y))).squaredNorm();
}

InverseSolution MneProblem::dspm(const Eigen::VectorXd& y, double beta) const {
  require_data(y, fm_);
  const auto llt = factor_gram(kkt_, c_, beta);
  const Eigen::MatrixXd& k = fm_.leadfield();
  const Eigen::MatrixXd gk = llt.solve(k);  // columns G^{-1} k_i = rows of W
  const Eigen::VectorXd z = llt.solve(y);
  const Eigen::VectorXd wy = k.transpose() * z;
  // diag(W C W^T)_i = (G^{-1} k_i)^T C (G^{-1} k_i)
  const Eigen::VectorXd noise_var = (gk.array() * (c_ * gk).array()).colwise().sum().transpose();
  Eigen::VectorXd x(wy.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(noise_var[i] > 1e-300)) {
      throw DegenerateError("dSPM noise normalisation is zero at source " + std::to_string(i));
    }
    x[i] = wy[i] / std::sqrt(noise_var[i]);
  }
  return make_solution("dSPM", std::move(x), beta, (beta * (c_ * z)).norm());
}

InverseSolution MneProblem::sloreta(const Eigen::VectorXd& y, double beta) const {
  require_data(y, fm_);
  const auto llt = factor_gram(kkt_, c_, beta);
  const Eigen::MatrixXd& k = fm_.leadfield();
  const Eigen::MatrixXd gk = llt.solve(k);
  const Eigen::VectorXd z = llt.solve(y);
  const Eigen::VectorXd wy = k.transpose() * z;
  // Resolution matrix diagonal R_ii = k_i^T G^{-1} k_i.
  const Eigen::VectorXd res = (k.array() * gk.array()).colwise().sum().transpose();
  Eigen::VectorXd x(wy.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(res[i] > 0.0)) {
      throw DegenerateError("sLORETA resolution diagonal is non-positive at source " +
                            std::to_string(i));
    }
    x[i] = wy[i] / std::sqrt(res[i]);
  }
  return make_solution("sLORETA", std::move(x), beta, (beta * (c_ * z)).norm());
}

InverseSolution solve_mne(const Eigen::VectorXd& y, const ForwardModel& fm,
                          const std::optional<Eigen::MatrixXd>& noise_cov, double beta) {
  return MneProblem(fm, noise_cov).mne(y, beta);
}

InverseSolution solve_dspm(const Eigen::VectorXd& y, const ForwardModel& fm,
                           const std::optional<Eigen::MatrixXd>& noise_cov, double beta) {
  return MneProblem(fm, noise_cov).dspm(y, beta);
}

InverseSolution solve_sloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                              const std::optional<Eigen::MatrixXd>& noise_cov, double beta) {
  return MneProblem(fm, noise_cov).sloreta(y, beta);
}

BetaSelection select_beta_discrepancy_mne(const Eigen::VectorXd& y, const ForwardModel& fm,
                                          const std::optional<Eigen::MatrixXd>& noise_cov,
                                          double noise_power) {
  if (!(noise_power > 0.0)) throw ValidationError("noise power must be positive");
  const MneProblem problem(fm, noise_cov);
  return bisect_discrepancy([&](double beta) { return problem.residual_sq(y, beta); },
                            problem.beta_scale(), fm.sensor_count() * noise_power);
}

// ---------------------------------------------------------------------------
// eLORETA

namespace {

struct EloretaWeights {
  Eigen::VectorXd weights;
  int iterations = 0;
};

EloretaWeights eloreta_weights(const Eigen::MatrixXd& k, const Eigen::MatrixXd& c, double beta,
                               const EloretaOptions& options) {
  const Eigen::Index n = k.cols();
  Eigen::VectorXd w = options.initial_weights ? *options.initial_weights
                                              : Eigen::VectorXd::Ones(n);
  if (w.size() != n || !(w.array() > 0.0).all()) {
    throw ValidationError("eLORETA initial weights must be positive, one per source");
  }
  double change = 0.0;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::MatrixXd kw = k * w.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd g = kw * k.transpose() + beta * c;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) throw LinAlgError("eLORETA Gram matrix is not positive definite");
    const Eigen::MatrixXd gk = llt.solve(k);
    const Eigen::ArrayXd quad = (k.array() * gk.array()).colwise().sum().transpose();
    if (!(quad > 0.0).all()) throw LinAlgError("eLORETA weight update is not positive");
    const Eigen::VectorXd next = quad.sqrt().matrix();
    change = ((next - w).array().abs() / w.array()).maxCoeff();
    w = next;
    if (change < options.tol) return {std::move(w), iter};
  }
  throw ConvergenceError("eLORETA weights did not converge in " +
                         std::to_string(options.max_iter) + " iterations; last relative change " +
                         std::to_string(change));
}

}  // namespace

InverseSolution solve_eloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                              const std::optional<Eigen::MatrixXd>& noise_cov, double beta,
                              const EloretaOptions& options) {
  require_data(y, fm);
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
  if (!(options.tol > 0.0)) throw ValidationError("eLORETA tolerance must be positive");
  const Eigen::MatrixXd c = covariance_or_identity(noise_cov, fm.sensor_count());
  const Eigen::MatrixXd& k = fm.leadfield();

  auto fixed = eloreta_weights(k, c, beta, options);
  const Eigen::VectorXd inv_w = fixed.weights.cwiseInverse();
  const Eigen::MatrixXd kw = k * inv_w.asDiagonal();
  const auto llt = factor_gram(kw * k.transpose(), c, beta);
  const Eigen::VectorXd z = llt.solve(y);
  Eigen::VectorXd x = inv_w.asDiagonal() * (k.transpose() * z);

  auto out = make_solution("eLORETA", std::move(x), beta, (beta * (c * z)).norm());
  out.iterations = fixed.iterations;
  out.source_weights = std::move(fixed.weights);
  return out;
}

BetaSelection select_beta_discrepancy_eloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                                              const std::optional<Eigen::MatrixXd>& noise_cov,
                                              double noise_power,
                                              const EloretaOptions& options) {
  if (!(noise_power > 0.0)) throw ValidationError("noise power must be positive");
  require_data(y, fm);
  const Eigen::MatrixXd c = covariance_or_identity(noise_cov, fm.sensor_count());
  const Eigen::MatrixXd& k = fm.leadfield();
  const double scale = (k * k.transpose()).trace() / static_cast<double>(fm.sensor_count());

  // Each probe warm-starts from the previous probe's weights.
  EloretaOptions warm = options;
  auto residual = [&](double beta) {
    auto fixed = eloreta_weights(k, c, beta, warm);
    warm.initial_weights = fixed.weights;
    const Eigen::MatrixXd kw = k * fixed.weights.cwiseInverse().asDiagonal();
    const auto llt = factor_gram(kw * k.transpose(), c, beta);
    return (beta * (c * llt.solve(y))).squaredNorm();
  };
  return bisect_discrepancy(residual, scale, fm.sensor_count() * noise_power);
}

}  // namespace esi
