#pragma once

#include "esi/basis.hpp"
#include "esi/forward.hpp"
#include "esi/source.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace esi {

/// Diagonal coefficient prior: sigma_diag[i] = 1 / (w[i] + epsilon_frac * mean(w)).
struct PriorSpec {
  Eigen::VectorXd sigma_diag;
  double epsilon_frac = 0.1;
  double lambda_bar = 0.0;
};

inline constexpr double kDefaultEpsilonFrac = 0.1;

PriorSpec build_prior(const Eigen::VectorXd& weights, double epsilon_frac = kDefaultEpsilonFrac);
PriorSpec build_prior(const BasisSet& basis, double epsilon_frac = kDefaultEpsilonFrac);
/// Sigma = I.
PriorSpec identity_prior(int size);

enum class Method { GbfMap, HarmonicMap, MspMap, Mne, Dspm, Sloreta, Eloreta };

inline constexpr std::array<Method, 7> kAllMethods = {
    Method::GbfMap, Method::HarmonicMap, Method::MspMap, Method::Mne,
    Method::Dspm,   Method::Sloreta,     Method::Eloreta};

std::string_view to_string(Method method);
/// Throws ValidationError listing the valid names.
Method parse_method(std::string_view name);
bool is_basis_method(Method method);
/// Basis family of a basis method; "none" for the classical solvers.
std::string_view family_name(Method method);

struct InverseSolution {
  Eigen::VectorXd coefficients;  // basis methods only
  SourceEstimate source;
  std::string method;
  double beta_used = 0.0;
  double residual_norm = 0.0;   // ||y - K x_hat|| (basis methods: ||y - L theta||)
  int iterations = 0;           // eLORETA only
  Eigen::VectorXd source_weights;  // eLORETA only
};

struct MapOptions {
  /// Apply C^{-1/2} to both y and L before solving.
  bool prewhiten = false;
  std::optional<Eigen::MatrixXd> noise_cov;
};

/// Basis-coefficient MAP problem with L = K A precomputed; solve() factors
/// the S x S system (L^T L + beta Sigma^{-1}) by Cholesky.
class MapProblem {
 public:
  MapProblem(const Eigen::VectorXd& y, const ForwardModel& fm, const BasisSet& basis,
             const PriorSpec& prior, const MapOptions& options = {});

  /// trace(L^T L) / S, the natural unit of beta.
  double beta_scale() const { return beta_scale_; }
  Eigen::VectorXd coefficients(double beta) const;
  /// ||y - L theta(beta)||^2 in the solved (possibly whitened) space.
  double residual_sq(double beta) const;
  InverseSolution solve(double beta) const;

  const Eigen::MatrixXd& gain() const { return l_; }

 private:
  const BasisSet& basis_;
  Eigen::MatrixXd l_;
  Eigen::MatrixXd ltl_;
  Eigen::VectorXd lty_;
  Eigen::VectorXd y_;
  Eigen::VectorXd sigma_inv_;
  double beta_scale_ = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e14;

/// theta = (L^T L + beta Sigma^{-1})^{-1} L^T y, x = A theta.
/// Throws LinAlgError when the system's condition estimate exceeds 1e14.
InverseSolution solve_map(const Eigen::VectorXd& y, const ForwardModel& fm,
                          const BasisSet& basis, const PriorSpec& prior, double beta,
                          const MapOptions& options = {});

struct BetaSelection {
  double beta = 0.0;
  bool at_boundary = false;  // target not bracketed; boundary value returned
  double residual_sq = 0.0;
};

/// Bisection on log(beta) over [1e-8, 1e8] * scale for
/// residual_sq(beta) = target within 1% relative. residual_sq must be
/// non-decreasing in beta.
template <typename ResidualFn>
BetaSelection bisect_discrepancy(ResidualFn&& residual_sq, double scale, double target);

/// Discrepancy principle for the MAP estimator: ||y - L theta||^2 = M * noise_power.
BetaSelection select_beta_discrepancy(const Eigen::VectorXd& y, const ForwardModel& fm,
                                      const BasisSet& basis, const PriorSpec& prior,
                                      double noise_power, const MapOptions& options = {});

/// Minimum-norm family with kernel W = K^T (K K^T + beta C)^{-1}, C = noise_cov or I.
class MneProblem {
 public:
  MneProblem(const ForwardModel& fm, std::optional<Eigen::MatrixXd> noise_cov = std::nullopt);

  /// trace(K K^T) / M.
  double beta_scale() const { return beta_scale_; }
  const Eigen::MatrixXd& noise_cov() const { return c_; }

  InverseSolution mne(const Eigen::VectorXd& y, double beta) const;
  InverseSolution dspm(const Eigen::VectorXd& y, double beta) const;
  InverseSolution sloreta(const Eigen::VectorXd& y, double beta) const;
  double residual_sq(const Eigen::VectorXd& y, double beta) const;

 private:
  const ForwardModel& fm_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd kkt_;
  double beta_scale_ = 0.0;
};

InverseSolution solve_mne(const Eigen::VectorXd& y, const ForwardModel& fm,
                          const std::optional<Eigen::MatrixXd>& noise_cov, double beta);
InverseSolution solve_dspm(const Eigen::VectorXd& y, const ForwardModel& fm,
                           const std::optional<Eigen::MatrixXd>& noise_cov, double beta);
InverseSolution solve_sloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                              const std::optional<Eigen::MatrixXd>& noise_cov, double beta);

BetaSelection select_beta_discrepancy_mne(const Eigen::VectorXd& y, const ForwardModel& fm,
                                          const std::optional<Eigen::MatrixXd>& noise_cov,
                                          double noise_power);

struct EloretaOptions {
  double tol = 1e-8;
  int max_iter = 100;
  /// Warm start for the source weights (defaults to all ones).
  std::optional<Eigen::VectorXd> initial_weights;
};

/// Fixed point w_i <- sqrt(k_i^T (K W^{-1} K^T + beta C)^{-1} k_i), then
/// x = W^{-1} K^T (K W^{-1} K^T + beta C)^{-1} y. Throws ConvergenceError if
/// the largest relative weight change is still >= tol after max_iter sweeps.
InverseSolution solve_eloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                              const std::optional<Eigen::MatrixXd>& noise_cov, double beta,
                              const EloretaOptions& options = {});

BetaSelection select_beta_discrepancy_eloreta(const Eigen::VectorXd& y, const ForwardModel& fm,
                                              const std::optional<Eigen::MatrixXd>& noise_cov,
                                              double noise_power,
                                              const EloretaOptions& options = {});

// ---------------------------------------------------------------------------

template <typename ResidualFn>
BetaSelection bisect_discrepancy(ResidualFn&& residual_sq, double scale, double target) {
  const double lo_beta = 1e-8 * scale;
  const double hi_beta = 1e8 * scale;
  const double r_lo = residual_sq(lo_beta);
  if (r_lo >= target) return {lo_beta, std::abs(r_lo - target) > 0.01 * target, r_lo};
  const double r_hi = residual_sq(hi_beta);
  if (r_hi <= target) return {hi_beta, std::abs(r_hi - target) > 0.01 * target, r_hi};

  double lo = std::log(lo_beta);
  double hi = std::log(hi_beta);
  BetaSelection best{hi_beta, false, r_hi};
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double beta = std::exp(mid);
    const double r = residual_sq(beta);
    best = {beta, false, r};
    if (std::abs(r - target) <= 0.01 * target) return best;
    if (r < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12) break;
  }
  return best;
}

}  // namespace esi
