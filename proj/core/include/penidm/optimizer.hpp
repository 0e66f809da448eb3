#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "penidm/penalty.hpp"

namespace penidm {

struct SolverConfig {
  double xi = 1e-6;
  int max_iter = 5000;
  double r0 = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double min_step = 1e-12;
  double norm_cap = 1e6;
  /// Trial steps from the Barzilai-Borwein estimate of the previous iteration.
  bool spectral = true;
  int restarts = 0;
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

enum class StopReason { ObjectiveDelta, ParamDelta, MaxIter };
std::string_view to_string(StopReason r);

struct FitResult {
  Eigen::VectorXd psi;
  double objective = 0.0;  // Q at psi
  double neg_log_lik = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIter;
  double final_step = 0.0;
  std::vector<double> trace;  // Q after each accepted step (when recorded)
};

/// Minimize smooth(x) + lambda1 * sum_{mask} |x_j|.
struct CompositeProblem {
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> smooth;
  std::vector<bool> mask;
  double lambda1 = 0.0;

  double l1(const Eigen::VectorXd& x) const;
};

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double lambda,
                               const std::vector<bool>& mask);

/// S_{step*lambda1}(psi - step*grad) on masked coordinates; plain gradient step elsewhere.
Eigen::VectorXd prox_step(const Eigen::VectorXd& psi, const Eigen::VectorXd& grad, double step,
                          double lambda1, const std::vector<bool>& mask);

struct StepResult {
  double step = 0.0;
  Eigen::VectorXd x;
  double smooth = 0.0;
  Eigen::VectorXd grad;
  int backtracks = 0;
};

/// Shrinks the trial step until the prox-mapped point satisfies the quadratic upper bound
/// and the sufficient-decrease condition. Throws NumericalError below config.min_step.
StepResult backtrack(const CompositeProblem& problem, const Eigen::VectorXd& x, double f,
                     const Eigen::VectorXd& grad, double trial_step, const SolverConfig& config);

/// Proximal gradient descent from `init`; returns the best iterate by objective.
FitResult minimize(const CompositeProblem& problem, const Eigen::VectorXd& init,
                   const SolverConfig& config);

CompositeProblem make_problem(const PenalizedObjective& objective);

/// Penalized fit with optional randomized restarts around `init`.
/// With active fusion the smoothed penalty leaves coefficients within `tol` of 0 but not at
/// it; every beta whose single-linkage chain (gaps <= tol) reaches 0 is set to exactly 0.
Eigen::VectorXd snap_fused_zeros(const ModelLayout& layout, const Eigen::VectorXd& psi,
                                 double tol = kFuseTolerance);

/// Minimizes from `init` plus `config.restarts` perturbed starts and keeps the best.
/// Fused problems are snapped with snap_fused_zeros afterwards.
FitResult fit(const PenalizedObjective& objective, const Eigen::VectorXd& init,
              const SolverConfig& config);

struct KktReport {
  bool ok = true;
  double max_violation = 0.0;  // max over zero coordinates of |grad_j| - lambda1
  int worst_index = -1;
};

/// Zero beta coordinates must satisfy the subgradient condition of the unsmoothed problem:
/// |d loss / d beta_j + fixed fusion signs| <= lambda1 + lambda2 * (#pairs fused at j) + tol.
KktReport kkt_audit(const PenalizedObjective& objective, const Eigen::VectorXd& psi,
                    double tol = 1e-4);

}  // namespace penidm
