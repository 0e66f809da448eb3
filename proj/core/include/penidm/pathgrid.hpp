#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "penidm/optimizer.hpp"

namespace penidm {

struct LambdaGrid {
  std::vector<double> lambda1;  // strictly decreasing
  std::vector<double> lambda2;  // starts at 0, nondecreasing
};

struct GridOptions {
  int n_lambda1 = 21;
  int n_lambda2 = 4;
  /// Largest fusion weight; 0 selects lambda1_max / 4.
  double lambda2_max = 0.0;
  /// The lambda1 sequence never goes below lambda1_max * min_ratio ...
  double min_ratio = 1e-3;
  /// ... and successive values differ by at most this factor.
  double max_step_ratio = 0.9;
};

/// Crude starting point: beta = 0, baselines at the exponential rate of each transition,
/// sigma = log(0.5).
Eigen::VectorXd crude_start(const Dataset& data, const ModelSpec& spec);

/// Copies phi, sigma and the betas of shared covariate columns between layouts;
/// coefficients absent from `from` become 0.
Eigen::VectorXd transfer_params(const ModelLayout& from, const Eigen::VectorXd& psi,
                                const ModelLayout& to);

/// Unpenalized fit using only the given covariate columns per transition.
/// `init` and the returned psi use the layout of `spec`.
FitResult restricted_mle(const Dataset& data, const ModelSpec& spec,
                         const std::array<std::vector<int>, 3>& columns,
                         const Eigen::VectorXd& init, const SolverConfig& solver);

/// Covariate-free MLE embedded in the full layout (beta = 0).
FitResult null_fit(const Dataset& data, const ModelSpec& spec, const SolverConfig& solver);

/// Smallest lambda1 at which beta = 0 is stationary for the penalized problem.
double lambda1_max(const Likelihood& lik, const Eigen::VectorXd& null_psi);

LambdaGrid make_grid(double lambda1_max, const GridOptions& options);
LambdaGrid make_grid(const Likelihood& lik, const Eigen::VectorXd& null_psi,
                     const GridOptions& options);

struct Criteria {
  int df = 0;
  double bic = 0.0;
  double aic = 0.0;
};

/// Distinct nonzero beta values (within tol_fuse) + baseline parameters + 1.
int degrees_of_freedom(const ModelLayout& layout, const Eigen::VectorXd& psi,
                       double tol_fuse = kFuseTolerance);
Criteria information_criteria(const ModelLayout& layout, const Eigen::VectorXd& psi,
                              double neg_log_lik, Eigen::Index n,
                              double tol_fuse = kFuseTolerance);

struct PathPoint {
  int i1 = 0;
  int i2 = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  FitResult fit;
  Criteria criteria;
  int nonzero = 0;
  bool failed = false;
  std::string error;
};

struct Selection {
  int bic_full = -1;
  int bic_sub = -1;  // lambda2 = 0 sub-path
  int aic_full = -1;
  int aic_sub = -1;
};

struct PathResult {
  LambdaGrid grid;
  std::vector<PathPoint> points;  // index i1 * n_lambda2 + i2
  Selection selected;
  Eigen::Index n = 0;

  const PathPoint& at(int i1, int i2) const {
    return points[static_cast<std::size_t>(i1) * grid.lambda2.size() + i2];
  }
};

/// Outer loop over decreasing lambda1 along lambda2 = 0, then one ascending lambda2 chain
/// per lambda1 (chains run concurrently). Each point warm-starts from its predecessor;
/// restarts (per-point seeds derived from solver.seed) keep the best objective.
PathResult path_search(const Likelihood& lik, const LambdaGrid& grid,
                       const PenaltyConfig& penalty, const SolverConfig& solver,
                       const Eigen::VectorXd& null_psi);

Selection select_models(const PathResult& path);

struct ForwardStep {
  int transition = 0;  // 1-based
  int column = 0;
  double bic = 0.0;
};

struct ForwardResult {
  FitResult fit;
  std::vector<ForwardStep> steps;
  Criteria criteria;
};

/// Greedy BIC forward selection, one (transition, covariate) coefficient at a time.
ForwardResult forward_select(const Dataset& data, const ModelSpec& spec,
                             const Eigen::VectorXd& null_psi, const SolverConfig& solver,
                             int max_steps);

/// Unpenalized fit on a known support mask over the beta block.
FitResult oracle_mle(const Dataset& data, const ModelSpec& spec,
                     const std::vector<bool>& support, const Eigen::VectorXd& init,
                     const SolverConfig& solver);

}  // namespace penidm
