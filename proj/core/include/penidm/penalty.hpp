#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <utility>
#include <vector>

#include "penidm/likelihood.hpp"
#include "penidm/params.hpp"

namespace penidm {

enum class PenaltyFamily { Lasso, SCAD, MCP };

std::string_view to_string(PenaltyFamily f);
PenaltyFamily parse_penalty_family(std::string_view name);

struct PenaltyConfig {
  PenaltyFamily family = PenaltyFamily::SCAD;
  double a = 3.7;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  /// Transition pairs (1-based, g < g') whose shared coefficients are fused.
  std::vector<std::pair<int, int>> fusion_pairs;
  /// Smoothing parameter; 0 selects the default 1e-4 * lambda2 (floored at 1e-8).
  double mu = 0.0;

  double effective_mu() const;
  void validate() const;

  static std::vector<std::pair<int, int>> all_pairs() { return {{1, 2}, {1, 3}, {2, 3}}; }
};

/// Full penalty p_lambda(|beta|).
double penalty_value(PenaltyFamily family, double a, double lambda, double beta_abs);

/// p~ = p - lambda*|beta| and its derivative in |beta|.
std::pair<double, double> concave_part(PenaltyFamily family, double a, double lambda,
                                       double beta_abs);

/// Coefficients closer than this are treated as fused (and as zero when close to 0).
inline constexpr double kFuseTolerance = 1e-4;

/// Rows of D: lambda2 * (psi[first] - psi[second]) for each fused coefficient pair.
struct FusionContrast {
  struct Row {
    int g, j, g2, j2;   // transitions (1-based) and within-transition positions
    int first, second;  // flat indices into psi
  };
  std::vector<Row> rows;
  double lambda2 = 0.0;

  int J() const { return static_cast<int>(rows.size()); }
  /// D psi, weighted by lambda2.
  Eigen::VectorXd apply(const Eigen::VectorXd& psi) const;
  /// Exact fusion penalty ||D psi||_1.
  double exact(const Eigen::VectorXd& psi) const;
};

FusionContrast build_contrast(const PenaltyConfig& config, const ModelLayout& layout);

struct SmoothedFusion {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Nesterov-smoothed fusion penalty: z* = clip(D psi / mu, -1, 1),
/// value = z*'D psi - mu/2 ||z*||^2, gradient = D'z*.
SmoothedFusion smoothed_fusion(const FusionContrast& contrast, const Eigen::VectorXd& psi,
                               double mu);

/// Q(psi) = smooth(psi) + lambda1 * ||beta||_1, where smooth = loss + concave parts +
/// smoothed fusion.
class PenalizedObjective {
 public:
  PenalizedObjective(const Likelihood& lik, PenaltyConfig config);

  const Likelihood& likelihood() const { return *lik_; }
  const PenaltyConfig& config() const { return config_; }
  const FusionContrast& contrast() const { return contrast_; }
  const std::vector<bool>& mask() const { return mask_; }
  double lambda1() const { return config_.lambda1; }
  double mu() const { return mu_; }

  /// Smooth part and (optionally) its gradient.
  double smooth(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const;
  double l1(const Eigen::VectorXd& psi) const;
  double objective(const Eigen::VectorXd& psi) const { return smooth(psi, nullptr) + l1(psi); }
  /// Unsmoothed objective: loss + sparsity penalties + fusion penalties.
  double exact_objective(const Eigen::VectorXd& psi) const;

 private:
  const Likelihood* lik_;
  PenaltyConfig config_;
  FusionContrast contrast_;
  std::vector<bool> mask_;
  double mu_;
};

/// Smooth surrogate loss and its gradient.
std::pair<double, Eigen::VectorXd> surrogate_loss(const Eigen::VectorXd& psi,
                                                  const Likelihood& lik,
                                                  const PenaltyConfig& config);

}  // namespace penidm
