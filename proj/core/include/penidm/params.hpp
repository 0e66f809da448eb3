#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "penidm/data.hpp"
#include "penidm/hazards.hpp"

namespace penidm {

/// Index map for the flat parameter vector (beta1, beta2, beta3, phi1, phi2, phi3, sigma).
/// `columns[g]` lists the covariate columns entering transition g.
class ModelLayout {
 public:
  ModelLayout() = default;
  ModelLayout(std::array<std::vector<int>, 3> columns, std::array<int, 3> k);

  /// Same d covariates in every transition.
  static ModelLayout shared(int d, std::array<int, 3> k);

  const std::vector<int>& columns(int g) const { return columns_[g]; }
  int d(int g) const { return static_cast<int>(columns_[g].size()); }
  int k(int g) const { return k_[g]; }
  int beta_offset(int g) const { return beta_off_[g]; }
  int phi_offset(int g) const { return phi_off_[g]; }
  int sigma_index() const { return size_ - 1; }
  int num_beta() const { return phi_off_[0]; }
  int num_phi() const { return k_[0] + k_[1] + k_[2]; }
  int size() const { return size_; }

  /// True for beta coordinates (the penalized block).
  std::vector<bool> beta_mask() const;

  bool operator==(const ModelLayout&) const = default;

 private:
  std::array<std::vector<int>, 3> columns_;
  std::array<int, 3> k_{0, 0, 0};
  std::array<int, 3> beta_off_{0, 0, 0};
  std::array<int, 3> phi_off_{0, 0, 0};
  int size_ = 1;
};

/// Structured view of the parameters.
struct ModelParams {
  std::array<Eigen::VectorXd, 3> beta;
  std::array<Eigen::VectorXd, 3> phi;
  double sigma = 0.0;

  Eigen::VectorXd flatten() const;
  static ModelParams unflatten(const ModelLayout& layout, const Eigen::VectorXd& psi);
};

/// Everything needed to interpret a parameter vector.
struct ModelSpec {
  std::array<BaselineSpec, 3> baselines;
  TransitionStructure structure = TransitionStructure::SemiMarkov;
  ModelLayout layout;

  /// Layout with all `d` covariates shared and k taken from the baselines.
  static ModelSpec shared(std::array<BaselineSpec, 3> baselines, TransitionStructure structure,
                          int d);
  void validate(Eigen::Index num_covariates) const;
};

}  // namespace penidm
