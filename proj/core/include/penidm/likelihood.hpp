#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "penidm/data.hpp"
#include "penidm/hazards.hpp"
#include "penidm/params.hpp"

namespace penidm {

/// Subjects per reduction block. Fixed so totals do not depend on the thread count.
inline constexpr Eigen::Index kLikelihoodBlockSize = 256;

/// Marginal (frailty-integrated) negative log-likelihood, averaged over subjects,
/// with analytic gradient and Hessian in the flat (beta, phi, sigma) order.
/// Baseline features are precomputed once per dataset; evaluations are thread-safe.
class Likelihood {
 public:
  Likelihood(const Dataset& data, ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const ModelLayout& layout() const { return spec_.layout; }
  Eigen::Index n() const { return n_; }
  int dim() const { return spec_.layout.size(); }

  double value(const Eigen::VectorXd& psi) const;
  double value_gradient(const Eigen::VectorXd& psi, Eigen::VectorXd& grad) const;
  double value_gradient_hessian(const Eigen::VectorXd& psi, Eigen::VectorXd& grad,
                                Eigen::MatrixXd& hess) const;

  /// Per-subject contributions (not averaged), in data order.
  Eigen::VectorXd contributions(const Eigen::VectorXd& psi) const;

  /// A_i: the sum of covariate-adjusted cumulative hazards each subject was exposed to.
  Eigen::VectorXd cum_hazard_sums(const Eigen::VectorXd& psi) const;

 private:
  struct Block {
    Eigen::Index begin = 0;
    Eigen::Index size = 0;
    std::array<Eigen::MatrixXd, 3> x;
    std::array<Eigen::ArrayXd, 3> dtilde;
    std::array<Eigen::Array<bool, Eigen::Dynamic, 1>, 3> want;
    Eigen::ArrayXd c;      // delta1 + delta2
    Eigen::ArrayXd both;   // delta1 * delta2
    std::array<TimeBatch, 3> batch;
    TimeBatch entry3;      // Markov: H03 evaluated at y1 (subtracted)
  };
  struct Partial {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    Eigen::ArrayXd f;
    Eigen::ArrayXd a;
  };

  void eval_block(const Block& b, const Eigen::VectorXd& psi, int order, Partial& out) const;
  double evaluate(const Eigen::VectorXd& psi, int order, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess, Eigen::VectorXd* per_subject,
                  Eigen::VectorXd* a_values) const;

  ModelSpec spec_;
  std::array<Baseline, 3> baselines_;
  Eigen::Index n_ = 0;
  std::vector<Block> blocks_;
};

// Free-function forms; each builds a Likelihood for the given data.

double cum_hazard_sum(const ModelSpec& spec, const Eigen::VectorXd& psi, const SubjectRecord& rec,
                      const Eigen::RowVectorXd& x);
double neg_log_lik(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data);
Eigen::VectorXd gradient(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data);
Eigen::MatrixXd hessian(const ModelSpec& spec, const Eigen::VectorXd& psi, const Dataset& data);

}  // namespace penidm
