#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "penidm/params.hpp"

namespace penidm {

/// E[gamma^order exp(-gamma A)] for gamma ~ Gamma(e^-sigma, e^-sigma), order >= 0.
double frailty_laplace(double A, double sigma, int order);

/// Four-state occupation probabilities:
///   p[0] event-free, p[1] terminal without non-terminal,
///   p[2] non-terminal occurred and terminal pending, p[3] both occurred.
struct RiskProfile {
  std::vector<double> t;
  std::array<std::vector<double>, 4> p;
};

struct PredictOptions {
  int quad_nodes = 64;  // Gauss-Legendre nodes per smooth subinterval of [0, t]
};

/// Covariate-adjusted hazards of one subject.
class SubjectHazards {
 public:
  SubjectHazards(const ModelSpec& spec, const Eigen::VectorXd& psi, const Eigen::RowVectorXd& x);

  /// Hazard h_g and cumulative H_g at each time (transition g is 0-based).
  void eval(int g, const std::vector<double>& times, Eigen::VectorXd* h,
            Eigen::VectorXd* H) const;
  double sigma() const { return sigma_; }
  const ModelSpec& spec() const { return spec_; }

  /// Breakpoints in (0, t) where the integrands are not smooth.
  std::vector<double> split_points(double t) const;

 private:
  ModelSpec spec_;
  std::array<Baseline, 3> base_;
  std::array<Eigen::VectorXd, 3> phi_;
  std::array<double, 3> scale_{};
  double sigma_ = 0.0;
};

/// Nodes and weights of the composite Gauss-Legendre rule on [0, t] split at `cuts`.
void composite_rule(double t, std::vector<double> cuts, int nodes, std::vector<double>& u,
                    std::vector<double>& w);

RiskProfile risk_profile(const ModelSpec& spec, const Eigen::VectorXd& psi,
                         const Eigen::RowVectorXd& x, const std::vector<double>& t_grid,
                         const PredictOptions& options = {});

std::vector<RiskProfile> profile_batch(const ModelSpec& spec, const Eigen::VectorXd& psi,
                                       const Eigen::MatrixXd& x,
                                       const std::vector<double>& t_grid,
                                       const PredictOptions& options = {});

/// Long format: subject,t,state,probability (states 1..4).
std::string profiles_to_csv(const std::vector<RiskProfile>& profiles);

}  // namespace penidm
