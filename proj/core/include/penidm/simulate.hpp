#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "penidm/pathgrid.hpp"

namespace penidm {

/// Data-generating truth for one simulation scenario.
struct SimSetting {
  std::string name = "custom";
  int n = 1000;
  int d = 25;  // covariates, shared by all transitions
  std::array<Eigen::VectorXd, 3> beta;
  std::array<BaselineSpec, 3> baselines;
  std::array<Eigen::VectorXd, 3> phi;
  double sigma = -0.69314718055994531;  // log(0.5)
  double ar_rho = 0.25;
  /// Administrative censoring time; infinity disables censoring.
  double censor_time = std::numeric_limits<double>::infinity();
  TransitionStructure structure = TransitionStructure::SemiMarkov;
  /// gamma = 1 for every subject (the sigma -> -infinity limit).
  bool fixed_frailty = false;

  ModelSpec truth_spec() const;
  Eigen::VectorXd truth_psi() const;
  Eigen::VectorXd truth_beta() const;
  void validate() const;
};

/// The eight published scenarios, named "<moderate|low>-<shared|partial>-<lowdim|highdim>".
std::vector<std::string> preset_names();
SimSetting preset(std::string_view name);
SimSetting preset(int index);  // 1..8

/// Rows iid N(0, Sigma) with Sigma_jk = rho^|j-k|, then columns standardized.
Eigen::MatrixXd gen_covariates(int n, int d, double rho, std::mt19937_64& rng);
Eigen::MatrixXd gen_covariates(int n, int d, double rho, std::uint64_t seed);

/// Event-time sampler for one setting; exact inversion for piecewise and Weibull truths.
class EventGenerator {
 public:
  explicit EventGenerator(const SimSetting& setting);

  SubjectRecord draw(const Eigen::RowVectorXd& x, std::mt19937_64& rng) const;
  /// Same, with the frailty supplied by the caller.
  SubjectRecord draw_given_frailty(const Eigen::RowVectorXd& x, double gamma,
                                   std::mt19937_64& rng) const;

  double cumulative(int g, double t) const;
  double hazard(int g, double t) const;

 private:
  double invert_first(double c1, double c2, double target) const;
  double invert_single(int g, double target) const;

  SimSetting setting_;
  std::array<Baseline, 3> base_;
};

SubjectRecord gen_events(const Eigen::RowVectorXd& x, const SimSetting& setting,
                         std::mt19937_64& rng);

Dataset simulate_dataset(const SimSetting& setting, std::uint64_t seed);

double l2_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);
int sign_inconsistency(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);
std::pair<int, int> false_inclusion_exclusion(const Eigen::VectorXd& beta_hat,
                                              const Eigen::VectorXd& beta_true);

enum class Method { Oracle, MLE, Forward, Lasso, SCAD, LassoFusion, SCADFusion };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Baseline specs for a working model, with knots placed from the data.
ModelSpec working_model(const Dataset& data, BaselineFamily family, int k,
                        TransitionStructure structure);

struct StudyOptions {
  std::vector<Method> methods{Method::Oracle, Method::MLE, Method::Lasso, Method::SCAD,
                              Method::LassoFusion, Method::SCADFusion};
  int replicates = 20;
  std::uint64_t seed = 1;
  BaselineFamily working_family = BaselineFamily::Weibull;
  int working_k = 3;  // ignored for Weibull
  GridOptions grid;
  SolverConfig solver;
  int forward_max_steps = 40;
};

struct MethodMetrics {
  double l2 = 0.0;
  int sign = 0;
  int false_inclusions = 0;
  int false_exclusions = 0;
  bool failed = false;
};

struct ReplicateResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  double nonterminal_fraction = 0.0;
  std::vector<MethodMetrics> metrics;  // aligned with StudyReport::methods
};

struct MethodSummary {
  Method method;
  double mean_l2 = 0.0;
  double median_l2 = 0.0;
  double mean_sign = 0.0;
  double mean_false_inclusions = 0.0;
  double mean_false_exclusions = 0.0;
  int failures = 0;
};

struct StudyReport {
  std::string setting;
  std::vector<Method> methods;
  std::vector<ReplicateResult> replicates;
  std::vector<MethodSummary> summary;

  const MethodSummary& of(Method m) const;
  std::string to_csv() const;
};

/// Replicates run concurrently under the global thread bound; each derives its own seed.
StudyReport run_study(const SimSetting& setting, const StudyOptions& options);

}  // namespace penidm
