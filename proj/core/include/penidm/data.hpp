#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace penidm {

enum class TransitionStructure { Markov, SemiMarkov };

std::string_view to_string(TransitionStructure s);
TransitionStructure parse_structure(std::string_view name);

/// One subject's observed outcomes.
struct SubjectRecord {
  double y1 = 0.0;
  double y2 = 0.0;
  int delta1 = 0;
  int delta2 = 0;
};

inline constexpr double kDefaultTieEpsilon = 1e-8;

/// Outcomes plus a shared covariate matrix (one row per subject).
struct Dataset {
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
  Eigen::VectorXi delta1;
  Eigen::VectorXi delta2;
  Eigen::MatrixXd x;
  std::vector<std::string> covariate_names;

  Eigen::Index n() const { return y1.size(); }
  Eigen::Index d() const { return x.cols(); }
  SubjectRecord record(Eigen::Index i) const {
    return {y1(i), y2(i), delta1(i), delta2(i)};
  }

  /// Throws ValidationError naming the first offending row (0-based).
  void validate(double tie_epsilon = kDefaultTieEpsilon) const;

  Dataset subset(const std::vector<Eigen::Index>& rows) const;
  Dataset with_columns(const std::vector<int>& cols) const;
};

/// Column centering/scaling applied before fitting.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  bool empty() const { return center.size() == 0; }
  static Standardization identity(Eigen::Index d);
  static Standardization from(const Eigen::MatrixXd& x);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::RowVectorXd apply(const Eigen::RowVectorXd& row) const;
};

/// Sample mean 0 / sample variance 1 (n - 1 denominator) per column.
/// Constant columns are centered only.
void standardize_columns(Eigen::MatrixXd& x);

}  // namespace penidm
