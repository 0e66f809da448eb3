#include "penidm/data.hpp"

#include <cmath>

#include "penidm/error.hpp"

namespace penidm {

std::string_view to_string(TransitionStructure s) {
  return s == TransitionStructure::Markov ? "markov" : "semi-markov";
}

TransitionStructure parse_structure(std::string_view name) {
  if (name == "markov") return TransitionStructure::Markov;
  if (name == "semi-markov") return TransitionStructure::SemiMarkov;
  throw ValidationError("unknown transition structure '" + std::string(name) + "'");
}

void Dataset::validate(double tie_epsilon) const {
  const Eigen::Index n = y1.size();
  if (y2.size() != n || delta1.size() != n || delta2.size() != n || x.rows() != n) {
    throw ValidationError("dataset columns have inconsistent lengths");
  }
  if (!covariate_names.empty() && static_cast<Eigen::Index>(covariate_names.size()) != x.cols()) {
    throw ValidationError("covariate name count does not match covariate columns");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string row = "row " + std::to_string(i) + ": ";
    if (!std::isfinite(y1(i)) || !std::isfinite(y2(i))) {
      throw ValidationError(row + "non-finite time");
    }
    if (!(y1(i) > 0.0)) throw ValidationError(row + "y1 must be positive");
    if (y1(i) > y2(i)) throw ValidationError(row + "y1 > y2");
    if ((delta1(i) != 0 && delta1(i) != 1) || (delta2(i) != 0 && delta2(i) != 1)) {
      throw ValidationError(row + "event indicators must be 0 or 1");
    }
    if (delta1(i) == 1 && y2(i) - y1(i) < tie_epsilon) {
      throw ValidationError(row + "non-terminal event tied with y2 (y2 - y1 below tie tolerance)");
    }
    if (delta1(i) == 0 && y2(i) != y1(i)) {
      throw ValidationError(row + "y2 must equal y1 when delta1 = 0");
    }
    if (!x.row(i).allFinite()) throw ValidationError(row + "non-finite covariate");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y1.resize(m);
  out.y2.resize(m);
  out.delta1.resize(m);
  out.delta2.resize(m);
  out.x.resize(m, x.cols());
  out.covariate_names = covariate_names;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[r];
    out.y1(r) = y1(i);
    out.y2(r) = y2(i);
    out.delta1(r) = delta1(i);
    out.delta2(r) = delta2(i);
    out.x.row(r) = x.row(i);
  }
  return out;
}

Dataset Dataset::with_columns(const std::vector<int>& cols) const {
  Dataset out = *this;
  out.x.resize(n(), static_cast<Eigen::Index>(cols.size()));
  out.covariate_names.clear();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.x.col(c) = x.col(cols[c]);
    if (!covariate_names.empty()) out.covariate_names.push_back(covariate_names[cols[c]]);
  }
  return out;
}

Standardization Standardization::identity(Eigen::Index d) {
  return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

Standardization Standardization::from(const Eigen::MatrixXd& x) {
  Standardization s;
  const Eigen::Index n = x.rows();
  s.center = x.colwise().mean().transpose();
  s.scale = Eigen::VectorXd::Ones(x.cols());
  if (n > 1) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double ss = (x.col(j).array() - s.center(j)).square().sum();
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      if (sd > 0.0) s.scale(j) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  if (empty()) return x;
  return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::RowVectorXd Standardization::apply(const Eigen::RowVectorXd& row) const {
  if (empty()) return row;
  return (row - center.transpose()).array() / scale.transpose().array();
}

void standardize_columns(Eigen::MatrixXd& x) { x = Standardization::from(x).apply(x); }

}  // namespace penidm
