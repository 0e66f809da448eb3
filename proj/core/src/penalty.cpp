#include "penidm/penalty.hpp"

#include <algorithm>
#include <cmath>

#include "penidm/error.hpp"

namespace penidm {

std::string_view to_string(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::Lasso: return "lasso";
    case PenaltyFamily::SCAD: return "scad";
    case PenaltyFamily::MCP: return "mcp";
  }
  return "unknown";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
  if (name == "lasso") return PenaltyFamily::Lasso;
  if (name == "scad") return PenaltyFamily::SCAD;
  if (name == "mcp") return PenaltyFamily::MCP;
  throw ValidationError("unknown penalty family '" + std::string(name) + "'");
}

double PenaltyConfig::effective_mu() const {
  if (mu > 0.0) return mu;
  return std::max(1e-4 * lambda2, 1e-8);
}

void PenaltyConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) ||
      !std::isfinite(lambda2)) {
    throw ValidationError("penalty: lambda1 and lambda2 must be finite and nonnegative");
  }
  if (family == PenaltyFamily::SCAD && !(a > 2.0)) throw ValidationError("scad: a must exceed 2");
  if (family == PenaltyFamily::MCP && !(a > 1.0)) throw ValidationError("mcp: a must exceed 1");
  if (!(mu >= 0.0)) throw ValidationError("penalty: mu must be positive (or 0 for the default)");
  for (auto [g, h] : fusion_pairs) {
    if (g < 1 || h > 3 || g >= h) {
      throw ValidationError("penalty: fusion pairs must be (g, g') with 1 <= g < g' <= 3");
    }
  }
  auto sorted = fusion_pairs;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("penalty: duplicate fusion pair");
  }
}

double penalty_value(PenaltyFamily family, double a, double lambda, double t) {
  switch (family) {
    case PenaltyFamily::Lasso:
      return lambda * t;
    case PenaltyFamily::SCAD:
      if (t <= lambda) return lambda * t;
      if (t <= a * lambda) return (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0));
      return (a + 1.0) * lambda * lambda / 2.0;
    case PenaltyFamily::MCP:
      if (t <= a * lambda) return lambda * t - t * t / (2.0 * a);
      return a * lambda * lambda / 2.0;
  }
  return 0.0;
}

std::pair<double, double> concave_part(PenaltyFamily family, double a, double lambda, double t) {
  switch (family) {
    case PenaltyFamily::Lasso:
      return {0.0, 0.0};
    case PenaltyFamily::SCAD:
      if (t <= lambda) return {0.0, 0.0};
      if (t <= a * lambda) {
        const double u = t - lambda;
        return {-u * u / (2.0 * (a - 1.0)), -u / (a - 1.0)};
      }
      return {(a + 1.0) * lambda * lambda / 2.0 - lambda * t, -lambda};
    case PenaltyFamily::MCP:
      if (t <= a * lambda) return {-t * t / (2.0 * a), -t / a};
      return {a * lambda * lambda / 2.0 - lambda * t, -lambda};
  }
  return {0.0, 0.0};
}

Eigen::VectorXd FusionContrast::apply(const Eigen::VectorXd& psi) const {
  Eigen::VectorXd out(J());
  for (int r = 0; r < J(); ++r) out(r) = lambda2 * (psi(rows[r].first) - psi(rows[r].second));
  return out;
}

double FusionContrast::exact(const Eigen::VectorXd& psi) const {
  return apply(psi).lpNorm<1>();
}

FusionContrast build_contrast(const PenaltyConfig& config, const ModelLayout& layout) {
  config.validate();
  FusionContrast c;
  c.lambda2 = config.lambda2;
  auto pairs = config.fusion_pairs;
  std::sort(pairs.begin(), pairs.end());
  for (auto [g, h] : pairs) {
    const auto& cg = layout.columns(g - 1);
    const auto& ch = layout.columns(h - 1);
    for (std::size_t j = 0; j < cg.size(); ++j) {
      const auto it = std::find(ch.begin(), ch.end(), cg[j]);
      if (it == ch.end()) continue;
      const int j2 = static_cast<int>(it - ch.begin());
      c.rows.push_back({g, static_cast<int>(j), h, j2,
                        layout.beta_offset(g - 1) + static_cast<int>(j),
                        layout.beta_offset(h - 1) + j2});
    }
  }
  return c;
}

SmoothedFusion smoothed_fusion(const FusionContrast& contrast, const Eigen::VectorXd& psi,
                               double mu) {
  if (!(mu > 0.0)) throw ValidationError("smoothing parameter mu must be positive");
  SmoothedFusion out;
  out.gradient = Eigen::VectorXd::Zero(psi.size());
  const Eigen::VectorXd dpsi = contrast.apply(psi);
  for (int r = 0; r < contrast.J(); ++r) {
    const double z = std::clamp(dpsi(r) / mu, -1.0, 1.0);
    out.value += z * dpsi(r) - 0.5 * mu * z * z;
    out.gradient(contrast.rows[r].first) += contrast.lambda2 * z;
    out.gradient(contrast.rows[r].second) -= contrast.lambda2 * z;
  }
  return out;
}

PenalizedObjective::PenalizedObjective(const Likelihood& lik, PenaltyConfig config)
    : lik_(&lik),
      config_(std::move(config)),
      contrast_(build_contrast(config_, lik.layout())),
      mask_(lik.layout().beta_mask()),
      mu_(config_.effective_mu()) {}

double PenalizedObjective::smooth(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const {
  double value = grad ? lik_->value_gradient(psi, *grad) : lik_->value(psi);
  const auto& c = config_;
  const int nb = lik_->layout().num_beta();
  if (c.family != PenaltyFamily::Lasso && c.lambda1 > 0.0) {
    for (int j = 0; j < nb; ++j) {
      const auto [v, dv] = concave_part(c.family, c.a, c.lambda1, std::abs(psi(j)));
      value += v;
      if (grad && psi(j) != 0.0) (*grad)(j) += psi(j) > 0.0 ? dv : -dv;
    }
  }
  if (c.lambda2 > 0.0 && contrast_.J() > 0) {
    if (c.family != PenaltyFamily::Lasso) {
      for (const auto& row : contrast_.rows) {
        const double diff = psi(row.first) - psi(row.second);
        const auto [v, dv] = concave_part(c.family, c.a, c.lambda2, std::abs(diff));
        value += v;
        if (grad && diff != 0.0) {
          const double gd = diff > 0.0 ? dv : -dv;
          (*grad)(row.first) += gd;
          (*grad)(row.second) -= gd;
        }
      }
    }
    const SmoothedFusion sf = smoothed_fusion(contrast_, psi, mu_);
    value += sf.value;
    if (grad) *grad += sf.gradient;
  }
  return value;
}

double PenalizedObjective::l1(const Eigen::VectorXd& psi) const {
  const int nb = lik_->layout().num_beta();
  return config_.lambda1 * psi.head(nb).lpNorm<1>();
}

double PenalizedObjective::exact_objective(const Eigen::VectorXd& psi) const {
  const auto& c = config_;
  double value = lik_->value(psi);
  const int nb = lik_->layout().num_beta();
  for (int j = 0; j < nb; ++j) value += penalty_value(c.family, c.a, c.lambda1, std::abs(psi(j)));
  if (c.lambda2 > 0.0) {
    for (const auto& row : contrast_.rows) {
      value += penalty_value(c.family, c.a, c.lambda2, std::abs(psi(row.first) - psi(row.second)));
    }
  }
  return value;
}

std::pair<double, Eigen::VectorXd> surrogate_loss(const Eigen::VectorXd& psi,
                                                  const Likelihood& lik,
                                                  const PenaltyConfig& config) {
  const PenalizedObjective obj(lik, config);
  Eigen::VectorXd g;
  const double v = obj.smooth(psi, &g);
  return {v, std::move(g)};
}

}  // namespace penidm
