#include "penidm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "penidm/error.hpp"
#include "penidm/rng.hpp"

namespace penidm {

void SolverConfig::validate() const {
  if (!(xi > 0.0) || max_iter < 1 || !(r0 > 0.0) || !(shrink > 0.0 && shrink < 1.0) ||
      !(sufficient_decrease > 0.0) || !(min_step > 0.0) || !(norm_cap > 0.0) || restarts < 0) {
    throw ValidationError(
        "solver: xi, max_iter, r0, sufficient_decrease must be positive and shrink in (0, 1)");
  }
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::ObjectiveDelta: return "objective-delta";
    case StopReason::ParamDelta: return "param-delta";
    case StopReason::MaxIter: return "max-iter";
  }
  return "unknown";
}

double CompositeProblem::l1(const Eigen::VectorXd& x) const {
  if (lambda1 == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (mask[j]) s += std::abs(x(j));
  }
  return lambda1 * s;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double lambda,
                               const std::vector<bool>& mask) {
  Eigen::VectorXd out = x;
  if (lambda <= 0.0) return out;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!mask[j]) continue;
    const double a = std::abs(x(j)) - lambda;
    out(j) = a > 0.0 ? std::copysign(a, x(j)) : 0.0;
  }
  return out;
}

Eigen::VectorXd prox_step(const Eigen::VectorXd& psi, const Eigen::VectorXd& grad, double step,
                          double lambda1, const std::vector<bool>& mask) {
  return soft_threshold(psi - step * grad, step * lambda1, mask);
}

namespace {

// Smooth value and gradient, mapping numerical failures to +infinity.
double safe_smooth(const CompositeProblem& p, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  try {
    const double v = p.smooth(x, &g);
    return std::isfinite(v) && g.allFinite() ? v : std::numeric_limits<double>::infinity();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

StepResult backtrack(const CompositeProblem& problem, const Eigen::VectorXd& x, double f,
                     const Eigen::VectorXd& grad, double trial_step, const SolverConfig& config) {
  const double qx = f + problem.l1(x);
  StepResult out;
  double r = trial_step;
  for (;;) {
    if (r < config.min_step) {
      throw NumericalError("line search failed: step fell below " +
                           std::to_string(config.min_step) + " (objective " +
                           std::to_string(qx) + ", gradient norm " +
                           std::to_string(grad.norm()) + ")");
    }
    Eigen::VectorXd p = prox_step(x, grad, r, problem.lambda1, problem.mask);
    const Eigen::VectorXd diff = p - x;
    const double dd = diff.squaredNorm();
    Eigen::VectorXd gp;
    const double fp = dd == 0.0 ? f : safe_smooth(problem, p, gp);
    if (dd == 0.0) gp = grad;
    if (std::isfinite(fp)) {
      const double slack = 1e-13 * std::max(1.0, std::abs(f));
      const double bound = f + grad.dot(diff) + dd / (2.0 * r);
      const double qp = fp + problem.l1(p);
      if (fp <= bound + slack && qp <= qx - config.sufficient_decrease * dd / r + slack) {
        out.step = r;
        out.x = std::move(p);
        out.smooth = fp;
        out.grad = std::move(gp);
        return out;
      }
    }
    r *= config.shrink;
    ++out.backtracks;
  }
}

constexpr double kExpOverflow = 700.0;

FitResult minimize(const CompositeProblem& problem, const Eigen::VectorXd& init,
                   const SolverConfig& config) {
  config.validate();
  FitResult res;
  Eigen::VectorXd x = init;
  Eigen::VectorXd g;
  double f = safe_smooth(problem, x, g);
  if (!std::isfinite(f)) {
    throw NumericalError("objective is not finite at the initial value; re-initialize");
  }
  double q = f + problem.l1(x);
  res.psi = x;
  res.objective = q;
  res.final_step = config.r0;

  double r = config.r0;
  Eigen::VectorXd x_prev, g_prev;
  for (int it = 1; it <= config.max_iter; ++it) {
    if (config.spectral && it > 1) {
      const Eigen::VectorXd s = x - x_prev;
      const Eigen::VectorXd y = g - g_prev;
      const double sy = s.dot(y);
      r = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * r;
      r = std::clamp(r, 1e3 * config.min_step, 1e6);
    }
    StepResult step = backtrack(problem, x, f, g, r, config);
    x_prev = std::move(x);
    g_prev = std::move(g);
    x = std::move(step.x);
    g = std::move(step.grad);
    f = step.smooth;
    r = step.step;
    const double q_new = f + problem.l1(x);
    if (x.norm() > config.norm_cap) {
      throw NumericalError("iterates diverged: parameter norm exceeded " +
                           std::to_string(config.norm_cap));
    }
    // Every parameter enters the model through exp(); past this the likelihood is
    // unbounded in that direction for the data at hand.
    if (x.cwiseAbs().maxCoeff() > kExpOverflow) {
      throw NumericalError("iterates diverged: a parameter left the exp-representable range "
                           "(likelihood unbounded for this data)");
    }
    if (config.record_trace) res.trace.push_back(q_new);
    res.iterations = it;
    res.final_step = r;
    if (q_new <= res.objective) {
      res.objective = q_new;
      res.psi = x;
    }
    const double dq = std::abs(q_new - q);
    const double dx = (x - x_prev).norm();
    q = q_new;
    if (dq < config.xi) {
      res.converged = true;
      res.stop_reason = StopReason::ObjectiveDelta;
      break;
    }
    if (dx < config.xi) {
      res.converged = true;
      res.stop_reason = StopReason::ParamDelta;
      break;
    }
  }
  return res;
}

CompositeProblem make_problem(const PenalizedObjective& objective) {
  CompositeProblem p;
  p.smooth = [&objective](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    return objective.smooth(x, g);
  };
  p.mask = objective.mask();
  p.lambda1 = objective.lambda1();
  return p;
}

FitResult fit(const PenalizedObjective& objective, const Eigen::VectorXd& init,
              const SolverConfig& config) {
  const CompositeProblem problem = make_problem(objective);
  FitResult best = minimize(problem, init, config);
  const ModelLayout& layout = objective.likelihood().layout();
  for (int k = 0; k < config.restarts; ++k) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd start = init;
    for (int j = 0; j < layout.size(); ++j) {
      start(j) += (j < layout.num_beta() ? 0.1 : 0.05) * z(rng);
    }
    try {
      FitResult cand = minimize(problem, start, config);
      if (cand.objective < best.objective) best = std::move(cand);
    } catch (const NumericalError&) {
      // A failed restart never replaces the warm-start solution.
    }
  }
  if (objective.config().lambda2 > 0.0 && objective.contrast().J() > 0) {
    best.psi = snap_fused_zeros(layout, best.psi);
    best.objective = objective.objective(best.psi);
  }
  best.neg_log_lik = objective.likelihood().value(best.psi);
  return best;
}

Eigen::VectorXd snap_fused_zeros(const ModelLayout& layout, const Eigen::VectorXd& psi,
                                 double tol) {
  std::vector<std::pair<double, int>> v;
  for (int j = 0; j < layout.num_beta(); ++j) v.emplace_back(psi(j), j);
  v.emplace_back(0.0, -1);
  std::sort(v.begin(), v.end());
  const auto zero = std::find_if(v.begin(), v.end(), [](const auto& e) { return e.second < 0; });
  Eigen::VectorXd out = psi;
  // Walk outward from the anchor while consecutive gaps stay within tol.
  for (auto it = zero; it + 1 != v.end() && (it + 1)->first - it->first <= tol; ++it) {
    out((it + 1)->second) = 0.0;
  }
  for (auto it = zero; it != v.begin() && it->first - (it - 1)->first <= tol; --it) {
    out((it - 1)->second) = 0.0;
  }
  return out;
}

KktReport kkt_audit(const PenalizedObjective& objective, const Eigen::VectorXd& psi, double tol) {
  KktReport rep;
  Eigen::VectorXd g;
  objective.smooth(psi, &g);
  const auto& mask = objective.mask();
  // Replace the smoothed fusion gradient by the exact subgradient: pairs that are apart
  // contribute their fixed sign, pairs that coincide widen the admissible interval.
  Eigen::VectorXd slack = Eigen::VectorXd::Constant(psi.size(), objective.lambda1());
  const FusionContrast& D = objective.contrast();
  if (D.lambda2 > 0.0 && D.J() > 0) {
    g -= smoothed_fusion(D, psi, objective.mu()).gradient;
    for (const auto& row : D.rows) {
      const double diff = psi(row.first) - psi(row.second);
      if (std::abs(diff) > kFuseTolerance) {
        const double s = diff > 0.0 ? D.lambda2 : -D.lambda2;
        g(row.first) += s;
        g(row.second) -= s;
      } else {
        slack(row.first) += D.lambda2;
        slack(row.second) += D.lambda2;
      }
    }
  }
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < psi.size(); ++j) {
    if (!mask[j] || psi(j) != 0.0) continue;
    const double v = std::abs(g(j)) - slack(j);
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst_index = static_cast<int>(j);
    }
  }
  if (rep.worst_index < 0) rep.max_violation = 0.0;
  rep.ok = rep.max_violation <= tol;
  return rep;
}

}  // namespace penidm
