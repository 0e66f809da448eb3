#include "penidm/pathgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penidm/error.hpp"
#include "penidm/parallel.hpp"
#include "penidm/rng.hpp"

namespace penidm {

Eigen::VectorXd crude_start(const Dataset& data, const ModelSpec& spec) {
  const ModelLayout& L = spec.layout;
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(L.size());
  std::array<double, 3> events{0, 0, 0}, exposure{0, 0, 0};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int d1 = data.delta1(i), d2 = data.delta2(i);
    events[0] += d1;
    events[1] += (1 - d1) * d2;
    events[2] += d1 * d2;
    exposure[0] += data.y1(i);
    exposure[1] += data.y1(i);
    if (d1 == 1) exposure[2] += data.y2(i) - data.y1(i);
  }
  for (int g = 0; g < 3; ++g) {
    const double rate = std::max(events[g], 0.5) / std::max(exposure[g], 1e-8);
    const double lr = std::log(rate);
    auto phi = psi.segment(L.phi_offset(g), L.k(g));
    switch (spec.baselines[g].family) {
      case BaselineFamily::Weibull:
        phi << 0.0, lr;
        break;
      case BaselineFamily::PiecewiseConstant:
      case BaselineFamily::BSplineLogHazard:
        phi.setConstant(lr);
        break;
      case BaselineFamily::RoystonParmar:
        phi.setZero();
        phi(0) = lr;
        phi(1) = 1.0;
        break;
    }
  }
  psi(L.sigma_index()) = std::log(0.5);
  return psi;
}

Eigen::VectorXd transfer_params(const ModelLayout& from, const Eigen::VectorXd& psi,
                                const ModelLayout& to) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(to.size());
  for (int g = 0; g < 3; ++g) {
    if (from.k(g) != to.k(g)) throw ValidationError("transfer_params: baseline sizes differ");
    out.segment(to.phi_offset(g), to.k(g)) = psi.segment(from.phi_offset(g), from.k(g));
    const auto& fc = from.columns(g);
    const auto& tc = to.columns(g);
    for (std::size_t j = 0; j < tc.size(); ++j) {
      const auto it = std::find(fc.begin(), fc.end(), tc[j]);
      if (it != fc.end()) {
        out(to.beta_offset(g) + static_cast<int>(j)) =
            psi(from.beta_offset(g) + static_cast<int>(it - fc.begin()));
      }
    }
  }
  out(to.sigma_index()) = psi(from.sigma_index());
  return out;
}

FitResult restricted_mle(const Dataset& data, const ModelSpec& spec,
                         const std::array<std::vector<int>, 3>& columns,
                         const Eigen::VectorXd& init, const SolverConfig& solver) {
  ModelSpec sub = spec;
  sub.layout = ModelLayout(columns, {spec.layout.k(0), spec.layout.k(1), spec.layout.k(2)});
  const Likelihood lik(data, sub);
  const PenalizedObjective obj(lik, PenaltyConfig{});
  SolverConfig cfg = solver;
  cfg.restarts = 0;
  FitResult res = fit(obj, transfer_params(spec.layout, init, sub.layout), cfg);
  res.psi = transfer_params(sub.layout, res.psi, spec.layout);
  return res;
}

FitResult null_fit(const Dataset& data, const ModelSpec& spec, const SolverConfig& solver) {
  return restricted_mle(data, spec, {}, crude_start(data, spec), solver);
}

double lambda1_max(const Likelihood& lik, const Eigen::VectorXd& null_psi) {
  Eigen::VectorXd g;
  lik.value_gradient(null_psi, g);
  const int nb = lik.layout().num_beta();
  return nb == 0 ? 0.0 : g.head(nb).lpNorm<Eigen::Infinity>();
}

LambdaGrid make_grid(double lmax, const GridOptions& o) {
  if (o.n_lambda1 < 1 || o.n_lambda2 < 1) throw ValidationError("grid sizes must be positive");
  if (!(o.min_ratio > 0.0 && o.min_ratio < 1.0) ||
      !(o.max_step_ratio > 0.0 && o.max_step_ratio < 1.0)) {
    throw ValidationError("grid ratios must lie in (0, 1)");
  }
  if (!(lmax > 0.0) || !std::isfinite(lmax)) {
    throw ValidationError("lambda1_max must be positive and finite");
  }
  LambdaGrid grid;
  const int n1 = o.n_lambda1;
  // Geometric down to lmax * min_ratio, but with successive ratios no smaller than
  // max_step_ratio (a shorter span when n1 is small).
  double ratio = n1 > 1 ? std::pow(o.min_ratio, 1.0 / (n1 - 1)) : 1.0;
  ratio = std::max(ratio, o.max_step_ratio);
  for (int i = 0; i < n1; ++i) grid.lambda1.push_back(lmax * std::pow(ratio, i));

  grid.lambda2.push_back(0.0);
  const double l2max = o.lambda2_max > 0.0 ? o.lambda2_max : 0.25 * lmax;
  const int m = o.n_lambda2 - 1;
  for (int j = 1; j <= m; ++j) grid.lambda2.push_back(l2max * std::pow(3.0, j - m));
  return grid;
}

LambdaGrid make_grid(const Likelihood& lik, const Eigen::VectorXd& null_psi,
                     const GridOptions& options) {
  return make_grid(lambda1_max(lik, null_psi), options);
}

int degrees_of_freedom(const ModelLayout& layout, const Eigen::VectorXd& psi, double tol_fuse) {
  std::vector<double> v;
  for (int j = 0; j < layout.num_beta(); ++j) {
    if (psi(j) != 0.0) v.push_back(psi(j));
  }
  std::sort(v.begin(), v.end());
  int unique = v.empty() ? 0 : 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] - v[i - 1] > tol_fuse) ++unique;
  }
  return unique + layout.num_phi() + 1;
}

Criteria information_criteria(const ModelLayout& layout, const Eigen::VectorXd& psi,
                              double nll, Eigen::Index n, double tol_fuse) {
  Criteria c;
  c.df = degrees_of_freedom(layout, psi, tol_fuse);
  const double nn = static_cast<double>(n);
  c.bic = 2.0 * nn * nll + c.df * std::log(nn);
  c.aic = 2.0 * nn * nll + 2.0 * c.df;
  return c;
}

namespace {

// The path's initial value is always tried alongside the warm start: with non-convex
// penalties the warm path can settle in a local minimum that a cold start avoids.
void fit_point(const Likelihood& lik, const PenaltyConfig& base, const SolverConfig& solver,
               std::size_t index, const Eigen::VectorXd& warm, const Eigen::VectorXd& cold,
               PathPoint& pt) {
  PenaltyConfig cfg = base;
  cfg.lambda1 = pt.lambda1;
  cfg.lambda2 = pt.lambda2;
  SolverConfig sc = solver;
  sc.seed = derive_seed(solver.seed, index);
  try {
    const PenalizedObjective obj(lik, cfg);
    pt.fit = fit(obj, warm, sc);
    if (cold != warm) {
      try {
        FitResult alt = fit(obj, cold, sc);
        if (alt.objective < pt.fit.objective) pt.fit = std::move(alt);
      } catch (const NumericalError&) {
      }
    }
    pt.criteria = information_criteria(lik.layout(), pt.fit.psi, pt.fit.neg_log_lik, lik.n());
    pt.nonzero = static_cast<int>(
        (pt.fit.psi.head(lik.layout().num_beta()).array() != 0.0).count());
  } catch (const NumericalError& e) {
    pt.failed = true;
    pt.error = e.what();
    pt.fit.psi = warm;
    pt.criteria.bic = pt.criteria.aic = std::numeric_limits<double>::infinity();
  }
}

}  // namespace

PathResult path_search(const Likelihood& lik, const LambdaGrid& grid,
                       const PenaltyConfig& penalty, const SolverConfig& solver,
                       const Eigen::VectorXd& null_psi) {
  if (grid.lambda1.empty() || grid.lambda2.empty() || grid.lambda2.front() != 0.0) {
    throw ValidationError("grid must be non-empty with lambda2 starting at 0");
  }
  PathResult res;
  res.grid = grid;
  res.n = lik.n();
  const std::size_t n1 = grid.lambda1.size(), n2 = grid.lambda2.size();
  res.points.resize(n1 * n2);
  for (std::size_t i1 = 0; i1 < n1; ++i1) {
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      auto& p = res.points[i1 * n2 + i2];
      p.i1 = static_cast<int>(i1);
      p.i2 = static_cast<int>(i2);
      p.lambda1 = grid.lambda1[i1];
      p.lambda2 = grid.lambda2[i2];
    }
  }

  Eigen::VectorXd warm = null_psi;
  for (std::size_t i1 = 0; i1 < n1; ++i1) {
    PathPoint& pt = res.points[i1 * n2];
    fit_point(lik, penalty, solver, i1 * n2, warm, null_psi, pt);
    if (!pt.failed) warm = pt.fit.psi;
  }
  if (n2 > 1) {
    parallel_for(n1, [&](std::size_t i1) {
      Eigen::VectorXd w = res.points[i1 * n2].fit.psi;
      for (std::size_t i2 = 1; i2 < n2; ++i2) {
        PathPoint& pt = res.points[i1 * n2 + i2];
        fit_point(lik, penalty, solver, i1 * n2 + i2, w, null_psi, pt);
        if (!pt.failed) w = pt.fit.psi;
      }
    });
  }
  res.selected = select_models(res);
  return res;
}

Selection select_models(const PathResult& path) {
  Selection s;
  double bf = std::numeric_limits<double>::infinity(), bs = bf, af = bf, as = bf;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const auto& p = path.points[i];
    if (p.failed) continue;
    const int idx = static_cast<int>(i);
    if (p.criteria.bic < bf) { bf = p.criteria.bic; s.bic_full = idx; }
    if (p.criteria.aic < af) { af = p.criteria.aic; s.aic_full = idx; }
    if (p.i2 == 0) {
      if (p.criteria.bic < bs) { bs = p.criteria.bic; s.bic_sub = idx; }
      if (p.criteria.aic < as) { as = p.criteria.aic; s.aic_sub = idx; }
    }
  }
  return s;
}

ForwardResult forward_select(const Dataset& data, const ModelSpec& spec,
                             const Eigen::VectorXd& null_psi, const SolverConfig& solver,
                             int max_steps) {
  ForwardResult out;
  std::array<std::vector<int>, 3> active;
  FitResult current = restricted_mle(data, spec, active, null_psi, solver);
  Criteria crit = information_criteria(spec.layout, current.psi, current.neg_log_lik, data.n());

  for (int step = 0; step < max_steps; ++step) {
    struct Candidate {
      int g, c;
    };
    std::vector<Candidate> cands;
    for (int g = 0; g < 3; ++g) {
      for (int c : spec.layout.columns(g)) {
        if (std::find(active[g].begin(), active[g].end(), c) == active[g].end()) {
          cands.push_back({g, c});
        }
      }
    }
    if (cands.empty()) break;
    std::vector<FitResult> fits(cands.size());
    std::vector<Criteria> crits(cands.size());
    std::vector<bool> ok(cands.size(), false);
    parallel_for(cands.size(), [&](std::size_t i) {
      auto cols = active;
      cols[cands[i].g].push_back(cands[i].c);
      try {
        fits[i] = restricted_mle(data, spec, cols, current.psi, solver);
        crits[i] = information_criteria(spec.layout, fits[i].psi, fits[i].neg_log_lik, data.n());
        ok[i] = true;
      } catch (const NumericalError&) {
      }
    });
    int best = -1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (ok[i] && (best < 0 || crits[i].bic < crits[best].bic)) best = static_cast<int>(i);
    }
    if (best < 0 || !(crits[best].bic < crit.bic)) break;
    active[cands[best].g].push_back(cands[best].c);
    current = std::move(fits[best]);
    crit = crits[best];
    out.steps.push_back({cands[best].g + 1, cands[best].c, crit.bic});
  }
  out.fit = std::move(current);
  out.criteria = crit;
  return out;
}

FitResult oracle_mle(const Dataset& data, const ModelSpec& spec, const std::vector<bool>& support,
                     const Eigen::VectorXd& init, const SolverConfig& solver) {
  const ModelLayout& L = spec.layout;
  if (static_cast<int>(support.size()) != L.num_beta()) {
    throw ValidationError("support mask must cover every beta coordinate");
  }
  std::array<std::vector<int>, 3> cols;
  for (int g = 0; g < 3; ++g) {
    for (int j = 0; j < L.d(g); ++j) {
      if (support[L.beta_offset(g) + j]) cols[g].push_back(L.columns(g)[j]);
    }
  }
  return restricted_mle(data, spec, cols, init, solver);
}

}  // namespace penidm
