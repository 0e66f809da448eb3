#include "penidm/predict.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "penidm/error.hpp"
#include "penidm/parallel.hpp"
#include "penidm/quadrature.hpp"

namespace penidm {

double frailty_laplace(double A, double sigma, int order) {
  if (order < 0) throw ValidationError("frailty_laplace: order must be nonnegative");
  if (!(A >= 0.0)) throw DomainError("frailty_laplace: A must be nonnegative");
  const double s = std::exp(sigma);
  double factor = 1.0;
  for (int i = 1; i < order; ++i) factor *= 1.0 + i * s;
  return factor * std::exp(-(std::exp(-sigma) + order) * std::log1p(s * A));
}

SubjectHazards::SubjectHazards(const ModelSpec& spec, const Eigen::VectorXd& psi,
                               const Eigen::RowVectorXd& x)
    : spec_(spec),
      base_{Baseline(spec.baselines[0]), Baseline(spec.baselines[1]),
            Baseline(spec.baselines[2])} {
  const ModelLayout& L = spec_.layout;
  if (psi.size() != L.size()) throw ValidationError("predict: parameter vector length mismatch");
  for (int g = 0; g < 3; ++g) {
    phi_[g] = psi.segment(L.phi_offset(g), L.k(g));
    double eta = 0.0;
    for (int j = 0; j < L.d(g); ++j) {
      const int c = L.columns(g)[j];
      if (c >= x.size()) throw ValidationError("predict: covariate row is too short");
      eta += x(c) * psi(L.beta_offset(g) + j);
    }
    scale_[g] = std::exp(eta);
  }
  sigma_ = psi(L.sigma_index());
}

void SubjectHazards::eval(int g, const std::vector<double>& times, Eigen::VectorXd* h,
                          Eigen::VectorXd* H) const {
  const TimeBatch batch = base_[g].prepare(times);
  Eigen::Array<bool, Eigen::Dynamic, 1> want =
      Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(batch.size(), h != nullptr);
  BatchValues v;
  base_[g].evaluate(batch, phi_[g], 0, &want, v);
  if (h) *h = scale_[g] * v.log_h.array().exp().matrix();
  if (H) *H = scale_[g] * v.cum;
  if ((h && !h->allFinite()) || (H && !H->allFinite())) {
    throw NumericalError("non-finite hazard for transition " + std::to_string(g + 1));
  }
}

constexpr int kGradingLevels = 40;

std::vector<double> SubjectHazards::split_points(double t) const {
  std::vector<double> cuts;
  for (int g = 0; g < 2; ++g) {
    for (double c : base_[g].singular_points()) cuts.push_back(c);
  }
  for (double c : base_[2].singular_points()) {
    cuts.push_back(spec_.structure == TransitionStructure::Markov ? c : t - c);
  }
  // Geometric grading towards power-law endpoints: at 0 for every transition, and at
  // u = t for the semi-Markov sojourn H3(t - u).
  const bool origin = base_[0].power_law_at_origin() || base_[1].power_law_at_origin() ||
                      base_[2].power_law_at_origin();
  const bool sojourn = spec_.structure == TransitionStructure::SemiMarkov && base_[2].power_law_at_origin();
  for (int j = 1; j <= kGradingLevels; ++j) {
    const double h = t * std::ldexp(1.0, -j);
    if (origin) cuts.push_back(h);
    if (sojourn) cuts.push_back(t - h);
  }
  std::vector<double> out;
  for (double c : cuts) {
    if (c > 0.0 && c < t) out.push_back(c);
  }
  return out;
}

void composite_rule(double t, std::vector<double> cuts, int nodes, std::vector<double>& u,
                    std::vector<double>& w) {
  const auto& rule = gauss_legendre(nodes);
  cuts.push_back(0.0);
  cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  u.clear();
  w.clear();
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int r = 0; r < nodes; ++r) {
      u.push_back(mid + half * rule.nodes[r]);
      w.push_back(half * rule.weights[r]);
    }
  }
}

RiskProfile risk_profile(const ModelSpec& spec, const Eigen::VectorXd& psi,
                         const Eigen::RowVectorXd& x, const std::vector<double>& t_grid,
                         const PredictOptions& options) {
  if (options.quad_nodes < 1) throw ValidationError("predict: quad_nodes must be positive");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i]) || (i > 0 && t_grid[i] <= t_grid[i - 1])) {
      throw ValidationError("predict: time grid must be finite, nonnegative and increasing");
    }
  }
  const SubjectHazards hz(spec, psi, x);
  const double sigma = hz.sigma();
  const bool markov = spec.structure == TransitionStructure::Markov;
  RiskProfile prof;
  prof.t = t_grid;
  for (auto& p : prof.p) p.assign(t_grid.size(), 0.0);

  std::vector<double> u, w;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (t == 0.0) {
      prof.p[0][k] = 1.0;
      continue;
    }
    Eigen::VectorXd Ht1, Ht2;
    hz.eval(0, {t}, nullptr, &Ht1);
    hz.eval(1, {t}, nullptr, &Ht2);
    const double p1 = frailty_laplace(Ht1(0) + Ht2(0), sigma, 0);

    composite_rule(t, hz.split_points(t), options.quad_nodes, u, w);
    Eigen::VectorXd h1, H1, h2, H2, H3u;
    hz.eval(0, u, &h1, &H1);
    hz.eval(1, u, &h2, &H2);
    Eigen::VectorXd inc3(static_cast<Eigen::Index>(u.size()));
    if (markov) {
      Eigen::VectorXd H3t;
      hz.eval(2, {t}, nullptr, &H3t);
      hz.eval(2, u, nullptr, &H3u);
      inc3 = (H3t(0) - H3u.array()).max(0.0).matrix();
    } else {
      std::vector<double> sojourn(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) sojourn[i] = std::max(0.0, t - u[i]);
      hz.eval(2, sojourn, nullptr, &inc3);
    }
    double p2 = 0.0, p3 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double a = H1(i) + H2(i);
      p2 += w[i] * h2(i) * frailty_laplace(a, sigma, 1);
      p3 += w[i] * h1(i) * frailty_laplace(a + inc3(i), sigma, 1);
    }
    prof.p[0][k] = p1;
    prof.p[1][k] = p2;
    prof.p[2][k] = p3;
    prof.p[3][k] = 1.0 - p1 - p2 - p3;
  }
  return prof;
}

std::vector<RiskProfile> profile_batch(const ModelSpec& spec, const Eigen::VectorXd& psi,
                                       const Eigen::MatrixXd& x,
                                       const std::vector<double>& t_grid,
                                       const PredictOptions& options) {
  std::vector<RiskProfile> out(static_cast<std::size_t>(x.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = risk_profile(spec, psi, x.row(static_cast<Eigen::Index>(i)), t_grid, options);
  });
  return out;
}

std::string profiles_to_csv(const std::vector<RiskProfile>& profiles) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "subject,t,state,probability\n";
  for (std::size_t s = 0; s < profiles.size(); ++s) {
    const auto& p = profiles[s];
    for (std::size_t k = 0; k < p.t.size(); ++k) {
      for (int j = 0; j < 4; ++j) {
        os << s + 1 << ',' << p.t[k] << ',' << j + 1 << ',' << p.p[j][k] << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace penidm
