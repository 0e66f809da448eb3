#include "penidm/hazards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penidm/error.hpp"
#include "penidm/quadrature.hpp"

namespace penidm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

double cube_plus(double x) { return x > 0.0 ? x * x * x : 0.0; }
double square_plus(double x) { return x > 0.0 ? x * x : 0.0; }

}  // namespace

std::string_view to_string(BaselineFamily family) {
  switch (family) {
    case BaselineFamily::Weibull: return "weibull";
    case BaselineFamily::PiecewiseConstant: return "piecewise";
    case BaselineFamily::BSplineLogHazard: return "bspline";
    case BaselineFamily::RoystonParmar: return "royston-parmar";
  }
  return "unknown";
}

BaselineFamily parse_baseline_family(std::string_view name) {
  if (name == "weibull") return BaselineFamily::Weibull;
  if (name == "piecewise") return BaselineFamily::PiecewiseConstant;
  if (name == "bspline") return BaselineFamily::BSplineLogHazard;
  if (name == "royston-parmar") return BaselineFamily::RoystonParmar;
  throw ValidationError("unknown baseline family '" + std::string(name) + "'");
}

int implied_num_params(BaselineFamily family, std::size_t num_knots, int degree) {
  const int m = static_cast<int>(num_knots);
  switch (family) {
    case BaselineFamily::Weibull: return 2;
    case BaselineFamily::PiecewiseConstant: return m;
    case BaselineFamily::BSplineLogHazard: return m + degree - 1;
    case BaselineFamily::RoystonParmar: return m;
  }
  return 0;
}

BaselineSpec BaselineSpec::weibull() { return BaselineSpec{}; }

BaselineSpec BaselineSpec::piecewise(std::vector<double> breakpoints) {
  BaselineSpec s;
  s.family = BaselineFamily::PiecewiseConstant;
  s.num_params = static_cast<int>(breakpoints.size());
  s.knots = std::move(breakpoints);
  s.validate();
  return s;
}

BaselineSpec BaselineSpec::bspline(std::vector<double> knots, int degree) {
  BaselineSpec s;
  s.family = BaselineFamily::BSplineLogHazard;
  s.degree = degree;
  s.num_params = implied_num_params(s.family, knots.size(), degree);
  s.knots = std::move(knots);
  s.validate();
  return s;
}

BaselineSpec BaselineSpec::royston_parmar(std::vector<double> knots) {
  BaselineSpec s;
  s.family = BaselineFamily::RoystonParmar;
  s.num_params = static_cast<int>(knots.size());
  s.knots = std::move(knots);
  s.validate();
  return s;
}

void BaselineSpec::validate() const {
  const std::string name(to_string(family));
  for (double k : knots) {
    if (!std::isfinite(k)) throw ValidationError(name + ": knots must be finite");
  }
  if (!strictly_increasing(knots)) {
    throw ValidationError(name + ": knots must be strictly increasing");
  }
  if (num_params != implied_num_params(family, knots.size(), degree)) {
    throw ValidationError(name + ": num_params " + std::to_string(num_params) +
                          " inconsistent with knots/degree");
  }
  switch (family) {
    case BaselineFamily::Weibull:
      if (!knots.empty()) throw ValidationError("weibull: takes no knots");
      break;
    case BaselineFamily::PiecewiseConstant:
      if (knots.empty() || knots.front() != 0.0) {
        throw ValidationError("piecewise: first breakpoint must be 0");
      }
      break;
    case BaselineFamily::BSplineLogHazard:
      if (degree < 0) throw ValidationError("bspline: degree must be >= 0");
      if (knots.size() < 2) throw ValidationError("bspline: needs two boundary knots");
      if (knots.front() < 0.0) throw ValidationError("bspline: knots must be >= 0");
      if (num_params < degree + 1) throw ValidationError("bspline: k must be >= degree + 1");
      break;
    case BaselineFamily::RoystonParmar:
      if (knots.size() < 2) throw ValidationError("royston-parmar: needs k >= 2 knots");
      if (knots.front() <= 0.0) {
        throw ValidationError("royston-parmar: knots are times and must be positive");
      }
      break;
  }
}

Baseline::Baseline(BaselineSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.family == BaselineFamily::BSplineLogHazard) {
    const int p = spec_.degree;
    augmented_.assign(p + 1, spec_.knots.front());
    augmented_.insert(augmented_.end(), spec_.knots.begin() + 1, spec_.knots.end() - 1);
    augmented_.insert(augmented_.end(), p + 1, spec_.knots.back());
  } else if (spec_.family == BaselineFamily::RoystonParmar) {
    for (double k : spec_.knots) log_knots_.push_back(std::log(k));
  }
}

void Baseline::check_phi(const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  if (phi.size() != spec_.num_params) {
    throw ValidationError(std::string(to_string(spec_.family)) + ": expected " +
                          std::to_string(spec_.num_params) + " parameters, got " +
                          std::to_string(phi.size()));
  }
}

double Baseline::upper_limit() const {
  return spec_.family == BaselineFamily::BSplineLogHazard ? spec_.knots.back() : kInf;
}

std::vector<double> Baseline::singular_points() const {
  switch (spec_.family) {
    case BaselineFamily::PiecewiseConstant:
      return {spec_.knots.begin() + 1, spec_.knots.end()};
    case BaselineFamily::BSplineLogHazard:
      return {spec_.knots.begin() + 1, spec_.knots.end() - 1};
    case BaselineFamily::RoystonParmar:
      return spec_.knots;
    default:
      return {};
  }
}

bool Baseline::power_law_at_origin() const {
  return spec_.family == BaselineFamily::Weibull || spec_.family == BaselineFamily::RoystonParmar;
}

Eigen::RowVectorXd Baseline::bspline_basis(double t) const {
  const int p = spec_.degree;
  const int k = spec_.num_params;
  // Knot span s with augmented_[s] <= t < augmented_[s+1]; right boundary closes the last span.
  int s = k - 1;
  if (t < spec_.knots.back()) {
    s = static_cast<int>(std::upper_bound(augmented_.begin(), augmented_.end(), t) -
                         augmented_.begin()) - 1;
  }
  std::vector<double> n(p + 1, 0.0), left(p + 1), right(p + 1);
  n[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - augmented_[s + 1 - j];
    right[j] = augmented_[s + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(k);
  for (int j = 0; j <= p; ++j) out(s - p + j) = n[j];
  return out;
}

TimeBatch Baseline::prepare(std::span<const double> times) const {
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  const int k = spec_.num_params;
  TimeBatch b;
  b.t.resize(n);
  b.log_t.resize(n);
  b.positive.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = times[i];
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw DomainError("baseline hazard evaluated at invalid time " + std::to_string(t));
    }
    b.t(i) = t;
    b.positive(i) = t > 0.0;
    b.log_t(i) = t > 0.0 ? std::log(t) : -kInf;
  }

  switch (spec_.family) {
    case BaselineFamily::Weibull:
      break;

    case BaselineFamily::PiecewiseConstant: {
      b.basis.setZero(n, k);
      b.interval.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = b.t(i);
        int idx = 0;
        for (int j = 0; j < k; ++j) {
          const double lo = spec_.knots[j];
          const double hi = j + 1 < k ? spec_.knots[j + 1] : kInf;
          if (t >= lo) {
            b.basis(i, j) = std::min(t, hi) - lo;
            idx = j;
          }
        }
        b.interval(i) = idx;
      }
      break;
    }

    case BaselineFamily::RoystonParmar: {
      b.basis.setZero(n, k);
      b.dbasis.setZero(n, k);
      const double zmin = log_knots_.front();
      const double zmax = log_knots_.back();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!b.positive(i)) continue;
        const double z = b.log_t(i);
        b.basis(i, 0) = 1.0;
        b.basis(i, 1) = z;
        b.dbasis(i, 1) = 1.0;
        for (int j = 2; j < k; ++j) {
          const double kj = log_knots_[j - 1];
          const double lambda = (zmax - kj) / (zmax - zmin);
          b.basis(i, j) = cube_plus(z - kj) - lambda * cube_plus(z - zmin) -
                          (1.0 - lambda) * cube_plus(z - zmax);
          b.dbasis(i, j) = 3.0 * (square_plus(z - kj) - lambda * square_plus(z - zmin) -
                                  (1.0 - lambda) * square_plus(z - zmax));
        }
      }
      break;
    }

    case BaselineFamily::BSplineLogHazard: {
      const double lo = spec_.knots.front();
      const double hi = spec_.knots.back();
      const auto& rule = gauss_legendre(kBSplineQuadratureOrder);
      b.basis.setZero(n, k);
      b.node_basis.resize(n);
      b.node_weight.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = b.t(i);
        if (t > hi * (1.0 + 1e-12)) {
          throw DomainError("bspline: time " + std::to_string(t) +
                            " beyond upper boundary knot " + std::to_string(hi));
        }
        if (t > 0.0 && t < lo) {
          throw DomainError("bspline: time " + std::to_string(t) +
                            " below lower boundary knot " + std::to_string(lo));
        }
        const double tc = std::min(t, hi);
        if (t > 0.0 || lo == 0.0) b.basis.row(i) = bspline_basis(tc);
        // Cumulative hazard nodes: one Gauss-Legendre rule per segment of [lo, t].
        std::vector<std::pair<double, double>> segments;
        for (std::size_t m = 0; m + 1 < spec_.knots.size(); ++m) {
          const double a = spec_.knots[m];
          const double c = std::min(spec_.knots[m + 1], tc);
          if (c > a) segments.emplace_back(a, c);
          if (spec_.knots[m + 1] >= tc) break;
        }
        const Eigen::Index q = static_cast<Eigen::Index>(segments.size() * rule.nodes.size());
        Eigen::MatrixXd nb(q, k);
        Eigen::VectorXd nw(q);
        Eigen::Index row = 0;
        for (const auto& [a, c] : segments) {
          const double half = 0.5 * (c - a);
          const double mid = 0.5 * (c + a);
          for (std::size_t r = 0; r < rule.nodes.size(); ++r, ++row) {
            nb.row(row) = bspline_basis(mid + half * rule.nodes[r]);
            nw(row) = half * rule.weights[r];
          }
        }
        b.node_basis[i] = std::move(nb);
        b.node_weight[i] = std::move(nw);
      }
      break;
    }
  }
  return b;
}

void Baseline::evaluate(const TimeBatch& batch, const Eigen::Ref<const Eigen::VectorXd>& phi,
                        int order, const Eigen::Array<bool, Eigen::Dynamic, 1>* want_log_h,
                        BatchValues& out) const {
  check_phi(phi);
  const Eigen::Index n = batch.size();
  const int k = spec_.num_params;
  out.log_h.setZero(n);
  out.cum.resize(n);
  if (order >= 1) {
    out.dlog_h.setZero(n, k);
    out.dcum.resize(n, k);
  }
  if (order >= 2) {
    out.d2log_h.assign(n, Eigen::MatrixXd::Zero(k, k));
    out.d2cum.assign(n, Eigen::MatrixXd::Zero(k, k));
  }
  auto wants = [&](Eigen::Index i) { return want_log_h == nullptr || (*want_log_h)(i); };

  switch (spec_.family) {
    case BaselineFamily::Weibull: {
      const double shape = std::exp(phi(0));
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!batch.positive(i)) {
          out.cum(i) = 0.0;
          if (order >= 1) out.dcum.row(i).setZero();
          if (wants(i)) out.log_h(i) = kNaN;
          continue;
        }
        const double L = batch.log_t(i);
        const double H = std::exp(phi(1) + shape * L);
        const double sL = shape * L;
        out.cum(i) = H;
        if (wants(i)) out.log_h(i) = phi(0) + phi(1) + (shape - 1.0) * L;
        if (order >= 1) {
          out.dcum(i, 0) = H * sL;
          out.dcum(i, 1) = H;
          if (wants(i)) {
            out.dlog_h(i, 0) = 1.0 + sL;
            out.dlog_h(i, 1) = 1.0;
          }
        }
        if (order >= 2) {
          auto& c = out.d2cum[i];
          c(0, 0) = H * sL * sL + H * sL;
          c(0, 1) = c(1, 0) = H * sL;
          c(1, 1) = H;
          if (wants(i)) out.d2log_h[i](0, 0) = sL;
        }
      }
      break;
    }

    case BaselineFamily::PiecewiseConstant: {
      const Eigen::VectorXd rate = phi.array().exp();
      out.cum.noalias() = batch.basis * rate;
      if (order >= 1) out.dcum = batch.basis.array().rowwise() * rate.transpose().array();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!wants(i)) continue;
        const int j = batch.interval(i);
        out.log_h(i) = phi(j);
        if (order >= 1) out.dlog_h(i, j) = 1.0;
      }
      if (order >= 2) {
        for (Eigen::Index i = 0; i < n; ++i) out.d2cum[i].diagonal() = out.dcum.row(i).transpose();
      }
      break;
    }

    case BaselineFamily::RoystonParmar: {
      const Eigen::VectorXd eta = batch.basis * phi;
      const Eigen::VectorXd slope = batch.dbasis * phi;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!batch.positive(i)) {
          out.cum(i) = 0.0;
          if (order >= 1) out.dcum.row(i).setZero();
          if (wants(i)) out.log_h(i) = kNaN;
          continue;
        }
        const double H = std::exp(eta(i));
        out.cum(i) = H;
        const bool w = wants(i);
        if (w) {
          out.log_h(i) = slope(i) > 0.0 ? std::log(slope(i)) + eta(i) - batch.log_t(i) : kNaN;
        }
        if (order >= 1) {
          out.dcum.row(i) = H * batch.basis.row(i);
          if (w) out.dlog_h.row(i) = batch.dbasis.row(i) / slope(i) + batch.basis.row(i);
        }
        if (order >= 2) {
          out.d2cum[i].noalias() = H * batch.basis.row(i).transpose() * batch.basis.row(i);
          if (w) {
            out.d2log_h[i].noalias() = -batch.dbasis.row(i).transpose() * batch.dbasis.row(i) /
                                       (slope(i) * slope(i));
          }
        }
      }
      break;
    }

    case BaselineFamily::BSplineLogHazard: {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (wants(i)) {
          out.log_h(i) = batch.basis.row(i).dot(phi);
          if (order >= 1) out.dlog_h.row(i) = batch.basis.row(i);
        }
        const auto& nb = batch.node_basis[i];
        if (nb.rows() == 0) {
          out.cum(i) = 0.0;
          if (order >= 1) out.dcum.row(i).setZero();
          continue;
        }
        const Eigen::VectorXd f =
            batch.node_weight[i].array() * (nb * phi).array().exp();
        out.cum(i) = f.sum();
        if (order >= 1) out.dcum.row(i).noalias() = (nb.transpose() * f).transpose();
        if (order >= 2) out.d2cum[i].noalias() = nb.transpose() * f.asDiagonal() * nb;
      }
      break;
    }
  }
}

double Baseline::log_hazard(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  if (!(t > 0.0)) throw DomainError("log-hazard requires t > 0");
  const double times[] = {t};
  BatchValues v;
  evaluate(prepare(times), phi, 0, nullptr, v);
  return v.log_h(0);
}

double Baseline::hazard(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  return std::exp(log_hazard(t, phi));
}

double Baseline::cumulative(double t, const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  const double times[] = {t};
  BatchValues v;
  Eigen::Array<bool, Eigen::Dynamic, 1> want = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(1, false);
  evaluate(prepare(times), phi, 0, &want, v);
  return v.cum(0);
}

bool Baseline::cumulative_is_monotone(const Eigen::Ref<const Eigen::VectorXd>& phi, double lo,
                                      double hi, int grid_points) const {
  check_phi(phi);
  if (spec_.family != BaselineFamily::RoystonParmar) return true;
  lo = std::max(lo, std::numeric_limits<double>::min());
  std::vector<double> times(grid_points);
  const double zlo = std::log(lo), zhi = std::log(hi);
  for (int i = 0; i < grid_points; ++i) {
    times[i] = std::exp(zlo + (zhi - zlo) * i / std::max(1, grid_points - 1));
  }
  const TimeBatch b = prepare(times);
  return ((b.dbasis * phi).array() > 0.0).all();
}

namespace {

BatchValues eval_point(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi,
                       double t, int order, bool need_log_h) {
  if (need_log_h && !(t > 0.0)) throw DomainError("log-hazard requires t > 0");
  if (!(t >= 0.0)) throw DomainError("cumulative hazard requires t >= 0");
  const Baseline base(spec);
  const double times[] = {t};
  Eigen::Array<bool, Eigen::Dynamic, 1> want(1);
  want(0) = need_log_h;
  BatchValues v;
  base.evaluate(base.prepare(times), phi, order, &want, v);
  return v;
}

}  // namespace

double log_h0(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi, double t) {
  return eval_point(spec, phi, t, 0, true).log_h(0);
}

double H0(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi, double t) {
  return eval_point(spec, phi, t, 0, false).cum(0);
}

Eigen::VectorXd dH0_dphi(const BaselineSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& phi,
                         double t) {
  return eval_point(spec, phi, t, 1, false).dcum.row(0).transpose();
}

Eigen::MatrixXd d2H0_dphi2(const BaselineSpec& spec,
                           const Eigen::Ref<const Eigen::VectorXd>& phi, double t) {
  return eval_point(spec, phi, t, 2, false).d2cum[0];
}

Eigen::VectorXd dlogh0_dphi(const BaselineSpec& spec,
                            const Eigen::Ref<const Eigen::VectorXd>& phi, double t) {
  return eval_point(spec, phi, t, 1, true).dlog_h.row(0).transpose();
}

Eigen::MatrixXd d2logh0_dphi2(const BaselineSpec& spec,
                              const Eigen::Ref<const Eigen::VectorXd>& phi, double t) {
  return eval_point(spec, phi, t, 2, true).d2log_h[0];
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> default_knots(BaselineFamily family, std::span<const double> observed_times,
                                  int num_params, int degree) {
  if (family == BaselineFamily::Weibull) return {};
  std::vector<double> times;
  for (double t : observed_times) {
    if (t > 0.0 && std::isfinite(t)) times.push_back(t);
  }
  if (times.empty()) throw ValidationError("default_knots: no positive observed times");
  const double tmax = *std::max_element(times.begin(), times.end());

  auto interior = [&](int m) {
    std::vector<double> q;
    for (int j = 1; j <= m; ++j) q.push_back(sample_quantile(times, double(j) / (m + 1)));
    return q;
  };
  auto dedupe = [](std::vector<double> v) {
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };

  switch (family) {
    case BaselineFamily::PiecewiseConstant: {
      if (num_params < 1) throw ValidationError("piecewise: need k >= 1");
      std::vector<double> out{0.0};
      for (double q : interior(num_params - 1)) out.push_back(q);
      if (dedupe(out).size() != out.size()) {
        throw ValidationError("piecewise: tied quantiles, reduce k");
      }
      return out;
    }
    case BaselineFamily::BSplineLogHazard: {
      const int m = num_params - degree - 1;
      if (m < 0) throw ValidationError("bspline: k must be >= degree + 1");
      std::vector<double> out{0.0};
      for (double q : interior(m)) out.push_back(q);
      out.push_back(tmax);
      if (dedupe(out).size() != out.size()) {
        throw ValidationError("bspline: tied knot quantiles, reduce k");
      }
      return out;
    }
    case BaselineFamily::RoystonParmar: {
      if (num_params < 2) throw ValidationError("royston-parmar: need k >= 2");
      const double tmin = *std::min_element(times.begin(), times.end());
      if (!(tmax > tmin)) throw ValidationError("royston-parmar: need two distinct times");
      std::vector<double> out{tmin};
      for (double q : interior(num_params - 2)) out.push_back(q);
      out.push_back(tmax);
      if (dedupe(out).size() != out.size()) {
        throw ValidationError("royston-parmar: tied knot quantiles, reduce k");
      }
      return out;
    }
    case BaselineFamily::Weibull:
      break;
  }
  return {};
}

}  // namespace penidm
