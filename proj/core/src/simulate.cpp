#include "penidm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "penidm/error.hpp"
#include "penidm/parallel.hpp"
#include "penidm/rng.hpp"

namespace penidm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd padded(std::initializer_list<double> head, int offset, int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  int j = offset;
  for (double x : head) v(j++) = x;
  return v;
}

Eigen::VectorXd log_rates(std::initializer_list<double> rates) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(rates.size()));
  int j = 0;
  for (double r : rates) v(j++) = std::log(r);
  return v;
}

}  // namespace

ModelSpec SimSetting::truth_spec() const {
  return ModelSpec::shared(baselines, structure, d);
}

Eigen::VectorXd SimSetting::truth_psi() const {
  ModelParams p;
  p.beta = beta;
  p.phi = phi;
  p.sigma = sigma;
  return p.flatten();
}

Eigen::VectorXd SimSetting::truth_beta() const {
  Eigen::VectorXd b(3 * d);
  for (int g = 0; g < 3; ++g) b.segment(g * d, d) = beta[g];
  return b;
}

void SimSetting::validate() const {
  if (n < 1 || d < 0) throw ValidationError("simulation: n must be positive and d nonnegative");
  if (!(ar_rho > -1.0 && ar_rho < 1.0)) throw ValidationError("simulation: |ar_rho| must be < 1");
  if (!(censor_time > 0.0)) throw ValidationError("simulation: censor_time must be positive");
  if (!std::isfinite(sigma)) throw ValidationError("simulation: sigma must be finite");
  for (int g = 0; g < 3; ++g) {
    baselines[g].validate();
    if (beta[g].size() != d) throw ValidationError("simulation: beta length must equal d");
    if (phi[g].size() != baselines[g].num_params) {
      throw ValidationError("simulation: phi length does not match its baseline");
    }
  }
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const char* rate : {"moderate", "low"}) {
    for (const char* support : {"shared", "partial"}) {
      for (const char* dim : {"lowdim", "highdim"}) {
        names.push_back(std::string(rate) + "-" + support + "-" + dim);
      }
    }
  }
  return names;
}

SimSetting preset(int index) {
  if (index < 1 || index > 8) throw ValidationError("preset index must be in 1..8");
  return preset(preset_names()[index - 1]);
}

SimSetting preset(std::string_view name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ValidationError("unknown simulation preset '" + std::string(name) + "'");
  }
  SimSetting s;
  s.name = std::string(name);
  const bool moderate = name.rfind("moderate", 0) == 0;
  const bool shared = name.find("-shared-") != std::string_view::npos;
  s.d = name.ends_with("lowdim") ? 25 : 350;
  s.n = 1000;

  const std::vector<double> breaks{0.0, 5.0, 15.0, 20.0};
  for (auto& b : s.baselines) b = BaselineSpec::piecewise(breaks);
  if (moderate) {
    s.phi = {log_rates({0.005, 0.015, 0.050, 0.0125}), log_rates({0.010, 0.040, 0.075, 0.0500}),
             log_rates({0.010, 0.040, 0.075, 0.0750})};
    s.censor_time = kInf;
  } else {
    s.phi = {log_rates({0.035, 0.025, 0.020, 0.025}), log_rates({0.005, 0.010, 0.025, 0.018}),
             log_rates({0.008, 0.015, 0.024, 0.024})};
    s.censor_time = 4.5;
  }

  s.beta[0] = padded({0.3, -0.4, 0.5, 0.2, -0.4, 0.3, -0.4, 0.5, 0.2, -0.4}, 0, s.d);
  if (shared) {
    s.beta[1] = padded({0.8, -1.0, 0.6, 0.3, -0.5, 0.8, -1.0, 0.6, 0.3, -0.5}, 0, s.d);
    s.beta[2] = padded({0.6, -0.7, 0.7, 0.4, -0.3, 0.6, -0.7, 0.7, 0.4, -0.3}, 0, s.d);
  } else {
    s.beta[1] = padded({0.6, -0.7, 0.5, 0.2, -0.4, 0.3, -0.4, 0.5, 0.2, -0.4}, 5, s.d);
    s.beta[2] = padded({0.6, -0.7, 0.7, 0.4, -0.3, 0.6, -0.7, 0.7, 0.4, -0.3}, 5, s.d);
  }
  s.validate();
  return s;
}

Eigen::MatrixXd gen_covariates(int n, int d, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double e = z(rng);
      x(i, j) = j == 0 ? e : rho * x(i, j - 1) + innov * e;
    }
  }
  standardize_columns(x);
  return x;
}

Eigen::MatrixXd gen_covariates(int n, int d, double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gen_covariates(n, d, rho, rng);
}

EventGenerator::EventGenerator(const SimSetting& setting)
    : setting_(setting),
      base_{Baseline(setting.baselines[0]), Baseline(setting.baselines[1]),
            Baseline(setting.baselines[2])} {
  setting_.validate();
}

double EventGenerator::cumulative(int g, double t) const {
  const auto& spec = setting_.baselines[g];
  const auto& phi = setting_.phi[g];
  if (t <= 0.0) return 0.0;
  if (!std::isfinite(t)) return kInf;
  switch (spec.family) {
    case BaselineFamily::PiecewiseConstant: {
      double h = 0.0;
      const auto& br = spec.knots;
      for (std::size_t j = 0; j < br.size() && t > br[j]; ++j) {
        const double hi = j + 1 < br.size() ? std::min(t, br[j + 1]) : t;
        h += std::exp(phi(j)) * (hi - br[j]);
      }
      return h;
    }
    case BaselineFamily::Weibull:
      return std::exp(phi(1) + std::exp(phi(0)) * std::log(t));
    default:
      if (t > base_[g].upper_limit()) return kInf;
      return base_[g].cumulative(t, phi);
  }
}

double EventGenerator::hazard(int g, double t) const {
  const auto& spec = setting_.baselines[g];
  const auto& phi = setting_.phi[g];
  switch (spec.family) {
    case BaselineFamily::PiecewiseConstant: {
      const auto& br = spec.knots;
      std::size_t j = std::upper_bound(br.begin(), br.end(), t) - br.begin();
      return std::exp(phi(j == 0 ? 0 : j - 1));
    }
    case BaselineFamily::Weibull:
      return std::exp(phi(0) + phi(1) + (std::exp(phi(0)) - 1.0) * std::log(t));
    default:
      return base_[g].hazard(t, phi);
  }
}

namespace {

// Root of a nondecreasing F with F(0) = 0: smallest t with F(t) = target.
template <class F>
double invert_monotone(F&& f, double target, double upper) {
  double lo = 0.0, hi = std::min(1.0, upper);
  while (f(hi) < target) {
    if (hi >= upper) return kInf;
    lo = hi;
    hi = std::min(2.0 * hi, upper);
    if (hi > 1e300) return kInf;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Piecewise-linear cumulative with the given sorted breakpoints (first 0) and rates.
double invert_piecewise(const std::vector<double>& br, const std::vector<double>& rate,
                        double target) {
  double acc = 0.0;
  for (std::size_t j = 0; j < br.size(); ++j) {
    const double len = j + 1 < br.size() ? br[j + 1] - br[j] : kInf;
    const double mass = rate[j] * len;
    if (acc + mass >= target) {
      return rate[j] > 0.0 ? br[j] + (target - acc) / rate[j] : kInf;
    }
    acc += mass;
  }
  return kInf;
}

}  // namespace

double EventGenerator::invert_first(double c1, double c2, double target) const {
  const auto& s1 = setting_.baselines[0];
  const auto& s2 = setting_.baselines[1];
  if (s1.family == BaselineFamily::PiecewiseConstant &&
      s2.family == BaselineFamily::PiecewiseConstant) {
    std::vector<double> br = s1.knots;
    br.insert(br.end(), s2.knots.begin(), s2.knots.end());
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    std::vector<double> rate(br.size());
    for (std::size_t j = 0; j < br.size(); ++j) {
      rate[j] = c1 * hazard(0, br[j]) + c2 * hazard(1, br[j]);
    }
    return invert_piecewise(br, rate, target);
  }
  if (s1.family == BaselineFamily::Weibull && s2.family == BaselineFamily::Weibull &&
      setting_.phi[0](0) == setting_.phi[1](0)) {
    const double shape = std::exp(setting_.phi[0](0));
    const double scale = c1 * std::exp(setting_.phi[0](1)) + c2 * std::exp(setting_.phi[1](1));
    return std::pow(target / scale, 1.0 / shape);
  }
  const double upper = std::min(base_[0].upper_limit(), base_[1].upper_limit());
  return invert_monotone([&](double t) { return c1 * cumulative(0, t) + c2 * cumulative(1, t); },
                         target, upper);
}

double EventGenerator::invert_single(int g, double target) const {
  const auto& s = setting_.baselines[g];
  const auto& phi = setting_.phi[g];
  if (s.family == BaselineFamily::PiecewiseConstant) {
    std::vector<double> rate(phi.size());
    for (Eigen::Index j = 0; j < phi.size(); ++j) rate[j] = std::exp(phi(j));
    return invert_piecewise(s.knots, rate, target);
  }
  if (s.family == BaselineFamily::Weibull) {
    return std::pow(target * std::exp(-phi(1)), 1.0 / std::exp(phi(0)));
  }
  return invert_monotone([&](double t) { return cumulative(g, t); }, target,
                         base_[g].upper_limit());
}

SubjectRecord EventGenerator::draw(const Eigen::RowVectorXd& x, std::mt19937_64& rng) const {
  double gamma = 1.0;
  if (!setting_.fixed_frailty) {
    const double s = std::exp(setting_.sigma);
    std::gamma_distribution<double> gd(1.0 / s, s);
    gamma = gd(rng);
  }
  return draw_given_frailty(x, gamma, rng);
}

SubjectRecord EventGenerator::draw_given_frailty(const Eigen::RowVectorXd& x, double gamma,
                                                 std::mt19937_64& rng) const {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double e1 = expo(rng), u = unif(rng), e3 = expo(rng);
  const double tau = setting_.censor_time;

  std::array<double, 3> c{};
  for (int g = 0; g < 3; ++g) c[g] = std::exp(x.dot(setting_.beta[g]));

  SubjectRecord r;
  const double t1 = gamma > 0.0 ? invert_first(c[0], c[1], e1 / gamma) : kInf;
  if (!(t1 < tau)) {
    if (!std::isfinite(tau)) throw NumericalError("simulated first-event time is infinite");
    r.y1 = r.y2 = tau;
    return r;
  }
  const double a1 = c[0] * hazard(0, t1), a2 = c[1] * hazard(1, t1);
  if (u * (a1 + a2) >= a1) {
    r.y1 = r.y2 = t1;
    r.delta2 = 1;
    return r;
  }
  double t2;
  if (setting_.structure == TransitionStructure::SemiMarkov) {
    t2 = t1 + invert_single(2, e3 / (gamma * c[2]));
  } else {
    t2 = invert_single(2, cumulative(2, t1) + e3 / (gamma * c[2]));
  }
  r.y1 = t1;
  r.delta1 = 1;
  if (t2 < tau) {
    r.y2 = t2;
    r.delta2 = 1;
  } else {
    if (!std::isfinite(tau)) throw NumericalError("simulated terminal time is infinite");
    r.y2 = tau;
  }
  if (r.y2 - r.y1 < kDefaultTieEpsilon) {
    // A censoring time within the tie tolerance of the non-terminal event.
    r = SubjectRecord{r.y2, r.y2, 0, 0};
  }
  return r;
}

SubjectRecord gen_events(const Eigen::RowVectorXd& x, const SimSetting& setting,
                         std::mt19937_64& rng) {
  return EventGenerator(setting).draw(x, rng);
}

Dataset simulate_dataset(const SimSetting& setting, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const EventGenerator gen(setting);
  Dataset data;
  data.x = gen_covariates(setting.n, setting.d, setting.ar_rho, rng);
  data.y1.resize(setting.n);
  data.y2.resize(setting.n);
  data.delta1.resize(setting.n);
  data.delta2.resize(setting.n);
  for (int i = 0; i < setting.n; ++i) {
    const SubjectRecord r = gen.draw(data.x.row(i), rng);
    data.y1(i) = r.y1;
    data.y2(i) = r.y2;
    data.delta1(i) = r.delta1;
    data.delta2(i) = r.delta2;
  }
  for (int j = 0; j < setting.d; ++j) data.covariate_names.push_back("x" + std::to_string(j + 1));
  return data;
}

double l2_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
  if (beta_hat.size() != beta_true.size()) throw ValidationError("l2_error: length mismatch");
  return (beta_hat - beta_true).squaredNorm();
}

namespace {
int sgn(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace

int sign_inconsistency(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
  if (beta_hat.size() != beta_true.size()) {
    throw ValidationError("sign_inconsistency: length mismatch");
  }
  int count = 0;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) count += sgn(beta_hat(j)) != sgn(beta_true(j));
  return count;
}

std::pair<int, int> false_inclusion_exclusion(const Eigen::VectorXd& beta_hat,
                                              const Eigen::VectorXd& beta_true) {
  if (beta_hat.size() != beta_true.size()) {
    throw ValidationError("false_inclusion_exclusion: length mismatch");
  }
  int fi = 0, fe = 0;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    fi += beta_hat(j) != 0.0 && beta_true(j) == 0.0;
    fe += beta_hat(j) == 0.0 && beta_true(j) != 0.0;
  }
  return {fi, fe};
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Oracle: return "oracle";
    case Method::MLE: return "mle";
    case Method::Forward: return "forward";
    case Method::Lasso: return "lasso";
    case Method::SCAD: return "scad";
    case Method::LassoFusion: return "lasso+fusion";
    case Method::SCADFusion: return "scad+fusion";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Oracle, Method::MLE, Method::Forward, Method::Lasso, Method::SCAD,
                   Method::LassoFusion, Method::SCADFusion}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

ModelSpec working_model(const Dataset& data, BaselineFamily family, int k,
                        TransitionStructure structure) {
  std::array<BaselineSpec, 3> specs;
  if (family == BaselineFamily::Weibull) {
    specs = {BaselineSpec::weibull(), BaselineSpec::weibull(), BaselineSpec::weibull()};
    return ModelSpec::shared(specs, structure, static_cast<int>(data.d()));
  }
  const bool markov = structure == TransitionStructure::Markov;
  for (int g = 0; g < 3; ++g) {
    std::vector<double> events, evaluated;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const int d1 = data.delta1(i), d2 = data.delta2(i);
      const double t3 = markov ? data.y2(i) : data.y2(i) - data.y1(i);
      if (g < 2) {
        evaluated.push_back(data.y1(i));
        if ((g == 0 && d1 == 1) || (g == 1 && d1 == 0 && d2 == 1)) events.push_back(data.y1(i));
      } else if (d1 == 1) {
        evaluated.push_back(t3);
        if (d2 == 1) events.push_back(t3);
      }
    }
    if (events.size() < 2) events = evaluated;
    const int degree = 3;
    std::vector<double> knots = default_knots(family, events, k, degree);
    if (family == BaselineFamily::BSplineLogHazard && !evaluated.empty()) {
      knots.back() = std::max(knots.back(),
                              *std::max_element(evaluated.begin(), evaluated.end()));
    }
    switch (family) {
      case BaselineFamily::PiecewiseConstant: specs[g] = BaselineSpec::piecewise(knots); break;
      case BaselineFamily::BSplineLogHazard: specs[g] = BaselineSpec::bspline(knots, degree); break;
      case BaselineFamily::RoystonParmar: specs[g] = BaselineSpec::royston_parmar(knots); break;
      case BaselineFamily::Weibull: break;
    }
  }
  return ModelSpec::shared(specs, structure, static_cast<int>(data.d()));
}

const MethodSummary& StudyReport::of(Method m) const {
  for (const auto& s : summary) {
    if (s.method == m) return s;
  }
  throw ValidationError("method '" + std::string(to_string(m)) + "' not in study report");
}

std::string StudyReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "setting,method,replicates,failures,mean_l2,median_l2,mean_sign_inconsistency,"
        "mean_false_inclusions,mean_false_exclusions\n";
  for (const auto& s : summary) {
    os << setting << ',' << to_string(s.method) << ',' << replicates.size() << ',' << s.failures
       << ',' << s.mean_l2 << ',' << s.median_l2 << ',' << s.mean_sign << ','
       << s.mean_false_inclusions << ',' << s.mean_false_exclusions << '\n';
  }
  return os.str();
}

namespace {

bool wants(const std::vector<Method>& ms, Method m) {
  return std::find(ms.begin(), ms.end(), m) != ms.end();
}

MethodMetrics score(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& truth) {
  MethodMetrics m;
  m.l2 = l2_error(beta_hat, truth);
  m.sign = sign_inconsistency(beta_hat, truth);
  std::tie(m.false_inclusions, m.false_exclusions) = false_inclusion_exclusion(beta_hat, truth);
  return m;
}

ReplicateResult run_replicate(const SimSetting& setting, const StudyOptions& o, int rep) {
  ReplicateResult out;
  out.replicate = rep;
  out.seed = derive_seed(o.seed, static_cast<std::uint64_t>(rep));
  const Dataset data = simulate_dataset(setting, out.seed);
  out.nonterminal_fraction = data.delta1.cast<double>().mean();
  const ModelSpec spec = working_model(data, o.working_family, o.working_k, setting.structure);
  const Eigen::VectorXd truth = setting.truth_beta();
  const int nb = spec.layout.num_beta();
  out.metrics.assign(o.methods.size(), MethodMetrics{});

  std::vector<std::pair<Method, Eigen::VectorXd>> estimates;
  auto record = [&](Method m, const Eigen::VectorXd& psi) { estimates.emplace_back(m, psi.head(nb)); };

  SolverConfig solver = o.solver;
  solver.seed = derive_seed(out.seed, 0xfeed);
  FitResult null;
  try {
    null = null_fit(data, spec, solver);
  } catch (const NumericalError&) {
    for (auto& m : out.metrics) m.failed = true;
    return out;
  }
  const Likelihood lik(data, spec);

  auto guarded = [&](auto&& body) {
    try {
      body();
    } catch (const NumericalError&) {
    }
  };

  if (wants(o.methods, Method::Oracle)) {
    guarded([&] {
      std::vector<bool> support(nb);
      for (int j = 0; j < nb; ++j) support[j] = truth(j) != 0.0;
      record(Method::Oracle, oracle_mle(data, spec, support, null.psi, solver).psi);
    });
  }
  if (wants(o.methods, Method::MLE)) {
    guarded([&] {
      const auto& L = spec.layout;
      record(Method::MLE,
             restricted_mle(data, spec, {L.columns(0), L.columns(1), L.columns(2)}, null.psi,
                            solver).psi);
    });
  }
  if (wants(o.methods, Method::Forward)) {
    guarded([&] {
      record(Method::Forward,
             forward_select(data, spec, null.psi, solver, o.forward_max_steps).fit.psi);
    });
  }
  for (auto [family, plain, fused] :
       {std::tuple{PenaltyFamily::Lasso, Method::Lasso, Method::LassoFusion},
        std::tuple{PenaltyFamily::SCAD, Method::SCAD, Method::SCADFusion}}) {
    const bool want_plain = wants(o.methods, plain), want_fused = wants(o.methods, fused);
    if (!want_plain && !want_fused) continue;
    guarded([&] {
      GridOptions go = o.grid;
      if (!want_fused) go.n_lambda2 = 1;
      const LambdaGrid grid = make_grid(lik, null.psi, go);
      PenaltyConfig pen;
      pen.family = family;
      pen.fusion_pairs = PenaltyConfig::all_pairs();
      const PathResult path = path_search(lik, grid, pen, solver, null.psi);
      if (want_plain && path.selected.bic_sub >= 0) {
        record(plain, path.points[path.selected.bic_sub].fit.psi);
      }
      if (want_fused && path.selected.bic_full >= 0) {
        record(fused, path.points[path.selected.bic_full].fit.psi);
      }
    });
  }

  for (std::size_t k = 0; k < o.methods.size(); ++k) {
    const auto it = std::find_if(estimates.begin(), estimates.end(),
                                 [&](const auto& e) { return e.first == o.methods[k]; });
    if (it == estimates.end()) {
      out.metrics[k].failed = true;
    } else {
      out.metrics[k] = score(it->second, truth);
    }
  }
  return out;
}

}  // namespace

StudyReport run_study(const SimSetting& setting, const StudyOptions& options) {
  setting.validate();
  if (options.replicates < 1) throw ValidationError("study: replicates must be positive");
  if (options.methods.empty()) throw ValidationError("study: no methods requested");
  StudyReport rep;
  rep.setting = setting.name;
  rep.methods = options.methods;
  rep.replicates.resize(options.replicates);
  parallel_for(static_cast<std::size_t>(options.replicates), [&](std::size_t r) {
    rep.replicates[r] = run_replicate(setting, options, static_cast<int>(r));
  });

  for (std::size_t k = 0; k < options.methods.size(); ++k) {
    MethodSummary s;
    s.method = options.methods[k];
    std::vector<double> l2;
    double sign = 0, fi = 0, fe = 0;
    for (const auto& r : rep.replicates) {
      const auto& m = r.metrics[k];
      if (m.failed) {
        ++s.failures;
        continue;
      }
      l2.push_back(m.l2);
      sign += m.sign;
      fi += m.false_inclusions;
      fe += m.false_exclusions;
    }
    if (!l2.empty()) {
      const double cnt = static_cast<double>(l2.size());
      for (double v : l2) s.mean_l2 += v;
      s.mean_l2 /= cnt;
      s.median_l2 = sample_quantile(l2, 0.5);
      s.mean_sign = sign / cnt;
      s.mean_false_inclusions = fi / cnt;
      s.mean_false_exclusions = fe / cnt;
    } else {
      s.mean_l2 = s.median_l2 = s.mean_sign = std::numeric_limits<double>::quiet_NaN();
      s.mean_false_inclusions = s.mean_false_exclusions = std::numeric_limits<double>::quiet_NaN();
    }
    rep.summary.push_back(s);
  }
  return rep;
}

}  // namespace penidm
