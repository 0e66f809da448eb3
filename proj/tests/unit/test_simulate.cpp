#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "penidm/error.hpp"
#include "penidm/simulate.hpp"

using namespace penidm;

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

SimSetting exponential_setting(double h1, double h2, double h3) {
  SimSetting s;
  s.d = 0;
  for (auto& b : s.beta) b.resize(0);
  for (auto& b : s.baselines) b = BaselineSpec::piecewise({0.0});
  s.phi = {Eigen::VectorXd::Constant(1, std::log(h1)), Eigen::VectorXd::Constant(1, std::log(h2)),
           Eigen::VectorXd::Constant(1, std::log(h3))};
  return s;
}

}  // namespace

TEST(Covariates, IndependentColumns) {
  const Eigen::MatrixXd x = gen_covariates(1000, 4, 0.0, 1);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(x.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR((x.col(j).array() - x.col(j).mean()).square().sum() / 999.0, 1.0, 1e-12);
    for (int k = j + 1; k < 4; ++k) EXPECT_LT(std::abs(correlation(x.col(j), x.col(k))), 0.1);
  }
}

TEST(Covariates, AutoregressiveCorrelation) {
  const Eigen::MatrixXd x = gen_covariates(5000, 6, 0.25, 2);
  for (int j = 0; j + 1 < 6; ++j) EXPECT_NEAR(correlation(x.col(j), x.col(j + 1)), 0.25, 0.05);
  for (int j = 0; j + 2 < 6; ++j) EXPECT_NEAR(correlation(x.col(j), x.col(j + 2)), 0.0625, 0.05);
}

TEST(Events, CompetingExponentialsWithUnitFrailty) {
  SimSetting s = exponential_setting(0.3, 0.7, 1.0);
  s.fixed_frailty = true;
  const EventGenerator gen(s);
  std::mt19937_64 rng(5);
  const int n = 20000;
  int first = 0;
  double total_time = 0.0;
  for (int i = 0; i < n; ++i) {
    const SubjectRecord r = gen.draw(Eigen::RowVectorXd(0), rng);
    first += r.delta1;
    total_time += r.y1;
  }
  const double p = static_cast<double>(first) / n;
  EXPECT_NEAR(p, 0.3, 3.0 * std::sqrt(0.3 * 0.7 / n));
  EXPECT_NEAR(total_time / n, 1.0, 3.0 / std::sqrt(n));  // Exp(1) first-event time
}

TEST(Events, RecordsSatisfyInvariantsAndAllPatternsOccur) {
  SimSetting s = preset("low-shared-lowdim");
  s.n = 3000;
  const Dataset data = simulate_dataset(s, 11);
  EXPECT_NO_THROW(data.validate());
  int patterns[2][2] = {{0, 0}, {0, 0}};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    EXPECT_GT(data.y1(i), 0.0);
    EXPECT_LE(data.y1(i), data.y2(i));
    EXPECT_LE(data.y2(i), s.censor_time);
    if (data.delta1(i) == 0) EXPECT_EQ(data.y1(i), data.y2(i));
    ++patterns[data.delta1(i)][data.delta2(i)];
  }
  for (auto& row : patterns)
    for (int c : row) EXPECT_GT(c, 0);
}

TEST(Events, InitialStateSurvivalMatchesGammaLaplace) {
  SimSetting s = exponential_setting(0.2, 0.3, 0.5);
  const EventGenerator gen(s);
  std::mt19937_64 rng(9);
  const int n = 40000;
  std::vector<double> y1(n);
  for (int i = 0; i < n; ++i) y1[i] = gen.draw(Eigen::RowVectorXd(0), rng).y1;
  const double es = std::exp(s.sigma);
  for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double expected = std::pow(1.0 + es * 0.5 * t, -1.0 / es);
    const double got = std::count_if(y1.begin(), y1.end(), [t](double y) { return y > t; }) /
                       static_cast<double>(n);
    EXPECT_NEAR(got, expected, 4.0 * std::sqrt(expected * (1 - expected) / n)) << "t=" << t;
  }
}

TEST(Events, WeibullSharedShapeClosedForm) {
  SimSetting s;
  s.d = 0;
  for (auto& b : s.beta) b.resize(0);
  for (auto& b : s.baselines) b = BaselineSpec::weibull();
  const double log_shape = std::log(1.3);
  s.phi = {Eigen::Vector2d(log_shape, -1.2), Eigen::Vector2d(log_shape, -0.5),
           Eigen::Vector2d(log_shape, -0.8)};
  const Dataset data = simulate_dataset([&] {
    SimSetting c = s;
    c.n = 10000;
    return c;
  }(), 21);
  const double p = data.delta1.cast<double>().mean();
  const double expected = std::exp(-1.2) / (std::exp(-1.2) + std::exp(-0.5));
  EXPECT_NEAR(p, expected, 2.0 * std::sqrt(expected * (1 - expected) / data.n()));
}

TEST(Presets, NamesAndNonTerminalFractions) {
  ASSERT_EQ(preset_names().size(), 8u);
  EXPECT_EQ(preset(1).name, "moderate-shared-lowdim");
  EXPECT_EQ(preset(2).d, 350);
  EXPECT_THROW(preset("nope"), ValidationError);
  EXPECT_THROW(preset(9), ValidationError);
  for (int idx = 1; idx <= 8; ++idx) {
    SimSetting s = preset(idx);
    s.d = std::min(s.d, 25);
    for (auto& b : s.beta) b = b.head(s.d).eval();
    const double frac = simulate_dataset(s, 1000 + idx).delta1.cast<double>().mean();
    const double target = idx <= 4 ? 0.30 : 0.17;
    EXPECT_NEAR(frac, target, 0.03) << s.name;
  }
}

TEST(Presets, PartialSupportOffsets) {
  const SimSetting s = preset("moderate-partial-lowdim");
  for (int j = 0; j < 5; ++j) EXPECT_EQ(s.beta[1](j), 0.0);
  EXPECT_EQ(s.beta[1](5), 0.6);
  EXPECT_EQ(s.beta[0](0), 0.3);
  EXPECT_EQ((s.truth_beta().array() != 0.0).count(), 30);
}

TEST(Simulation, SeededDeterminism) {
  SimSetting s = preset(1);
  s.n = 200;
  const Dataset a = simulate_dataset(s, 3), b = simulate_dataset(s, 3), c = simulate_dataset(s, 4);
  EXPECT_EQ(a.y1, b.y1);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.y1, c.y1);
}

TEST(Metrics, L2Error) {
  const Eigen::Vector3d a(1.0, -2.0, 0.5);
  EXPECT_EQ(l2_error(a, a), 0.0);
  EXPECT_EQ(l2_error(a, a + Eigen::Vector3d(0, 1, 0)), 1.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::VectorXd u(20), v(20);
  for (int j = 0; j < 20; ++j) u(j) = z(rng), v(j) = z(rng);
  double ref = 0.0;
  for (int j = 0; j < 20; ++j) ref += (u(j) - v(j)) * (u(j) - v(j));
  EXPECT_NEAR(l2_error(u, v), ref, 1e-12);
}

TEST(Metrics, SignAndSupportErrors) {
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(40);
  truth.head(30).setConstant(0.4);
  EXPECT_EQ(sign_inconsistency(truth, truth), 0);
  EXPECT_EQ(sign_inconsistency(Eigen::VectorXd::Zero(40), truth), 30);
  EXPECT_EQ(false_inclusion_exclusion(Eigen::VectorXd::Zero(40), truth), std::make_pair(0, 30));
  EXPECT_EQ(false_inclusion_exclusion(truth, truth), std::make_pair(0, 0));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(-1, 1);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd a(12), b(12);
    for (int j = 0; j < 12; ++j) a(j) = pick(rng) * 0.3, b(j) = pick(rng) * 0.7;
    int sign = 0, fi = 0, fe = 0;
    for (int j = 0; j < 12; ++j) {
      const int sa = (a(j) > 0) - (a(j) < 0), sb = (b(j) > 0) - (b(j) < 0);
      sign += sa != sb;
      fi += sa != 0 && sb == 0;
      fe += sa == 0 && sb != 0;
    }
    EXPECT_EQ(sign_inconsistency(a, b), sign);
    EXPECT_EQ(false_inclusion_exclusion(a, b), std::make_pair(fi, fe));
  }
}

TEST(Study, SingleReplicateOracleOnlyIsReproducible) {
  SimSetting s = preset(1);
  s.n = 300;
  s.d = 10;
  for (auto& b : s.beta) b = b.head(10).eval();
  StudyOptions o;
  o.methods = {Method::Oracle};
  o.replicates = 1;
  const StudyReport a = run_study(s, o), b = run_study(s, o);
  ASSERT_EQ(a.summary.size(), 1u);
  EXPECT_EQ(a.summary[0].mean_l2, b.summary[0].mean_l2);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.of(Method::Oracle).mean_sign, 0.0);
  EXPECT_EQ(parse_method("scad+fusion"), Method::SCADFusion);
}
