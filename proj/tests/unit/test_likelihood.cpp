#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "penidm/hazards.hpp"
#include "penidm/likelihood.hpp"

using namespace penidm;

namespace {

Dataset one_subject(double y1, double y2, int d1, int d2) {
  Dataset d;
  d.y1 = Eigen::VectorXd::Constant(1, y1);
  d.y2 = Eigen::VectorXd::Constant(1, y2);
  d.delta1 = Eigen::VectorXi::Constant(1, d1);
  d.delta2 = Eigen::VectorXi::Constant(1, d2);
  d.x.resize(1, 0);
  return d;
}

ModelSpec unit_weibull(TransitionStructure s, int d = 0) {
  const auto w = BaselineSpec::weibull();
  return ModelSpec::shared({w, w, w}, s, d);
}

// psi with every baseline at phi = (0, 0) and sigma = 0: unit hazards, gamma variance 1.
Eigen::VectorXd unit_psi(const ModelSpec& spec) { return Eigen::VectorXd::Zero(spec.layout.size()); }

struct Case {
  BaselineFamily family;
  TransitionStructure structure;
};

std::string case_name(const ::testing::TestParamInfo<Case>& info) {
  std::string f;
  switch (info.param.family) {
    case BaselineFamily::Weibull: f = "Weibull"; break;
    case BaselineFamily::PiecewiseConstant: f = "Piecewise"; break;
    case BaselineFamily::BSplineLogHazard: f = "BSpline"; break;
    case BaselineFamily::RoystonParmar: f = "RoystonParmar"; break;
  }
  return f + (info.param.structure == TransitionStructure::Markov ? "Markov" : "SemiMarkov");
}

std::vector<Case> all_cases() {
  std::vector<Case> out;
  for (auto f : fixture::kFamilies)
    for (auto s : fixture::kStructures) out.push_back({f, s});
  return out;
}

}  // namespace

TEST(CumHazardSum, UnitHazardExamples) {
  const auto spec = unit_weibull(TransitionStructure::SemiMarkov);
  const Eigen::RowVectorXd x(0);
  EXPECT_NEAR(cum_hazard_sum(spec, unit_psi(spec), {1.0, 1.0, 0, 0}, x), 2.0, 1e-14);
  EXPECT_NEAR(cum_hazard_sum(spec, unit_psi(spec), {0.5, 1.0, 1, 0}, x), 1.5, 1e-14);
}

TEST(CumHazardSum, MatchesHandEvaluation) {
  for (auto s : fixture::kStructures) {
    const auto spec = fixture::model(BaselineFamily::PiecewiseConstant, s, 2);
    const Eigen::VectorXd psi = oracle::random_psi(spec, 21);
    const auto p = ModelParams::unflatten(spec.layout, psi);
    const Eigen::RowVector2d x(0.3, -1.2);
    const SubjectRecord r{1.7, 6.1, 1, 0};
    auto H = [&](int g, double t) {
      return H0(spec.baselines[g], p.phi[g], t) * std::exp(x.dot(p.beta[g]));
    };
    const double third = s == TransitionStructure::Markov ? H(2, r.y2) - H(2, r.y1)
                                                          : H(2, r.y2 - r.y1);
    EXPECT_NEAR(cum_hazard_sum(spec, psi, r, x), H(0, r.y1) + H(1, r.y1) + third, 1e-12);
  }
}

TEST(NegLogLik, CensoredUnitHazards) {
  const auto spec = unit_weibull(TransitionStructure::SemiMarkov);
  EXPECT_NEAR(neg_log_lik(spec, unit_psi(spec), one_subject(1.0, 1.0, 0, 0)), std::log(3.0),
              1e-14);
}

TEST(NegLogLik, BothEventsUnitHazards) {
  const auto spec = unit_weibull(TransitionStructure::SemiMarkov);
  EXPECT_NEAR(neg_log_lik(spec, unit_psi(spec), one_subject(0.5, 1.0, 1, 1)), -std::log(0.128),
              1e-13);
}

TEST(NegLogLik, ZeroCovariateGradientShape) {
  const auto spec = unit_weibull(TransitionStructure::Markov);
  const Eigen::VectorXd g = gradient(spec, unit_psi(spec), oracle::synthetic_dataset(8, 0, 5.0, 1));
  EXPECT_EQ(g.size(), 7);
}

TEST(NegLogLik, FrailtyDegeneracyLimit) {
  for (auto s : fixture::kStructures) {
    const auto spec = fixture::model(BaselineFamily::Weibull, s, 2);
    Eigen::VectorXd psi = oracle::random_psi(spec, 4);
    psi(spec.layout.sigma_index()) = -15.0;
    const Dataset data = oracle::synthetic_dataset(40, 2, 6.0, 8);
    const auto p = ModelParams::unflatten(spec.layout, psi);
    const bool markov = s == TransitionStructure::Markov;
    const Likelihood lik(data, spec);
    const Eigen::VectorXd got = lik.contributions(psi);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const auto r = data.record(i);
      const Eigen::RowVectorXd x = data.x.row(i);
      auto lp = [&](int g) { return x.dot(p.beta[g]); };
      auto logh = [&](int g, double t) { return log_h0(spec.baselines[g], p.phi[g], t) + lp(g); };
      auto H = [&](int g, double t) { return H0(spec.baselines[g], p.phi[g], t) * std::exp(lp(g)); };
      double ref = H(0, r.y1) + H(1, r.y1);
      if (r.delta1 == 1) {
        ref -= logh(0, r.y1);
        ref += markov ? H(2, r.y2) - H(2, r.y1) : H(2, r.y2 - r.y1);
        if (r.delta2 == 1) ref -= logh(2, markov ? r.y2 : r.y2 - r.y1);
      } else if (r.delta2 == 1) {
        ref -= logh(1, r.y1);
      }
      EXPECT_NEAR(got(i), ref, 1e-4) << "subject " << i;
    }
  }
}

TEST(NegLogLik, OrderAndBatchInvariance) {
  const auto spec = fixture::model(BaselineFamily::BSplineLogHazard, TransitionStructure::SemiMarkov, 3);
  const Eigen::VectorXd psi = oracle::random_psi(spec, 2);
  const Dataset data = oracle::synthetic_dataset(700, 3, 9.0, 6);
  const double full = neg_log_lik(spec, psi, data);

  std::vector<Eigen::Index> rows(data.n());
  std::iota(rows.begin(), rows.end(), 0);
  std::shuffle(rows.begin(), rows.end(), std::mt19937_64(1));
  EXPECT_NEAR(neg_log_lik(spec, psi, data.subset(rows)), full, 1e-12);

  const std::vector<Eigen::Index> a(rows.begin(), rows.begin() + 300), b(rows.begin() + 300, rows.end());
  const double split = (300.0 * neg_log_lik(spec, psi, data.subset(a)) +
                        400.0 * neg_log_lik(spec, psi, data.subset(b))) / 700.0;
  EXPECT_NEAR(split, full, 1e-12);
}

TEST(NegLogLik, IncreasingBaselineIncreasesExposure) {
  const auto spec = fixture::model(BaselineFamily::PiecewiseConstant, TransitionStructure::SemiMarkov, 1);
  Eigen::VectorXd psi = oracle::random_psi(spec, 12);
  const Dataset data = oracle::synthetic_dataset(30, 1, 8.0, 3);
  const Likelihood lik(data, spec);
  const Eigen::VectorXd before = lik.cum_hazard_sums(psi);
  psi(spec.layout.phi_offset(0)) += 0.2;  // first interval of transition 1
  const Eigen::VectorXd after = lik.cum_hazard_sums(psi);
  for (Eigen::Index i = 0; i < data.n(); ++i) EXPECT_GT(after(i), before(i));
}

class LikelihoodCase : public ::testing::TestWithParam<Case> {};

TEST_P(LikelihoodCase, MatchesFrailtyQuadrature) {
  const auto spec = fixture::model(GetParam().family, GetParam().structure, 2);
  const Eigen::VectorXd psi = oracle::random_psi(spec, 31);
  const Dataset data = oracle::synthetic_dataset(50, 2, 9.0, 32);
  const Eigen::VectorXd got = Likelihood(data, spec).contributions(psi);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double ref = oracle::subject_nll_quadrature(spec, psi, data.record(i), data.x.row(i));
    EXPECT_NEAR(got(i), ref, 1e-6 * std::max(1.0, std::abs(ref))) << "subject " << i;
    total += ref;
  }
  EXPECT_NEAR(neg_log_lik(spec, psi, data), total / data.n(), 1e-6);
}

TEST_P(LikelihoodCase, GradientMatchesFiniteDifferences) {
  const auto spec = fixture::model(GetParam().family, GetParam().structure, 3);
  const Dataset data = oracle::synthetic_dataset(20, 3, 9.0, 41);
  const Likelihood lik(data, spec);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXd psi = oracle::random_psi(spec, 100 + seed);
    Eigen::VectorXd g;
    lik.value_gradient(psi, g);
    const Eigen::VectorXd fd = oracle::fd_gradient([&](const Eigen::VectorXd& p) { return lik.value(p); }, psi);
    EXPECT_LT(oracle::mixed_rel_error(g, fd), 1e-6);
  }
}

TEST_P(LikelihoodCase, HessianMatchesFiniteDifferencesAndIsSymmetric) {
  const auto spec = fixture::model(GetParam().family, GetParam().structure, 3);
  const Dataset data = oracle::synthetic_dataset(20, 3, 9.0, 43);
  const Likelihood lik(data, spec);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Eigen::VectorXd psi = oracle::random_psi(spec, 200 + seed);
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    const double v = lik.value_gradient_hessian(psi, g, H);
    EXPECT_DOUBLE_EQ(v, lik.value(psi));
    EXPECT_EQ(H, H.transpose());
    const Eigen::MatrixXd fd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& p) {
          Eigen::VectorXd gp;
          lik.value_gradient(p, gp);
          return gp;
        },
        psi);
    EXPECT_LT(oracle::mixed_rel_error(H, fd), 1e-5);
  }
}

INSTANTIATE_TEST_SUITE_P(AllModels, LikelihoodCase, ::testing::ValuesIn(all_cases()), case_name);

TEST(Likelihood, PerTransitionColumnSubsets) {
  const auto b = BaselineSpec::weibull();
  ModelSpec spec;
  spec.baselines = {b, b, b};
  spec.layout = ModelLayout({std::vector<int>{0, 2}, std::vector<int>{1}, std::vector<int>{}}, {2, 2, 2});
  const Dataset data = oracle::synthetic_dataset(20, 3, 6.0, 3);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(spec.layout.size());
  psi << 0.2, -0.1, 0.3, 0.1, -1.0, 0.0, -1.2, -0.1, -1.1, -0.5;
  const Likelihood lik(data, spec);
  Eigen::VectorXd g;
  lik.value_gradient(psi, g);
  EXPECT_LT(oracle::mixed_rel_error(
                g, oracle::fd_gradient([&](const Eigen::VectorXd& p) { return lik.value(p); }, psi)),
            1e-6);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    EXPECT_NEAR(lik.contributions(psi)(i),
                oracle::subject_nll_quadrature(spec, psi, data.record(i), data.x.row(i)), 1e-6);
  }
}
