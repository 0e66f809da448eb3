#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "penidm/error.hpp"
#include "penidm/pathgrid.hpp"
#include "penidm/simulate.hpp"

using namespace penidm;

namespace {

SimSetting small_setting(int n, int d) {
  SimSetting s = preset(1);
  s.n = n;
  s.d = d;
  for (auto& b : s.beta) b = b.head(d).eval();
  return s;
}

}  // namespace

TEST(Grid, SizesAndOrdering) {
  GridOptions o;
  const LambdaGrid g = make_grid(2.0, o);
  ASSERT_EQ(g.lambda1.size(), 21u);
  EXPECT_DOUBLE_EQ(g.lambda1.front(), 2.0);
  for (std::size_t i = 1; i < g.lambda1.size(); ++i) {
    EXPECT_LT(g.lambda1[i], g.lambda1[i - 1]);
    EXPECT_LE(g.lambda1[i] / g.lambda1[i - 1], 0.9 + 1e-12);
  }
  EXPECT_GE(g.lambda1.back(), 2.0 * o.min_ratio * (1 - 1e-12));
  ASSERT_EQ(g.lambda2.size(), 4u);
  EXPECT_EQ(g.lambda2.front(), 0.0);
  EXPECT_NEAR(g.lambda2.back(), 0.5, 1e-15);  // lambda1_max / 4
  for (std::size_t i = 1; i < g.lambda2.size(); ++i) EXPECT_GT(g.lambda2[i], g.lambda2[i - 1]);

  o.n_lambda2 = 1;
  EXPECT_EQ(make_grid(2.0, o).lambda2, std::vector<double>{0.0});
  o.n_lambda1 = 0;
  EXPECT_THROW(make_grid(2.0, o), ValidationError);
}

TEST(DegreesOfFreedom, Examples) {
  const ModelLayout L = ModelLayout::shared(5, {2, 2, 2});
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(L.size());
  EXPECT_EQ(degrees_of_freedom(L, psi), 7);
  psi.head(5) << 0.5, 0.5, -0.2, 0.0, 0.0;
  EXPECT_EQ(degrees_of_freedom(L, psi) - 7, 2);
  psi(5) = 0.5 + 0.5e-4;  // fused with 0.5 within tolerance
  EXPECT_EQ(degrees_of_freedom(L, psi) - 7, 2);
  psi(5) = 0.5 + 2e-4;
  EXPECT_EQ(degrees_of_freedom(L, psi) - 7, 3);
}

TEST(InformationCriteria, Formulas) {
  const ModelLayout L = ModelLayout::shared(2, {2, 2, 2});
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(L.size());
  psi(0) = 0.3;
  const Criteria c = information_criteria(L, psi, 1.25, 400);
  EXPECT_EQ(c.df, 8);
  EXPECT_NEAR(c.bic, 2.0 * 400 * 1.25 + 8 * std::log(400.0), 1e-10);
  EXPECT_NEAR(c.aic, 2.0 * 400 * 1.25 + 16.0, 1e-10);
}

TEST(TransferParams, SharedColumnsCarryOver) {
  const ModelLayout from({std::vector<int>{0, 2}, std::vector<int>{}, std::vector<int>{1}}, {2, 2, 2});
  const ModelLayout to = ModelLayout::shared(3, {2, 2, 2});
  Eigen::VectorXd psi(from.size());
  for (Eigen::Index j = 0; j < psi.size(); ++j) psi(j) = j + 1.0;
  const Eigen::VectorXd out = transfer_params(from, psi, to);
  EXPECT_EQ(out(0), 1.0);
  EXPECT_EQ(out(1), 0.0);
  EXPECT_EQ(out(2), 2.0);
  EXPECT_EQ(out(to.beta_offset(2) + 1), 3.0);
  EXPECT_EQ(out.tail(7), psi.tail(7));
}

class PathTest : public ::testing::TestWithParam<TransitionStructure> {};

TEST_P(PathTest, LambdaMaxZeroesBetaAndSingleNullPoint) {
  SimSetting s = small_setting(300, 3);
  s.structure = GetParam();
  const Dataset data = simulate_dataset(s, 1);
  const auto spec = fixture::model(BaselineFamily::Weibull, GetParam(), 3);
  const Likelihood lik(data, spec);
  const FitResult null = null_fit(data, spec, SolverConfig{});
  const double lmax = lambda1_max(lik, null.psi);
  Eigen::VectorXd g;
  lik.value_gradient(null.psi, g);
  EXPECT_NEAR(lmax, g.head(spec.layout.num_beta()).cwiseAbs().maxCoeff(), 1e-15);

  LambdaGrid grid{{2.0 * lmax}, {0.0}};
  PenaltyConfig pc;
  const PathResult r = path_search(lik, grid, pc, SolverConfig{}, null.psi);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_TRUE(r.points[0].fit.psi.head(spec.layout.num_beta()).isZero(0.0));
  EXPECT_EQ(r.points[0].criteria.df, 7);
  EXPECT_EQ(r.selected.bic_full, 0);
  EXPECT_EQ(r.selected.aic_sub, 0);
}

TEST_P(PathTest, WarmStartsNeverWorseThanColdStarts) {
  SimSetting s = small_setting(60, 2);
  s.structure = GetParam();
  const Dataset data = simulate_dataset(s, 4);
  const auto spec = fixture::model(BaselineFamily::Weibull, GetParam(), 2);
  const Likelihood lik(data, spec);
  const FitResult null = null_fit(data, spec, SolverConfig{});
  GridOptions o;
  o.n_lambda1 = 8;
  o.n_lambda2 = 3;
  const LambdaGrid grid = make_grid(lik, null.psi, o);
  PenaltyConfig pc;
  pc.fusion_pairs = PenaltyConfig::all_pairs();
  SolverConfig solver;
  solver.xi = 1e-9;
  const PathResult r = path_search(lik, grid, pc, solver, null.psi);
  ASSERT_EQ(r.points.size(), grid.lambda1.size() * grid.lambda2.size());
  for (const auto& p : r.points) {
    ASSERT_FALSE(p.failed) << p.error;
    PenaltyConfig at = pc;
    at.lambda1 = p.lambda1;
    at.lambda2 = p.lambda2;
    const PenalizedObjective obj(lik, at);
    const FitResult cold = fit(obj, null.psi, solver);
    EXPECT_LE(p.fit.objective, cold.objective + 1e-6) << p.i1 << "," << p.i2;
    EXPECT_GE(p.criteria.df, 7);
    const KktReport kkt = kkt_audit(obj, p.fit.psi);
    EXPECT_TRUE(kkt.ok) << p.i1 << "," << p.i2 << " violation " << kkt.max_violation;
  }
}

TEST_P(PathTest, ZeroFusionSubPathMatchesOneDimensionalPath) {
  SimSetting s = small_setting(200, 4);
  s.structure = GetParam();
  const Dataset data = simulate_dataset(s, 8);
  const auto spec = fixture::model(BaselineFamily::Weibull, GetParam(), 4);
  const Likelihood lik(data, spec);
  const FitResult null = null_fit(data, spec, SolverConfig{});
  GridOptions o;
  o.n_lambda1 = 10;
  o.n_lambda2 = 3;
  const LambdaGrid full = make_grid(lik, null.psi, o);
  PenaltyConfig fused;
  fused.fusion_pairs = PenaltyConfig::all_pairs();
  const PathResult a = path_search(lik, full, fused, SolverConfig{}, null.psi);
  const LambdaGrid one{full.lambda1, {0.0}};
  const PathResult b = path_search(lik, one, PenaltyConfig{}, SolverConfig{}, null.psi);
  for (std::size_t i = 0; i < full.lambda1.size(); ++i) {
    EXPECT_EQ(a.at(static_cast<int>(i), 0).fit.psi, b.at(static_cast<int>(i), 0).fit.psi);
  }
  const auto bic = [&](int idx) { return a.points[idx].criteria.bic; };
  EXPECT_LE(bic(a.selected.bic_full), bic(a.selected.bic_sub));
  EXPECT_EQ(a.at(0, 0).lambda2, 0.0);
  EXPECT_EQ(a.selected.bic_sub % static_cast<int>(full.lambda2.size()), 0);
}

INSTANTIATE_TEST_SUITE_P(BothStructures, PathTest, ::testing::ValuesIn(fixture::kStructures),
                         [](const auto& info) {
                           return info.param == TransitionStructure::Markov ? "Markov"
                                                                             : "SemiMarkov";
                         });

TEST(Path, StrongEffectsSelectedByBic) {
  int hits = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    const SimSetting s = preset(1);
    const Dataset data = simulate_dataset(s, 100 + rep);
    const ModelSpec spec = s.truth_spec();
    const Likelihood lik(data, spec);
    const FitResult null = null_fit(data, spec, SolverConfig{});
    GridOptions o;
    o.n_lambda2 = 1;
    const PathResult r = path_search(lik, make_grid(lik, null.psi, o), PenaltyConfig{},
                                     SolverConfig{}, null.psi);
    const Eigen::VectorXd truth = s.truth_beta();
    const Eigen::VectorXd est = r.points[r.selected.bic_full].fit.psi.head(truth.size());
    bool all = true;
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
      if (std::abs(truth(j)) >= 0.5 && est(j) == 0.0) all = false;
    }
    hits += all;
  }
  EXPECT_GE(hits * 10, reps * 9);
}

TEST(ForwardSelection, StrongSingleEffectEnteredFirst) {
  SimSetting s = small_setting(800, 1);
  s.beta[0](0) = 1.0;
  s.beta[1](0) = 0.0;
  s.beta[2](0) = 0.0;
  const Dataset data = simulate_dataset(s, 2);
  const auto spec = fixture::model(BaselineFamily::Weibull, TransitionStructure::SemiMarkov, 1);
  const FitResult null = null_fit(data, spec, SolverConfig{});
  const ForwardResult r = forward_select(data, spec, null.psi, SolverConfig{}, 2);
  ASSERT_FALSE(r.steps.empty());
  EXPECT_LE(r.steps.size(), 2u);

  // Exhaustive one-step oracle: best BIC among the three single additions.
  double best = std::numeric_limits<double>::infinity();
  int best_g = 0;
  for (int g = 0; g < 3; ++g) {
    std::array<std::vector<int>, 3> cols;
    cols[g] = {0};
    const FitResult f = restricted_mle(data, spec, cols, null.psi, SolverConfig{});
    const double bic = information_criteria(spec.layout, f.psi, f.neg_log_lik, data.n()).bic;
    if (bic < best) {
      best = bic;
      best_g = g + 1;
    }
  }
  EXPECT_EQ(r.steps[0].transition, best_g);
  EXPECT_EQ(r.steps[0].transition, 1);
  EXPECT_EQ(r.steps[0].column, 0);
}

TEST(ForwardSelection, NoiseCovariatesRarelyEnter) {
  SimSetting s = small_setting(1500, 3);
  for (auto& b : s.beta) b.setZero();
  const Dataset data = simulate_dataset(s, 17);
  const auto spec = fixture::model(BaselineFamily::Weibull, TransitionStructure::SemiMarkov, 3);
  const FitResult null = null_fit(data, spec, SolverConfig{});
  const ForwardResult r = forward_select(data, spec, null.psi, SolverConfig{}, 9);
  EXPECT_TRUE(r.steps.empty());
  EXPECT_TRUE(r.fit.psi.head(spec.layout.num_beta()).isZero(0.0));
}

TEST(OracleMle, FullAndEmptySupports) {
  SimSetting s = small_setting(300, 2);
  const Dataset data = simulate_dataset(s, 6);
  const auto spec = fixture::model(BaselineFamily::Weibull, TransitionStructure::SemiMarkov, 2);
  SolverConfig cfg;
  cfg.xi = 1e-16;
  cfg.max_iter = 50000;
  const FitResult null = null_fit(data, spec, cfg);
  const int nb = spec.layout.num_beta();
  const FitResult empty = oracle_mle(data, spec, std::vector<bool>(nb, false), null.psi, cfg);
  EXPECT_TRUE(empty.psi.head(nb).isZero(0.0));
  EXPECT_LT((empty.psi - null.psi).cwiseAbs().maxCoeff(), 1e-4);
  const FitResult all = oracle_mle(data, spec, std::vector<bool>(nb, true), null.psi, cfg);
  const Likelihood lik(data, spec);
  const FitResult mle = fit(PenalizedObjective(lik, PenaltyConfig{}), null.psi, cfg);
  EXPECT_LT((all.psi - mle.psi).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_THROW(oracle_mle(data, spec, std::vector<bool>(nb - 1, true), null.psi, cfg),
               ValidationError);
}
