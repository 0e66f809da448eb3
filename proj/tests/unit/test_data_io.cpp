#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "penidm/error.hpp"
#include "penidm/io.hpp"

using namespace penidm;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ValidThreeRows) {
  const Dataset d = parse_dataset_csv(
      "y1,y2,delta1,delta2,age,sex\n"
      "1.0,2.0,1,1,50,0\n"
      "3.0,3.0,0,1,61,1\n"
      "0.5,0.5,0,0,40,1\n");
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.d(), 2);
  EXPECT_EQ(d.covariate_names, (std::vector<std::string>{"age", "sex"}));
  EXPECT_EQ(d.delta1(0), 1);
  EXPECT_DOUBLE_EQ(d.x(1, 0), 61.0);
}

TEST(Csv, NoCovariates) {
  const Dataset d = parse_dataset_csv("y1,y2,delta1,delta2\n1,2,1,0\n");
  EXPECT_EQ(d.n(), 1);
  EXPECT_EQ(d.d(), 0);
}

TEST(Csv, ErrorsNameTheLine) {
  const auto e1 = error_of([] { parse_dataset_csv("y1,y2,delta1,delta2\n1,2,1,1\n3,2,1,1\n"); });
  EXPECT_NE(e1.find("line 3"), std::string::npos) << e1;
  const auto e2 = error_of([] { parse_dataset_csv("y1,y2,delta1,delta2\n1,2,2,1\n"); });
  EXPECT_NE(e2.find("line 2"), std::string::npos) << e2;
  EXPECT_NE(e2.find("delta1"), std::string::npos) << e2;
  const auto e3 = error_of([] { parse_dataset_csv("y1,y2,delta1,delta2\n1,abc,0,0\n"); });
  EXPECT_NE(e3.find("line 2"), std::string::npos) << e3;
  const auto e4 = error_of([] { parse_dataset_csv("y1,y2,delta1,delta2,x\n1,2,1,1\n"); });
  EXPECT_NE(e4.find("line 2"), std::string::npos) << e4;
}

TEST(Csv, RejectsBadHeaderAndTies) {
  EXPECT_THROW(parse_dataset_csv("a,b,c,d\n1,1,0,0\n"), ValidationError);
  EXPECT_THROW(parse_dataset_csv("y1,y2,delta1,delta2\n1,1,1,1\n"), ValidationError);
  EXPECT_THROW(parse_dataset_csv("y1,y2,delta1,delta2\n0,1,1,1\n"), ValidationError);
  EXPECT_THROW(parse_dataset_csv("y1,y2,delta1,delta2\n1,2,0,1\n"), ValidationError);
  EXPECT_THROW(parse_dataset_csv("y1,y2,delta1,delta2\n"), ValidationError);
}

TEST(Csv, RoundTrip) {
  const Dataset d = oracle::synthetic_dataset(13, 3, 10.0, 4);
  const Dataset back = parse_dataset_csv(dataset_to_csv(d));
  EXPECT_EQ(back.y1, d.y1);
  EXPECT_EQ(back.y2, d.y2);
  EXPECT_EQ(back.delta1, d.delta1);
  EXPECT_EQ(back.delta2, d.delta2);
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.covariate_names, d.covariate_names);
}

TEST(Standardization, MeanZeroUnitVarianceConstantColumnKept) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 6, 5;
  const auto st = Standardization::from(x);
  const Eigen::MatrixXd z = st.apply(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR((z.col(0).array().square().sum()) / 3.0, 1.0, 1e-14);
  EXPECT_TRUE(z.col(1).isZero(0.0));
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_run_config(R"({
    "data": "d.csv", "structure": "markov",
    "baselines": {"family": "piecewise", "k": 4},
    "penalty": {"family": "mcp", "a": 3.0, "lambda1": 0.1, "fusion_pairs": [[2, 3]]},
    "solver": {"xi": 1e-8}, "grid": {"n_lambda1": 11, "n_lambda2": 1}, "seed": 42
  })");
  EXPECT_EQ(c.data, "d.csv");
  EXPECT_EQ(c.structure, TransitionStructure::Markov);
  EXPECT_EQ(c.baselines[2].family, BaselineFamily::PiecewiseConstant);
  EXPECT_EQ(c.baselines[2].k, 4);
  EXPECT_EQ(c.penalty.family, PenaltyFamily::MCP);
  ASSERT_EQ(c.penalty.fusion_pairs.size(), 1u);
  EXPECT_EQ(c.penalty.fusion_pairs[0], std::make_pair(2, 3));
  EXPECT_DOUBLE_EQ(c.solver.xi, 1e-8);
  EXPECT_EQ(c.solver.max_iter, 5000);
  EXPECT_EQ(c.grid.n_lambda1, 11);
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, StrictKeysAndTypes) {
  EXPECT_THROW(parse_run_config(R"({"dta": "x.csv"})"), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"penalty": {"lambda": 1}})"), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"seed": "one"})"), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"penalty": {"family": "scad", "a": 1.5}})"), ValidationError);
  EXPECT_THROW(parse_run_config("{not json"), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"structure": "sideways"})"), ValidationError);
}

TEST(Config, SerializationRoundTripAndHash) {
  RunConfig c;
  c.data = "a.csv";
  c.penalty.lambda2 = 0.3;
  c.penalty.fusion_pairs = PenaltyConfig::all_pairs();
  c.simulate.methods = {Method::SCAD};
  const RunConfig back = parse_run_config(run_config_to_json(c));
  EXPECT_EQ(run_config_to_json(back), run_config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  RunConfig threads = c;
  threads.threads = 8;
  EXPECT_EQ(config_hash(threads), config_hash(c));
  RunConfig seeded = c;
  seeded.seed = 2;
  EXPECT_NE(config_hash(seeded), config_hash(c));
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Artifact, LosslessRoundTrip) {
  ModelArtifact a;
  a.spec = fixture::model(BaselineFamily::BSplineLogHazard, TransitionStructure::Markov, 3);
  a.psi = oracle::random_psi(a.spec, 8);
  a.psi(0) = 0.1 + 1e-17;  // digits beyond 15 must survive
  a.standardization.center = Eigen::Vector3d(0.25, -1.0 / 3.0, 7.0);
  a.standardization.scale = Eigen::Vector3d(2.0, 1.0 / 7.0, 1.0);
  a.covariate_names = {"a", "b", "c"};
  a.config_hash = "0123456789abcdef";
  a.data_hash = "fedcba9876543210";
  a.selection = "bic-full";
  a.lambda1 = 0.123456789012345678;
  a.lambda2 = 1.0 / 3.0;
  a.grid_index = 17;
  a.criteria = {9, 1234.5678901234, 1200.1};
  a.objective = 3.14159;
  a.neg_log_lik = 3.1;
  a.iterations = 321;
  a.converged = true;
  a.stop_reason = "objective-delta";
  a.warnings = {"w1"};
  const std::string text = artifact_to_json(a);
  const ModelArtifact b = artifact_from_json(text);
  EXPECT_EQ(b.psi, a.psi);
  EXPECT_EQ(b.spec.baselines, a.spec.baselines);
  EXPECT_EQ(b.spec.layout, a.spec.layout);
  EXPECT_EQ(b.spec.structure, a.spec.structure);
  EXPECT_EQ(b.standardization.center, a.standardization.center);
  EXPECT_EQ(b.standardization.scale, a.standardization.scale);
  EXPECT_EQ(b.lambda1, a.lambda1);
  EXPECT_EQ(b.lambda2, a.lambda2);
  EXPECT_EQ(b.criteria.bic, a.criteria.bic);
  EXPECT_EQ(b.warnings, a.warnings);
  EXPECT_EQ(artifact_to_json(b), text);
}

TEST(Artifact, OriginalScaleCoefficients) {
  const ModelLayout L = ModelLayout::shared(2, {2, 2, 2});
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(L.size());
  psi(0) = 1.0;   // transition 1, column 0
  psi(1) = -2.0;  // transition 1, column 1
  Standardization st;
  st.center = Eigen::Vector2d(10.0, 1.0);
  st.scale = Eigen::Vector2d(2.0, 4.0);
  const OriginalScale o = to_original_scale(L, psi, st);
  EXPECT_DOUBLE_EQ(o.beta[0](0), 0.5);
  EXPECT_DOUBLE_EQ(o.beta[0](1), -0.5);
  EXPECT_DOUBLE_EQ(o.offset[0], -(0.5 * 10.0 - 0.5 * 1.0));
  // Same linear predictor on both scales.
  const Eigen::Vector2d raw(13.0, -3.0);
  const double eta_std = psi(0) * (raw(0) - 10.0) / 2.0 + psi(1) * (raw(1) - 1.0) / 4.0;
  EXPECT_NEAR(o.beta[0].dot(raw) + o.offset[0], eta_std, 1e-12);
}

TEST(Covariates, ParseTable) {
  const CovariateTable t = parse_covariate_csv("a,b\n1,2\n3,4\n");
  EXPECT_EQ(t.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.x.rows(), 2);
  EXPECT_DOUBLE_EQ(t.x(1, 0), 3.0);
  EXPECT_THROW(parse_covariate_csv("a,b\n1\n"), ValidationError);
}
