#include <benchmark/benchmark.h>

#include "penidm/likelihood.hpp"
#include "penidm/optimizer.hpp"
#include "penidm/pathgrid.hpp"
#include "penidm/predict.hpp"
#include "penidm/simulate.hpp"

using namespace penidm;

namespace {

struct Problem {
  Dataset data;
  ModelSpec spec;
  Eigen::VectorXd psi;
};

Problem make_problem(int n, int d) {
  SimSetting s = preset("moderate-shared-lowdim");
  s.n = n;
  s.d = d;
  for (auto& b : s.beta) {
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(d);
    const auto m = std::min<Eigen::Index>(d, b.size());
    padded.head(m) = b.head(m);
    b = padded;
  }
  Problem p;
  p.data = simulate_dataset(s, 1);
  const auto w = BaselineSpec::weibull();
  p.spec = ModelSpec::shared({w, w, w}, TransitionStructure::SemiMarkov, d);
  p.psi = crude_start(p.data, p.spec);
  return p;
}

void BM_Value(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const Likelihood lik(p.data, p.spec);
  for (auto _ : state) benchmark::DoNotOptimize(lik.value(p.psi));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Value)->Args({1000, 25})->Args({4000, 75})->Args({1000, 350});

void BM_Gradient(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const Likelihood lik(p.data, p.spec);
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(lik.value_gradient(p.psi, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gradient)->Args({1000, 25})->Args({4000, 75})->Args({1000, 350});

void BM_Hessian(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)), 25);
  const Likelihood lik(p.data, p.spec);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (auto _ : state) benchmark::DoNotOptimize(lik.value_gradient_hessian(p.psi, g, h));
}
BENCHMARK(BM_Hessian)->Arg(1000);

void BM_NullFit(benchmark::State& state) {
  const Problem p = make_problem(1000, 25);
  for (auto _ : state) benchmark::DoNotOptimize(null_fit(p.data, p.spec, SolverConfig{}).objective);
}
BENCHMARK(BM_NullFit)->Unit(benchmark::kMillisecond);

void BM_RiskProfile(benchmark::State& state) {
  const SimSetting s = preset("moderate-shared-lowdim");
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(s.d);
  std::vector<double> t;
  for (int k = 1; k <= 20; ++k) t.push_back(k);
  for (auto _ : state) benchmark::DoNotOptimize(risk_profile(s.truth_spec(), s.truth_psi(), x, t));
}
BENCHMARK(BM_RiskProfile);

}  // namespace

BENCHMARK_MAIN();
