#include <benchmark/benchmark.h>

#include "cnls/nehari.hpp"
#include "cnls/solver.hpp"

using namespace cnls;

namespace {

ProblemSpec two_competing(int n) {
  return make_constant_problem(Grid::interval(10.0, n), Decomposition::singletons(2), {1, 1}, {{1, -2}, {-2, 1}});
}

void BM_Laplacian(benchmark::State& st) {
  const Grid g = Grid::radial_ball(10.0, 3, static_cast<int>(st.range(0)));
  const Field u = Field::Ones(g.n_interior());
  for (auto _ : st) benchmark::DoNotOptimize(apply_laplacian(g, u));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Laplacian)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_EnergyAndGradient(benchmark::State& st) {
  const ProblemSpec spec = two_competing(static_cast<int>(st.range(0)));
  const State u = initial_guess(spec, 1, InitialStyle::RandomPositive);
  for (auto _ : st) {
    benchmark::DoNotOptimize(energy(spec, u));
    benchmark::DoNotOptimize(gradient(spec, u));
  }
}
BENCHMARK(BM_EnergyAndGradient)->Arg(200)->Arg(400)->Arg(1600);

void BM_ProjectToNehari(benchmark::State& st) {
  const ProblemSpec spec = two_competing(static_cast<int>(st.range(0)));
  const State u = initial_guess(spec, 1, InitialStyle::RandomPositive);
  for (auto _ : st) benchmark::DoNotOptimize(project_to_nehari(spec, 1.3 * u));
}
BENCHMARK(BM_ProjectToNehari)->Arg(200)->Arg(400);

void BM_MaximizeQuadratic(benchmark::State& st) {
  const int m = static_cast<int>(st.range(0));
  Eigen::MatrixXd M = Eigen::MatrixXd::Constant(m, m, -0.1) + Eigen::MatrixXd::Identity(m, m) * 2.0;
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(m, 0.5, 1.5);
  for (auto _ : st) benchmark::DoNotOptimize(maximize_quadratic_orthant(M, b));
}
BENCHMARK(BM_MaximizeQuadratic)->DenseRange(2, 8, 3);

void BM_Minimize(benchmark::State& st) {
  const ProblemSpec spec = two_competing(static_cast<int>(st.range(0)));
  const State u0 = initial_guess(spec, 2, InitialStyle::SegregatedBumps);
  for (auto _ : st) benchmark::DoNotOptimize(minimize(spec, SolverConfig{}, u0));
}
BENCHMARK(BM_Minimize)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
