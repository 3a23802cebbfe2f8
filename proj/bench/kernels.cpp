// Serial reference vs OpenMP version of each parallel kernel.
#include <benchmark/benchmark.h>

#include <random>

#include "tensens/benchmarks.hpp"
#include "tensens/lra.hpp"
#include "tensens/ortho_poly.hpp"
#include "tensens/sampling.hpp"
#include "tensens/sobol.hpp"

namespace {

using namespace tensens;

struct BasisFixture {
  InputModel input = InputModel::iid(10, Marginal::uniform(-1, 1));
  BasisSpec spec = BasisSpec::for_input(input, 6);
  std::vector<MultiIndex> basis = truncation_set(10, 6, 0.75);
  PointMatrix points = generate_design(DesignKind::Sobol, input, 2000, 0).standard;
};

const BasisFixture& basis_fixture() {
  static const BasisFixture f;
  return f;
}

void BM_BasisMatrix(benchmark::State& state) {
  const auto& f = basis_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(basis_matrix(f.points, f.spec, f.basis));
}

void BM_BasisMatrixSerial(benchmark::State& state) {
  const auto& f = basis_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(basis_matrix_serial(f.points, f.spec, f.basis));
}

struct LraFixture {
  LRAModel model;
  PointMatrix points;
  LraFixture() : model{InputModel::iid(8, Marginal::gaussian(0, 1)), {}, 8} {
    model.spec = BasisSpec::for_input(model.input, 8);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    model.b.resize(5);
    for (int l = 0; l < 5; ++l) {
      Matrix z(8, 9);
      for (auto& v : z.reshaped()) v = g(rng);
      model.z.push_back(z);
      model.b(l) = g(rng);
    }
    points = generate_design(DesignKind::Random, model.input, 50000, 4).standard;
  }
};

const LraFixture& lra_fixture() {
  static const LraFixture f;
  return f;
}

void BM_LraPredict(benchmark::State& state) {
  const auto& f = lra_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(lra_predict(f.model, f.points));
}

void BM_LraPredictSerial(benchmark::State& state) {
  const auto& f = lra_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(lra_predict_serial(f.model, f.points));
}

struct TrussFixture {
  PointMatrix points = generate_design(DesignKind::Random, truss_input(), 5000, 5).physical;
  Evaluator f = [](std::span<const double> x) { return truss_deflection(x); };
};

const TrussFixture& truss_fixture() {
  static const TrussFixture f;
  return f;
}

void BM_EvaluateBatch(benchmark::State& state) {
  const auto& f = truss_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(f.f, f.points));
}

void BM_EvaluateBatchSerial(benchmark::State& state) {
  const auto& f = truss_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch_serial(f.f, f.points));
}

}  // namespace

BENCHMARK(BM_BasisMatrix)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BasisMatrixSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LraPredict)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LraPredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateBatch)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateBatchSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
