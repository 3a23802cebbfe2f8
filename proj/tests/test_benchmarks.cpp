#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "quadrature.hpp"
#include "tensens/benchmarks.hpp"
#include "tensens/sobol.hpp"
#include "test_util.hpp"

using namespace tensens;

namespace {

std::vector<double> truss_mean_point() {
  const auto in = truss_input();
  std::vector<double> x;
  for (std::size_t i = 0; i < in.dim(); ++i) x.push_back(in.marginal(i).mean());
  return x;
}

// Unit-load method on the statically determinate truss: bar forces from the
// 26 joint equilibrium equations (23 bars + 3 reactions), then
// delta = sum N n L / (E A).
double truss_unit_load(std::span<const double> x) {
  std::array<std::array<double, 2>, 13> nodes;
  for (int k = 0; k < 7; ++k) nodes[k] = {4.0 * k, 0.0};
  for (int k = 0; k < 6; ++k) nodes[7 + k] = {2.0 + 4.0 * k, 2.0};
  std::vector<std::array<int, 3>> bars;
  for (int k = 0; k < 6; ++k) bars.push_back({k, k + 1, 1});
  for (int k = 0; k < 5; ++k) bars.push_back({7 + k, 8 + k, 1});
  for (int k = 0; k < 6; ++k) {
    bars.push_back({k, 7 + k, 0});
    bars.push_back({7 + k, k + 1, 0});
  }
  Matrix E = Matrix::Zero(26, 26);
  std::vector<double> len;
  for (std::size_t b = 0; b < bars.size(); ++b) {
    const auto [i, j, chord] = bars[b];
    const double dx = nodes[j][0] - nodes[i][0], dy = nodes[j][1] - nodes[i][1];
    const double L = std::hypot(dx, dy);
    len.push_back(L);
    // Tension pulls node i toward j and node j toward i.
    E(2 * i, b) += dx / L;
    E(2 * i + 1, b) += dy / L;
    E(2 * j, b) -= dx / L;
    E(2 * j + 1, b) -= dy / L;
  }
  E(0, 23) = 1;   // pin, horizontal
  E(1, 24) = 1;   // pin, vertical
  E(13, 25) = 1;  // roller at node 6, vertical
  auto forces = [&](const Vector& load) { return Vector(E.partialPivLu().solve(-load)); };
  Vector P = Vector::Zero(26), unit = Vector::Zero(26);
  for (int k = 0; k < 6; ++k) P(2 * (7 + k) + 1) = -x[4 + k];
  unit(7) = -1.0;
  const Vector N = forces(P), n = forces(unit);
  double delta = 0;
  for (std::size_t b = 0; b < bars.size(); ++b) {
    const double EA = bars[b][2] ? x[0] * x[2] : x[1] * x[3];
    delta += N(b) * n(b) * len[b] / EA;
  }
  return delta;
}

}  // namespace

TEST(SobolFunction, ValuesAndSupport) {
  const std::vector<double> c{0.0, 1.0};
  const std::vector<double> x{0.25, 0.75};
  EXPECT_NEAR(sobol_function(x, c), (1.0 / 1.0) * (2.0 / 2.0), 1e-15);
  const std::vector<double> mid{0.5, 0.5};
  EXPECT_DOUBLE_EQ(sobol_function(mid, c), 0.0);
  const std::vector<double> out{1.2, 0.5};
  EXPECT_TS_ERROR(sobol_function(out, c), ErrorCode::OutOfSupport);
}

TEST(SobolFunction, PartialVarianceMatchesQuadrature) {
  for (double c : {0.0, 1.0, 5.0, 500.0}) {
    // |4t - 2| has a kink at 1/2: integrate each half separately.
    const auto q = gauss_legendre(20);
    double m2 = 0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      for (double half : {0.25, 0.75}) {
        const double t = half + 0.25 * q.nodes[i];
        const double g = (std::abs(4 * t - 2) + c) / (1 + c);
        m2 += 0.5 * q.weights[i] * g * g;
      }
    }
    EXPECT_NEAR(sobol_g_partial_variance(c), m2 - 1.0, 1e-14) << c;
  }
}

TEST(SobolFunction, InteractionsSumToOne) {
  const auto all = sobol_g_constants();
  for (std::size_t M = 1; M <= 6; ++M) {
    const std::vector<double> c(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(M));
    double sum = 0;
    for (unsigned mask = 1; mask < (1u << M); ++mask) {
      std::vector<std::size_t> u;
      for (std::size_t i = 0; i < M; ++i)
        if ((mask >> i) & 1) u.push_back(i);
      sum += sobol_g_interaction(c, u);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12) << M;
  }
}

TEST(SobolFunction, TwentyDimensionalIndices) {
  const auto c = sobol_g_constants();
  ASSERT_EQ(c.size(), 20u);
  const double S[] = {0.6037, 0.2683, 0.0671, 0.0200, 0.0055};
  const double T[] = {0.6342, 0.2944, 0.0756, 0.0226, 0.0062};
  for (std::size_t i = 0; i < 5; ++i) {
    const std::vector<std::size_t> u{i};
    EXPECT_NEAR(sobol_g_first(c, u), S[i], 5e-5) << i;
    EXPECT_NEAR(sobol_g_total(c, u), T[i], 5e-5) << i;
  }
  EXPECT_NEAR(std::sqrt(sobol_g_variance(c)), 0.3715, 5e-5);
}

TEST(LognormalProduct, IndicesMatchDirectFormula) {
  const std::vector<double> v{0.04, 0.09, 0.01};
  const double S = 0.14;
  const auto first = lognormal_product_first(v);
  const auto total = lognormal_product_total(v);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(first[i], std::expm1(v[i]) / std::expm1(S), 1e-14);
    EXPECT_NEAR(total[i], 1 - std::expm1(S - v[i]) / std::expm1(S), 1e-14);
  }
}

TEST(Beam, ExactMomentsMatchReportedValues) {
  const auto m = beam_exact_moments(beam_input());
  EXPECT_NEAR(m.mean * 1e3, 2.677, 5e-4);
  EXPECT_NEAR(m.std * 1e3, 0.8088, 5e-5);
}

TEST(Beam, DeterministicLimitAndMonteCarlo) {
  const InputModel tight({{"b", Marginal::lognormal(0.15, 1e-7)},
                          {"h", Marginal::lognormal(0.3, 1e-7)},
                          {"L", Marginal::lognormal(5, 1e-7)},
                          {"E", Marginal::lognormal(3e10, 1e-7)},
                          {"P", Marginal::lognormal(1e4, 1e-7)}});
  const auto m = beam_exact_moments(tight);
  EXPECT_NEAR(m.mean, beam_deflection(0.15, 0.3, 5, 3e10, 1e4), 1e-9 * m.mean);
  EXPECT_LT(m.std, 1e-5 * m.mean);
  EXPECT_TS_ERROR(beam_deflection(0.15, -0.3, 5, 3e10, 1e4), ErrorCode::InvalidParameter);

  const auto bm = make_benchmark("beam");
  const auto mc = mc_moments(batched(bm.evaluate), bm.input, 1'000'000, 17);
  const auto exact = beam_exact_moments(beam_input());
  EXPECT_NEAR(mc.mean, exact.mean * 1e3, 3 * mc.mean_se);
  EXPECT_NEAR(mc.variance, exact.std * exact.std * 1e6, 3 * mc.variance_se);
}

TEST(Truss, MatchesUnitLoadMethod) {
  const auto in = truss_input();
  const auto ed = generate_design(DesignKind::Random, in, 20, 3);
  for (int i = 0; i < 20; ++i) {
    const auto x = row_span(ed.physical, i);
    EXPECT_NEAR(truss_deflection(x), truss_unit_load(x), 1e-10 * truss_unit_load(x));
  }
}

TEST(Truss, MeanParameterDeflection) {
  const auto x = truss_mean_point();
  EXPECT_NEAR(truss_deflection(x) * 100, 7.941, 0.02 * 7.941);
}

TEST(Truss, LinearInLoadsAndInverseInStiffness) {
  auto x = truss_mean_point();
  const double base = truss_deflection(x);
  auto y = x;
  for (int k = 4; k < 10; ++k) y[k] *= 2.5;
  EXPECT_NEAR(truss_deflection(y), 2.5 * base, 1e-12 * base);
  auto z = x;
  for (int k = 0; k < 4; ++k) z[k] *= 3.0;
  EXPECT_NEAR(truss_deflection(z), base / 9.0, 1e-12 * base);
  // Mirror symmetry: reversing the loads leaves the midspan deflection unchanged.
  auto w = x;
  for (int k = 0; k < 6; ++k) w[4 + k] = 1e4 * (k + 1);
  auto wr = w;
  std::reverse(wr.begin() + 4, wr.end());
  EXPECT_NEAR(truss_deflection(w), truss_deflection(wr), 1e-12 * truss_deflection(w));
  x[0] = 0.0;
  EXPECT_TS_ERROR(truss_deflection(x), ErrorCode::SingularStiffness);
}

TEST(Truss, ChordAreaAndModulusEnterOnlyThroughTheirProduct) {
  const auto x = truss_mean_point();
  for (double k : {0.7, 1.3, 2.0}) {
    auto y = x;
    y[0] *= k;
    y[2] /= k;
    EXPECT_NEAR(truss_deflection(y), truss_deflection(x), 1e-12 * truss_deflection(x));
  }
  const auto in = truss_input();
  EXPECT_DOUBLE_EQ(in.marginal(0).std_dev() / in.marginal(0).mean(), in.marginal(2).std_dev() / in.marginal(2).mean());
}

TEST(Truss, PositiveDefiniteOverASixSigmaBox) {
  const auto in = truss_input();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(10);
    for (auto& v : s) v = u(rng);
    const auto x = in.from_standard(s);
    const double d = truss_deflection(x);
    EXPECT_TRUE(std::isfinite(d));
    EXPECT_GT(d, 0.0);
  }
}

TEST(Eole, TraceAndTruncation) {
  const auto grid = square_grid(11, 11, -0.5, 0.5, -0.5, 0.5);
  ASSERT_EQ(grid.rows(), 121);
  EXPECT_NEAR(grid(1, 0) - grid(0, 0) + grid(11, 1) - grid(0, 1), 0.2, 1e-15);
  const auto basis = eole_basis(grid, 0.2, 0.99);
  EXPECT_NEAR(basis.eigenvalues.sum(), 121.0, 1e-9);
  EXPECT_EQ(basis.retained, 53u);
  EXPECT_GE(basis.eigenvalues.minCoeff(), 0.0);
  for (Eigen::Index i = 1; i < basis.eigenvalues.size(); ++i)
    EXPECT_LE(basis.eigenvalues(i), basis.eigenvalues(i - 1));
  const auto wide = eole_basis(grid, 1e3, 0.99);
  EXPECT_EQ(wide.retained, 1u);
  EXPECT_NEAR(wide.eigenvalues(0), 121.0, 1e-3);
  EXPECT_TS_ERROR(eole_basis(grid, 0.2, 1.0), ErrorCode::InvalidParameter);
}

TEST(Eole, FieldStatisticsAtAGridNode) {
  const auto grid = square_grid(11, 11, -0.5, 0.5, -0.5, 0.5);
  const auto basis = eole_basis(grid, 0.2, 0.99);
  const std::vector<double> z{grid(60, 0), grid(60, 1)};
  const std::vector<double> zero(basis.retained, 0.0);
  EXPECT_DOUBLE_EQ(eole_field_eval(basis, zero, z), 0.0);
  const auto kf = lognormal_field(1.0, 0.3);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<double> xi(basis.retained);
  double s = 0, s2 = 0, k = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    for (auto& v : xi) v = g(rng);
    const double val = eole_field_eval(basis, xi, z);
    s += val;
    s2 += val * val;
    k += std::exp(kf.a + kf.b * val);
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_GE(var, 0.98);
  EXPECT_LE(var, 1.01);
  EXPECT_NEAR(k / n, 1.0, 0.01);
  // Exact pointwise variance of the truncated field.
  const double exact = eole_coefficients(basis, z).squaredNorm();
  EXPECT_GE(exact, 0.99);
  EXPECT_LE(exact, 1.0 + 1e-9);
}

TEST(Registry, NamesAndErrors) {
  EXPECT_EQ(benchmark_names(), (std::vector<std::string>{"sobol-g", "beam", "truss", "eole-field"}));
  try {
    make_benchmark("ishigami");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_EQ(e.stage(), "model.benchmark");
  }
  const auto eole = make_benchmark("eole-field");
  EXPECT_EQ(eole.input.dim(), 53u);
  ASSERT_TRUE(eole.exact.has_value());
  EXPECT_NEAR(eole.exact->mean, 1.0, 0.01);
  EXPECT_FALSE(make_benchmark("truss").exact.has_value());
  const auto beam = make_benchmark("beam");
  std::vector<double> x{0.15, 0.3, 5, 3e10, 1e4};
  EXPECT_NEAR(beam.evaluate(x), 1e3 * beam_deflection(0.15, 0.3, 5, 3e10, 1e4), 1e-12);
}

TEST(ExternalModel, RoundTripsThroughAShellCommand) {
  PointMatrix x(3, 2);
  x << 1, 2, 3, 4, 0.5, -1;
  const Vector y = evaluate_external("awk -F, 'NR>1 { print $1 * $2 }'", x);
  EXPECT_DOUBLE_EQ(y(0), 2.0);
  EXPECT_DOUBLE_EQ(y(1), 12.0);
  EXPECT_DOUBLE_EQ(y(2), -0.5);
  EXPECT_TS_ERROR(evaluate_external("exit 3", x), ErrorCode::ModelFailure);
  EXPECT_TS_ERROR(evaluate_external("awk 'NR>1 { print \"abc\" }'", x), ErrorCode::ModelFailure);
  EXPECT_TS_ERROR(evaluate_external("awk 'NR>2 { print 1 }'", x), ErrorCode::ModelFailure);
  EXPECT_TS_ERROR(evaluate_external("awk 'NR>1 { print \"nan\" }'", x), ErrorCode::ModelFailure);
}
