#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "quadrature.hpp"
#include "tensens/pce.hpp"
#include "test_util.hpp"

using namespace tensens;

namespace {

InputModel mixed_input() {
  return InputModel({{"a", Marginal::uniform(-1, 1)}, {"b", Marginal::gaussian(0, 1)}, {"c", Marginal::uniform(0, 2)}});
}

PCEModel random_pce(std::mt19937_64& rng, int p) {
  const auto input = mixed_input();
  PCEModel m{input, BasisSpec::for_input(input, p), truncation_set(3, p, 1.0), {}, p, 1.0};
  std::normal_distribution<double> g;
  m.coefficients.resize(static_cast<Eigen::Index>(m.terms.size()));
  for (auto& c : m.coefficients) c = g(rng);
  return m;
}

double eval(const PCEModel& m, std::span<const double> u) { return pce_eval_standard(m, u); }

}  // namespace

TEST(PceMoments, MatchQuadratureOracle) {
  std::mt19937_64 rng(1);
  const auto m = random_pce(rng, 3);
  auto f = [&](std::span<const double> u) { return eval(m, u); };
  const double mean = tensor_integrate(m.spec.families, 8, f);
  const double m2 = tensor_integrate(m.spec.families, 8, [&](std::span<const double> u) { return f(u) * f(u); });
  EXPECT_NEAR(pce_mean(m), mean, 1e-11);
  EXPECT_NEAR(pce_variance(m), m2 - mean * mean, 1e-10);
}

TEST(PceSobol, FirstAndTotalMatchConditionalVarianceOracle) {
  std::mt19937_64 rng(2);
  const auto m = random_pce(rng, 3);
  auto f = [&](std::span<const double> u) { return eval(m, u); };
  const double var = pce_variance(m);
  const std::vector<std::vector<std::size_t>> subsets{{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 2}};
  for (const auto& u : subsets) {
    EXPECT_NEAR(pce_sobol_first(m, u), conditional_variance(m.spec.families, 6, u, f) / var, 1e-10);
    std::vector<std::size_t> comp;
    for (std::size_t i = 0; i < 3; ++i)
      if (std::find(u.begin(), u.end(), i) == u.end()) comp.push_back(i);
    EXPECT_NEAR(pce_sobol_total(m, u), 1.0 - conditional_variance(m.spec.families, 6, comp, f) / var, 1e-10);
  }
}

TEST(PceSobol, IndexAlgebra) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_pce(rng, 4);
    double sum = 0;
    for (unsigned mask = 1; mask < 8; ++mask) {
      std::vector<std::size_t> u, comp;
      for (std::size_t i = 0; i < 3; ++i) ((mask >> i) & 1 ? u : comp).push_back(i);
      sum += pce_sobol_interaction(m, u);
      if (!comp.empty()) {
        EXPECT_NEAR(pce_sobol_total(m, u), 1 - pce_sobol_first(m, comp), 1e-12);
      }
      double mobius = 0;
      for (unsigned sub = mask; sub; sub = (sub - 1) & mask) {
        std::vector<std::size_t> v;
        for (std::size_t i = 0; i < 3; ++i)
          if ((sub >> i) & 1) v.push_back(i);
        mobius += ((std::popcount(mask) - std::popcount(sub)) % 2 ? -1 : 1) * pce_sobol_first(m, v);
      }
      EXPECT_NEAR(pce_sobol_interaction(m, u), mobius, 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PceSobol, ErrorCases) {
  const auto input = mixed_input();
  PCEModel m{input, BasisSpec::for_input(input, 1), {MultiIndex{0, 0, 0}}, Vector::Constant(1, 2.0), 1, 1.0};
  const std::vector<std::size_t> u{0};
  EXPECT_TS_ERROR(pce_sobol_first(m, u), ErrorCode::ZeroVariance);
  const std::vector<std::size_t> bad{5};
  EXPECT_TS_ERROR(pce_sobol_total(m, bad), ErrorCode::InvalidParameter);
}

TEST(PcePredict, AgreesWithPointwiseEvaluation) {
  std::mt19937_64 rng(4);
  const auto m = random_pce(rng, 3);
  const auto ed = generate_design(DesignKind::Random, m.input, 25, 5);
  const Vector y = pce_predict(m, ed.standard);
  for (int i = 0; i < 25; ++i) {
    EXPECT_NEAR(y(i), eval(m, row_span(ed.standard, i)), 1e-12);
    EXPECT_NEAR(y(i), pce_eval(m, row_span(ed.physical, i)), 1e-10);
  }
}

TEST(HybridLar, SelectsTheTrueSparseSupport) {
  const auto input = mixed_input();
  const auto spec = BasisSpec::for_input(input, 4);
  const auto basis = truncation_set(3, 4, 1.0);
  const auto ed = generate_design(DesignKind::Lhs, input, 60, 7);
  const Matrix Psi = basis_matrix(ed.standard, spec, basis);
  const Vector y = 2.0 * Psi.col(0) + 1.5 * Psi.col(3) - 0.7 * Psi.col(12) + 0.2 * Psi.col(20);
  const auto fit = hybrid_lar(Psi, y);
  EXPECT_EQ(fit.selected.front(), 0u);
  const std::set<std::size_t> sel(fit.selected.begin(), fit.selected.end());
  EXPECT_EQ(sel, (std::set<std::size_t>{0, 3, 12, 20}));
  EXPECT_LT(fit.loo_corrected, 1e-20);
}

TEST(BuildPce, RecoversAnInBasisPolynomialExactly) {
  const auto input = mixed_input();
  auto ed = generate_design(DesignKind::Sobol, input, 80, 0);
  Vector y(80);
  for (int i = 0; i < 80; ++i) {
    const double a = ed.standard(i, 0), b = ed.standard(i, 1), c = ed.standard(i, 2);
    y(i) = 1.0 + 0.5 * a + a * b + 0.3 * (b * b - 1) + 0.1 * c * c * c;
  }
  ed.responses = y;
  const auto m = build_pce(ed, input);
  EXPECT_LE(m.p_t, 4);
  EXPECT_LT(*m.errors.empirical_rel, 1e-20);
  EXPECT_NEAR(pce_mean(m), 1.0 + 0.1 * 0.0, 1e-10);
  const auto val = generate_design(DesignKind::Random, input, 200, 9);
  for (int i = 0; i < 200; ++i) {
    const double a = val.standard(i, 0), b = val.standard(i, 1), c = val.standard(i, 2);
    EXPECT_NEAR(pce_eval_standard(m, row_span(val.standard, i)),
                1.0 + 0.5 * a + a * b + 0.3 * (b * b - 1) + 0.1 * c * c * c, 1e-9);
  }
  EXPECT_FALSE(m.trace.empty());
}

TEST(BuildPce, ConstantResponseGivesMeanOnlyModel) {
  const auto input = mixed_input();
  auto ed = generate_design(DesignKind::Sobol, input, 20, 0);
  ed.responses = Vector::Constant(20, 3.5);
  const auto m = build_pce(ed, input);
  ASSERT_EQ(m.terms.size(), 1u);
  EXPECT_DOUBLE_EQ(pce_mean(m), 3.5);
  EXPECT_DOUBLE_EQ(pce_variance(m), 0.0);
}

TEST(BuildPce, SelectionIsDeterministic) {
  const auto input = mixed_input();
  auto ed = generate_design(DesignKind::Lhs, input, 50, 3);
  Vector y(50);
  for (int i = 0; i < 50; ++i) y(i) = std::exp(0.3 * ed.standard(i, 1)) * std::sin(ed.standard(i, 0)) + ed.standard(i, 2);
  ed.responses = y;
  const auto a = build_pce(ed, input), b = build_pce(ed, input);
  EXPECT_EQ(a.terms, b.terms);
  EXPECT_EQ(a.coefficients, b.coefficients);
  // The reported error is the minimum over the explored candidates.
  for (const auto& c : a.trace) EXPECT_GE(c.loo_corrected, *a.errors.loo_corrected_rel * (1 - 1e-9));
}
