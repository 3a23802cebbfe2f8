#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tensens/regression.hpp"
#include "test_util.hpp"

using namespace tensens;

namespace {

Matrix random_matrix(int N, int P, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix A(N, P);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < P; ++j) A(i, j) = g(rng);
  return A;
}

Vector random_vector(int N, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(N);
  for (int i = 0; i < N; ++i) v(i) = g(rng);
  return v;
}

// Explicit leave-one-out: N separate fits through the normal equations.
double brute_force_loo(const Matrix& A, const Vector& y) {
  const int N = static_cast<int>(A.rows());
  double s = 0;
  for (int k = 0; k < N; ++k) {
    Matrix Ak(N - 1, A.cols());
    Vector yk(N - 1);
    for (int i = 0, r = 0; i < N; ++i) {
      if (i == k) continue;
      Ak.row(r) = A.row(i);
      yk(r++) = y(i);
    }
    const Vector c = (Ak.transpose() * Ak).ldlt().solve(Ak.transpose() * yk);
    const double e = y(k) - A.row(k).dot(c);
    s += e * e;
  }
  return s / N;
}

}  // namespace

TEST(Ols, MatchesNormalEquations) {
  std::mt19937_64 rng(1);
  const Matrix A = random_matrix(30, 6, rng);
  const Vector y = random_vector(30, rng);
  const auto fit = ols_fit(A, y);
  const Vector c = (A.transpose() * A).ldlt().solve(A.transpose() * y);
  EXPECT_LT((fit.coefficients - c).norm(), 1e-12 * c.norm());
  EXPECT_LT((fit.residuals - (y - A * c)).norm(), 1e-12);
  // Residual is orthogonal to the column space.
  EXPECT_LT((A.transpose() * fit.residuals).norm(), 1e-11);
}

TEST(Ols, HatDiagonalAndTraceMatchExplicitFormulas) {
  std::mt19937_64 rng(2);
  const Matrix A = random_matrix(25, 5, rng) * 3.0;
  const Vector y = random_vector(25, rng);
  const auto fit = ols_fit(A, y);
  const Matrix G_inv = (A.transpose() * A).inverse();
  const Matrix H = A * G_inv * A.transpose();
  for (int i = 0; i < 25; ++i) EXPECT_NEAR(fit.hat_diag(i), H(i, i), 1e-12);
  EXPECT_NEAR(fit.hat_diag.sum(), 5.0, 1e-12);
  EXPECT_NEAR(fit.trace_inv_gram, G_inv.trace(), 1e-12 * G_inv.trace());
}

TEST(Ols, ErrorCases) {
  std::mt19937_64 rng(3);
  Matrix A = random_matrix(4, 6, rng);
  EXPECT_TS_ERROR(ols_fit(A, Vector::Zero(4)), ErrorCode::UnderDetermined);
  Matrix B = random_matrix(10, 3, rng);
  B.col(2) = B.col(0) * 2.0;
  EXPECT_TS_ERROR(ols_fit(B, Vector::Ones(10)), ErrorCode::RankDeficient);
  Matrix C = random_matrix(10, 2, rng);
  C(3, 1) = NAN;
  EXPECT_TS_ERROR(ols_fit(C, Vector::Ones(10)), ErrorCode::NonFinite);
}

TEST(LooError, HatMatrixFormulaEqualsExplicitRefits) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> nd(12, 40);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = nd(rng);
    const int P = std::uniform_int_distribution<int>(1, std::min(10, N - 2))(rng);
    const Matrix A = random_matrix(N, P, rng);
    const Vector y = random_vector(N, rng);
    const auto fit = ols_fit(A, y);
    const double fast = loo_error(y, fit.fitted, fit.hat_diag);
    const double slow = brute_force_loo(A, y);
    EXPECT_NEAR(fast, slow, 1e-8 * slow) << trial;
    EXPECT_NEAR(loo_error_rel(A, y), slow / empirical_variance(y), 1e-8 * slow / empirical_variance(y));
  }
}

TEST(LooError, LeverageOneIsReported) {
  Matrix A = Matrix::Zero(4, 2);
  A.col(0).setOnes();
  A(3, 1) = 1.0;  // the last point alone determines the second coefficient
  EXPECT_TS_ERROR(loo_error_rel(A, Vector::LinSpaced(4, 0, 3)), ErrorCode::LeverageOne);
}

TEST(RelativeErrors, MeanPredictorGivesNMinusOneOverN) {
  std::mt19937_64 rng(5);
  const Vector y = random_vector(17, rng);
  const Vector mean = Vector::Constant(17, y.mean());
  // Brute force: (1/N) sum (y - ybar)^2 over the unbiased variance.
  double ss = 0;
  for (int i = 0; i < 17; ++i) ss += (y(i) - y.mean()) * (y(i) - y.mean());
  const double expected = (ss / 17.0) / (ss / 16.0);
  EXPECT_NEAR(empirical_error_rel(y, mean), expected, 1e-14);
  EXPECT_NEAR(expected, 16.0 / 17.0, 1e-14);
  EXPECT_DOUBLE_EQ(empirical_error_rel(y, y), 0.0);
  EXPECT_TS_ERROR(empirical_error_rel(Vector::Ones(5), Vector::Zero(5)), ErrorCode::ZeroVariance);
}

TEST(RelativeErrors, SemiNormAndVariance) {
  const Vector v = (Vector(4) << 1, -1, 1, -1).finished();
  EXPECT_DOUBLE_EQ(semi_norm(v), 1.0);
  EXPECT_NEAR(empirical_variance(v), 4.0 / 3.0, 1e-15);
  EXPECT_TS_ERROR(semi_norm(std::span<const double>{}), ErrorCode::EmptySet);
}

TEST(CorrectedLoo, FactorFormula) {
  EXPECT_NEAR(corrected_loo_factor(100, 10, 0.05), (1 + 0.05) / (1 - 0.1), 1e-15);
  EXPECT_NEAR(corrected_loo_factor(100, 10, 0.05, TraceScaling::ScaledByN), (1 + 5.0) / (1 - 0.1), 1e-13);
  EXPECT_TS_ERROR(corrected_loo_factor(10, 10, 0.1), ErrorCode::UnderDetermined);
  std::mt19937_64 rng(6);
  const Matrix A = random_matrix(50, 4, rng);
  const double tr = (A.transpose() * A).inverse().trace();
  EXPECT_NEAR(corrected_loo(0.2, 50, 4, A), 0.2 * (1 + tr) / (1 - 4.0 / 50), 1e-12);
}

TEST(KFold, PartitionCoversEveryIndexOnceWithBalancedFolds) {
  const auto folds = kfold_partition(50, 3, 7);
  ASSERT_EQ(folds.size(), 3u);
  std::set<std::size_t> all;
  for (const auto& f : folds) {
    EXPECT_GE(f.size(), 16u);
    EXPECT_LE(f.size(), 17u);
    all.insert(f.begin(), f.end());
  }
  EXPECT_EQ(all.size(), 50u);
  EXPECT_EQ(folds, kfold_partition(50, 3, 7));
  EXPECT_NE(folds, kfold_partition(50, 3, 8));
}

TEST(KFold, CvOfLinearFitMatchesManualComputation) {
  const auto in = InputModel::iid(2, Marginal::uniform(0, 1));
  auto ed = generate_design(DesignKind::Random, in, 30, 3);
  std::mt19937_64 rng(9);
  Vector y(30);
  for (int i = 0; i < 30; ++i) y(i) = 1 + 2 * ed.standard(i, 0) - ed.standard(i, 1) * ed.standard(i, 1);
  ed.responses = y;
  auto design = [](const PointMatrix& u) {
    Matrix A(u.rows(), 3);
    A.col(0).setOnes();
    A.col(1) = u.col(0);
    A.col(2) = u.col(1);
    return A;
  };
  const FoldFitter fit = [&](const ExperimentalDesign& train, const ExperimentalDesign& test) -> Vector {
    return design(test.standard) * ols_solve(design(train.standard), train.y());
  };
  const double cv = kfold_cv(fit, ed, 3, 11);
  double mse = 0;
  for (const auto& f : kfold_partition(30, 3, 11)) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < 30; ++i)
      if (std::find(f.begin(), f.end(), i) == f.end()) train.push_back(i);
    const auto tr = subset(ed, train), te = subset(ed, f);
    mse += (te.y() - fit(tr, te)).squaredNorm() / static_cast<double>(f.size());
  }
  EXPECT_NEAR(cv, mse / 3 / empirical_variance(y), 1e-12);
}

TEST(KFold, FailingFitterBecomesFitFailure) {
  const auto in = InputModel::iid(1, Marginal::uniform(0, 1));
  auto ed = generate_design(DesignKind::Sobol, in, 9, 0);
  ed.responses = ed.standard.col(0);
  const FoldFitter bad = [](const ExperimentalDesign&, const ExperimentalDesign&) -> Vector {
    fail(ErrorCode::RankDeficient, "boom", "inner");
  };
  EXPECT_TS_ERROR(kfold_cv(bad, ed, 3, 0), ErrorCode::FitFailure);
  const MultiFoldFitter nan_fit = [](const ExperimentalDesign&, const ExperimentalDesign& te) -> Matrix {
    Matrix m(te.size(), 2);
    m.col(0).setZero();
    m.col(1).setConstant(NAN);
    return m;
  };
  const auto errs = kfold_cv_multi(nan_fit, ed, 3, 0);
  EXPECT_TRUE(std::isfinite(errs[0]));
  EXPECT_TRUE(std::isinf(errs[1]));
}

TEST(Lar, OrthogonalColumnsEnterByCorrelation) {
  // Orthogonal centered columns: LAR order equals the order of |A^T y|.
  Matrix A(8, 3);
  for (int i = 0; i < 8; ++i) {
    A(i, 0) = i < 4 ? 1 : -1;
    A(i, 1) = (i / 2) % 2 ? -1 : 1;
    A(i, 2) = i % 2 ? -1 : 1;
  }
  const Vector y = A.col(0) * 0.5 + A.col(1) * 3.0 - A.col(2) * 1.5;
  const auto res = lar(A, y, 3);
  ASSERT_EQ(res.order.size(), 3u);
  EXPECT_EQ(res.order, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Lar, RecoversSparseSupportFirst) {
  std::mt19937_64 rng(12);
  const Matrix A = random_matrix(60, 20, rng);
  const Vector y = 4.0 * A.col(3) - 2.5 * A.col(11) + 1.0 * A.col(17);
  const auto res = lar(A, y, 20);
  ASSERT_GE(res.order.size(), 3u);
  std::set<std::size_t> first3(res.order.begin(), res.order.begin() + 3);
  EXPECT_EQ(first3, (std::set<std::size_t>{3, 11, 17}));
  // Exact sparse fit: the path stops once the residual correlation vanishes.
  EXPECT_EQ(res.order.size(), 3u);
}

TEST(Lar, PathIsNestedAndObserverCanStop) {
  std::mt19937_64 rng(13);
  const Matrix A = random_matrix(40, 8, rng);
  const Vector y = random_vector(40, rng);
  const auto path = lar_path(A, y, 6);
  ASSERT_EQ(path.size(), 6u);
  for (std::size_t k = 0; k < path.size(); ++k) {
    EXPECT_EQ(path[k].size(), k + 1);
    if (k) {
      EXPECT_TRUE(std::equal(path[k - 1].begin(), path[k - 1].end(), path[k].begin()));
    }
  }
  std::size_t seen = 0;
  const auto res = lar(A, y, 8, [&](std::size_t) { return ++seen < 2; });
  EXPECT_EQ(res.order.size(), 2u);
}

TEST(IncrementalLeastSquares, MatchesBatchFitAtEveryStep) {
  std::mt19937_64 rng(14);
  const Matrix A = random_matrix(35, 9, rng);
  const Vector y = random_vector(35, rng);
  IncrementalLeastSquares ils(y);
  for (int k = 1; k <= 9; ++k) {
    ASSERT_TRUE(ils.add_column(A.col(k - 1)));
    const auto fit = ols_fit(A.leftCols(k), y);
    EXPECT_LT((ils.fitted() - fit.fitted).norm(), 1e-10);
    EXPECT_LT((ils.hat_diag() - fit.hat_diag).norm(), 1e-10);
    EXPECT_NEAR(ils.trace_inv_gram(), fit.trace_inv_gram, 1e-10 * fit.trace_inv_gram);
    EXPECT_LT((ils.coefficients() - fit.coefficients).norm(), 1e-9 * (1 + fit.coefficients.norm()));
  }
  EXPECT_FALSE(ils.add_column(A.col(2) - 3 * A.col(5)));
  EXPECT_EQ(ils.size(), 9u);
}
