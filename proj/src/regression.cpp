#include "tensens/regression.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr double kLeverageTol = 1e-12;

double checked_variance(const Vector& y, const char* stage) {
  const double v = empirical_variance(y);
  if (!(v > 0.0)) fail(ErrorCode::ZeroVariance, "response set has zero empirical variance", stage);
  return v;
}

}  // namespace

double semi_norm(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptySet, "semi-norm over an empty point set", "regression.semi_norm");
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s / static_cast<double>(values.size()));
}

double empirical_variance(const Vector& y) {
  if (y.size() < 2) fail(ErrorCode::EmptySet, "variance needs at least two values", "regression.variance");
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

OlsFit ols_fit(const Matrix& A, const Vector& y) {
  const auto N = A.rows(), P = A.cols();
  if (N < 1 || P < 1) fail(ErrorCode::EmptySet, "empty design matrix", "regression.ols");
  if (y.size() != N) fail(ErrorCode::InvalidParameter, "response length does not match design rows", "regression.ols");
  if (N < P)
    fail(ErrorCode::UnderDetermined,
         "least squares needs N >= P (N=" + std::to_string(N) + ", P=" + std::to_string(P) + ")", "regression.ols");
  if (!A.allFinite() || !y.allFinite()) fail(ErrorCode::NonFinite, "non-finite design or response", "regression.ols");

  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const Matrix R = qr.matrixR().topLeftCorner(P, P).template triangularView<Eigen::Upper>();
  const double r_max = std::abs(R(0, 0));
  const double r_min = std::abs(R(P - 1, P - 1));
  const double cond = r_min > 0.0 ? r_max / r_min : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition))
    fail(ErrorCode::RankDeficient, "design matrix condition estimate " + std::to_string(cond) + " exceeds 1e12",
         "regression.ols");

  OlsFit fit;
  fit.condition_estimate = cond;
  fit.coefficients = qr.solve(y);
  fit.fitted = A * fit.coefficients;
  fit.residuals = y - fit.fitted;
  const Matrix Q = qr.householderQ() * Matrix::Identity(N, P);
  fit.hat_diag = Q.rowwise().squaredNorm();
  const Matrix R_inv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(P, P));
  fit.trace_inv_gram = R_inv.squaredNorm();
  return fit;
}

Vector ols_solve(const Matrix& A, const Vector& y) { return ols_fit(A, y).coefficients; }

double empirical_error_rel(const Vector& y, const Vector& y_hat) {
  const double var = checked_variance(y, "regression.empirical_error");
  return (y - y_hat).squaredNorm() / static_cast<double>(y.size()) / var;
}

double generalization_error_rel(const Vector& y_val, const Vector& y_hat) {
  if (y_val.size() != y_hat.size())
    fail(ErrorCode::InvalidParameter, "validation and prediction lengths differ", "regression.generalization_error");
  const double var = checked_variance(y_val, "regression.generalization_error");
  return (y_val - y_hat).squaredNorm() / static_cast<double>(y_val.size()) / var;
}

double loo_error(const Vector& y, const Vector& y_hat, const Vector& hat_diag) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double h = hat_diag(i);
    if (h >= 1.0 - kLeverageTol)
      fail(ErrorCode::LeverageOne, "leverage of point " + std::to_string(i) + " is one (interpolation)",
           "regression.loo_error");
    const double r = (y(i) - y_hat(i)) / (1.0 - h);
    s += r * r;
  }
  return s / static_cast<double>(y.size());
}

double loo_error_rel(const Matrix& A, const Vector& y) {
  const auto fit = ols_fit(A, y);
  return loo_error(y, fit.fitted, fit.hat_diag) / checked_variance(y, "regression.loo_error");
}

double corrected_loo_factor(std::size_t N, std::size_t P, double trace_inv_gram, TraceScaling scaling) {
  if (N <= P)
    fail(ErrorCode::UnderDetermined, "corrected LOO needs N > P", "regression.corrected_loo");
  const double trace = scaling == TraceScaling::Unscaled ? trace_inv_gram : trace_inv_gram * static_cast<double>(N);
  return (1.0 + trace) / (1.0 - static_cast<double>(P) / static_cast<double>(N));
}

double corrected_loo(double err_loo_rel, std::size_t N, std::size_t P, const Matrix& A, TraceScaling scaling) {
  if (N <= P)
    fail(ErrorCode::UnderDetermined, "corrected LOO needs N > P", "regression.corrected_loo");
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const auto p = A.cols();
  const Matrix R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const double trace = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p)).squaredNorm();
  return err_loo_rel * corrected_loo_factor(N, P, trace, scaling);
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t N, std::size_t k, std::uint64_t seed) {
  if (k < 2 || N < k)
    fail(ErrorCode::InvalidParameter, "k-fold CV needs N >= k >= 2", "regression.kfold");
  std::vector<std::size_t> perm(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < N; ++i) folds[i % k].push_back(perm[i]);
  return folds;
}

std::vector<double> kfold_cv_multi(const MultiFoldFitter& fit, const ExperimentalDesign& ed, std::size_t k,
                                   std::uint64_t seed) {
  const std::size_t N = ed.size();
  const auto folds = kfold_partition(N, k, seed);
  const double var = checked_variance(ed.y(), "regression.kfold_cv");

  std::vector<std::vector<double>> fold_mse(k);
  std::vector<std::exception_ptr> errors(k);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(k); ++f) {
    try {
      std::vector<std::size_t> train;
      train.reserve(N);
      for (std::size_t g = 0; g < k; ++g) {
        if (g != static_cast<std::size_t>(f)) train.insert(train.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train.begin(), train.end());
      const auto train_ed = subset(ed, train);
      const auto test_ed = subset(ed, folds[f]);
      const Matrix pred = fit(train_ed, test_ed);
      std::vector<double> mse(static_cast<std::size_t>(pred.cols()));
      for (Eigen::Index c = 0; c < pred.cols(); ++c) {
        mse[c] = pred.col(c).allFinite()
                     ? (test_ed.y() - pred.col(c)).squaredNorm() / static_cast<double>(test_ed.size())
                     : std::numeric_limits<double>::infinity();
      }
      fold_mse[f] = std::move(mse);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const Error& e) {
      fail(ErrorCode::FitFailure, "fold " + std::to_string(f) + ": " + e.what(), "regression.kfold_cv");
    }
  }
  const std::size_t n_cand = fold_mse.front().size();
  std::vector<double> cv(n_cand, 0.0);
  for (std::size_t c = 0; c < n_cand; ++c) {
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_mse[f].size() != n_cand)
        fail(ErrorCode::FitFailure, "fold fitters returned different candidate counts", "regression.kfold_cv");
      cv[c] += fold_mse[f][c];
    }
    cv[c] = cv[c] / static_cast<double>(k) / var;
  }
  return cv;
}

double kfold_cv(const FoldFitter& fit, const ExperimentalDesign& ed, std::size_t k, std::uint64_t seed) {
  const auto cv = kfold_cv_multi(
      [&](const ExperimentalDesign& train, const ExperimentalDesign& test) -> Matrix { return fit(train, test); }, ed,
      k, seed);
  return cv.front();
}

LarResult lar(const Eigen::Ref<const Matrix>& A, const Vector& y, std::size_t max_steps, const LarObserver& observer) {
  const auto N = A.rows(), P = A.cols();
  if (y.size() != N) fail(ErrorCode::InvalidParameter, "response length does not match design rows", "regression.lar");
  LarResult result;
  if (max_steps == 0 || N < 2) return result;

  // Standardize columns; constant columns never enter.
  Matrix X = A.rowwise() - A.colwise().mean();
  std::vector<bool> usable(static_cast<std::size_t>(P), true);
  std::size_t n_usable = 0;
  for (Eigen::Index j = 0; j < P; ++j) {
    const double nrm = X.col(j).norm();
    if (nrm <= 1e-12 * std::sqrt(static_cast<double>(N)) * (1.0 + A.col(j).cwiseAbs().maxCoeff())) {
      usable[j] = false;
      X.col(j).setZero();
    } else {
      X.col(j) /= nrm;
      ++n_usable;
    }
  }
  max_steps = std::min<std::size_t>({max_steps, n_usable, static_cast<std::size_t>(N - 1)});
  if (max_steps == 0) return result;

  const Vector r0 = y.array() - y.mean();
  Vector c = X.transpose() * r0;
  const double c0 = c.cwiseAbs().maxCoeff();
  if (!(c0 > 0.0)) return result;

  std::vector<bool> active(static_cast<std::size_t>(P), false);
  std::vector<double> sign;
  Matrix L(0, 0);  // Cholesky factor of the signed active Gram matrix
  Matrix XA(N, 0);

  auto pick = [&]() -> Eigen::Index {
    Eigen::Index best = -1;
    double bv = -1.0;
    for (Eigen::Index j = 0; j < P; ++j) {
      if (!usable[j] || active[j]) continue;
      const double v = std::abs(c(j));
      if (v > bv) {
        bv = v;
        best = j;
      }
    }
    return best;
  };

  Eigen::Index next = pick();
  while (result.order.size() < max_steps && next >= 0) {
    const double s = c(next) >= 0.0 ? 1.0 : -1.0;
    const Vector xj = s * X.col(next);
    const auto k = XA.cols();
    Vector g = XA.transpose() * xj;
    Vector l = k > 0 ? Vector(L.triangularView<Eigen::Lower>().solve(g)) : Vector(0);
    const double d2 = 1.0 - l.squaredNorm();
    if (!(d2 > 1e-10)) {
      result.breakdown = true;
      break;
    }
    L.conservativeResize(k + 1, k + 1);
    L.row(k).head(k) = l.transpose();
    L.col(k).head(k).setZero();
    L(k, k) = std::sqrt(d2);
    XA.conservativeResize(Eigen::NoChange, k + 1);
    XA.col(k) = xj;
    active[next] = true;
    sign.push_back(s);
    result.order.push_back(static_cast<std::size_t>(next));
    if (observer && !observer(static_cast<std::size_t>(next))) break;
    if (result.order.size() == max_steps) break;

    const double C = std::abs(c(next));
    if (C <= 1e-12 * c0) break;  // residual already orthogonal to all predictors

    const Vector ones = Vector::Ones(k + 1);
    const Vector ginv1 = L.transpose().triangularView<Eigen::Upper>().solve(L.triangularView<Eigen::Lower>().solve(ones));
    const double AA = 1.0 / std::sqrt(ones.dot(ginv1));
    const Vector w = AA * ginv1;
    const Vector u = XA * w;
    const Vector a = X.transpose() * u;

    double gamma = C / AA;
    const double full = gamma;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < P; ++j) {
      if (!usable[j] || active[j]) continue;
      for (double cand : {(C - c(j)) / (AA - a(j)), (C + c(j)) / (AA + a(j))}) {
        // A join within rounding of the full step is a tie with the exact fit.
        if (cand > 1e-14 * full && cand < gamma && cand < full * (1.0 - 1e-9)) {
          gamma = cand;
          arg = j;
        }
      }
    }
    c -= gamma * a;
    if (arg < 0) break;  // full least-squares solution reached
    next = arg;
  }
  return result;
}

std::vector<std::vector<std::size_t>> lar_path(const Eigen::Ref<const Matrix>& A, const Vector& y, std::size_t max_steps) {
  const auto res = lar(A, y, max_steps);
  if (res.breakdown)
    fail(ErrorCode::NumericalBreakdown,
         "equiangular direction degenerate after " + std::to_string(res.order.size()) + " steps", "regression.lar");
  std::vector<std::vector<std::size_t>> path;
  for (std::size_t k = 1; k <= res.order.size(); ++k) path.emplace_back(res.order.begin(), res.order.begin() + k);
  return path;
}

IncrementalLeastSquares::IncrementalLeastSquares(Vector y)
    : y_(std::move(y)), fitted_(Vector::Zero(y_.size())), hat_(Vector::Zero(y_.size())) {}

bool IncrementalLeastSquares::add_column(const Vector& column) {
  const auto N = y_.size();
  const auto k = static_cast<Eigen::Index>(k_);
  if (column.size() != N) fail(ErrorCode::InvalidParameter, "column length mismatch", "regression.incremental");
  if (k == N) return false;
  const double cnorm = column.norm();
  if (!(cnorm > 0.0) || !std::isfinite(cnorm)) return false;

  Vector v = column;
  Vector rcol = Vector::Zero(k);
  if (k > 0) {
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = q_.leftCols(k).transpose() * v;
      v.noalias() -= q_.leftCols(k) * h;
      rcol += h;
    }
  }
  const double rho = v.norm();
  if (!(rho > 1e-10 * cnorm)) return false;
  v /= rho;

  if (q_.cols() <= k) {
    const Eigen::Index cap = std::min<Eigen::Index>(N, std::max<Eigen::Index>(8, 2 * k));
    q_.conservativeResize(N, cap);
    r_.conservativeResize(cap, cap);
    r_inv_.conservativeResize(cap, cap);
    qty_.conservativeResize(cap);
  }
  q_.col(k) = v;
  r_.col(k).head(k) = rcol;
  r_.row(k).head(k + 1).setZero();
  r_(k, k) = rho;
  const Vector top = -(r_inv_.topLeftCorner(k, k).triangularView<Eigen::Upper>() * rcol) / rho;
  r_inv_.col(k).head(k) = top;
  r_inv_.row(k).head(k + 1).setZero();
  r_inv_(k, k) = 1.0 / rho;
  trace_ += top.squaredNorm() + 1.0 / (rho * rho);

  const double qy = v.dot(y_);
  qty_(k) = qy;
  fitted_ += qy * v;
  hat_ += v.cwiseAbs2();
  ++k_;
  return true;
}

Vector IncrementalLeastSquares::coefficients() const {
  const auto k = static_cast<Eigen::Index>(k_);
  if (k == 0) return Vector(0);
  return r_.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(qty_.head(k));
}

}  // namespace tensens
