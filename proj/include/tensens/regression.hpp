#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tensens/sampling.hpp"
#include "tensens/types.hpp"

namespace tensens {

/// Condition-number bound above which a least-squares problem is rejected.
inline constexpr double kMaxCondition = 1e12;

double semi_norm(std::span<const double> values);
inline double semi_norm(const Vector& v) { return semi_norm(std::span<const double>(v.data(), v.size())); }

/// Unbiased (N-1) sample variance.
double empirical_variance(const Vector& y);

struct OlsFit {
  Vector coefficients;
  Vector fitted;
  Vector residuals;
  Vector hat_diag;        // diagonal of A (A^T A)^-1 A^T
  double trace_inv_gram;  // tr((A^T A)^-1), A unscaled
  double condition_estimate;
};

/// Least squares through column-pivoted Householder QR.
OlsFit ols_fit(const Matrix& A, const Vector& y);
Vector ols_solve(const Matrix& A, const Vector& y);

struct ErrorReport {
  std::optional<double> empirical_rel;
  std::optional<double> loo_rel;
  std::optional<double> loo_corrected_rel;
  std::optional<double> cv_k_rel;
  std::optional<double> generalization_rel;
};

/// ||y - y_hat||^2_E / Var[y].
double empirical_error_rel(const Vector& y, const Vector& y_hat);
/// Mean-square error on a validation set divided by its empirical variance.
double generalization_error_rel(const Vector& y_val, const Vector& y_hat);

/// Absolute LOO error mean(((y - y_hat) / (1 - h))^2).
double loo_error(const Vector& y, const Vector& y_hat, const Vector& hat_diag);
/// LOO error of the OLS fit of y on A, divided by Var[y].
double loo_error_rel(const Matrix& A, const Vector& y);

enum class TraceScaling {
  Unscaled,  // tr((A^T A)^-1)
  ScaledByN  // tr(((A^T A)/N)^-1), exposed for sensitivity checks
};

/// (1 - P/N)^-1 (1 + trace); `trace_inv_gram` is tr((A^T A)^-1) of the unscaled matrix.
double corrected_loo_factor(std::size_t N, std::size_t P, double trace_inv_gram,
                            TraceScaling scaling = TraceScaling::Unscaled);
double corrected_loo(double err_loo_rel, std::size_t N, std::size_t P, const Matrix& A,
                     TraceScaling scaling = TraceScaling::Unscaled);

/// Shuffle 0..N-1 with `seed`, then deal round-robin into k folds.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t N, std::size_t k, std::uint64_t seed);

/// Fits on `train` and returns predictions at the rows of `test`, one column
/// per candidate model. Failed candidates may be reported as non-finite values.
using MultiFoldFitter = std::function<Matrix(const ExperimentalDesign& train, const ExperimentalDesign& test)>;
using FoldFitter = std::function<Vector(const ExperimentalDesign& train, const ExperimentalDesign& test)>;

/// Per-candidate k-fold CV error: fold mean-square errors averaged over folds,
/// divided by Var[y] of the whole design. Candidates with any non-finite
/// prediction get +inf.
std::vector<double> kfold_cv_multi(const MultiFoldFitter& fit, const ExperimentalDesign& ed, std::size_t k,
                                   std::uint64_t seed);
double kfold_cv(const FoldFitter& fit, const ExperimentalDesign& ed, std::size_t k, std::uint64_t seed);

struct LarResult {
  std::vector<std::size_t> order;  // predictors in the order they joined the active set
  bool breakdown = false;          // equiangular direction became degenerate
};

/// Called each time a predictor joins the active set; returning false ends the path.
using LarObserver = std::function<bool(std::size_t column)>;

/// Least-angle regression on standardized columns (intercept handled
/// separately). Stops early when the residual correlation vanishes.
LarResult lar(const Eigen::Ref<const Matrix>& A, const Vector& y, std::size_t max_steps, const LarObserver& observer = {});

/// Nested active sets of the LAR path. Throws NumericalBreakdown if the path
/// degenerates before `max_steps`.
std::vector<std::vector<std::size_t>> lar_path(const Eigen::Ref<const Matrix>& A, const Vector& y, std::size_t max_steps);

/// Least squares that grows one column at a time (Gram-Schmidt with
/// re-orthogonalization), keeping fitted values, leverages and tr((A^T A)^-1)
/// up to date in O(N k) per added column.
class IncrementalLeastSquares {
 public:
  explicit IncrementalLeastSquares(Vector y);

  /// Returns false (and leaves state unchanged) if the column is numerically
  /// dependent on the current ones.
  bool add_column(const Vector& column);

  std::size_t size() const { return k_; }
  std::size_t rows() const { return static_cast<std::size_t>(y_.size()); }
  const Vector& fitted() const { return fitted_; }
  Vector residuals() const { return y_ - fitted_; }
  const Vector& hat_diag() const { return hat_; }
  double trace_inv_gram() const { return trace_; }
  Vector coefficients() const;

 private:
  Vector y_;
  Matrix q_;
  Matrix r_;
  Matrix r_inv_;
  Vector qty_;
  Vector fitted_;
  Vector hat_;
  double trace_ = 0.0;
  std::size_t k_ = 0;
};

}  // namespace tensens
