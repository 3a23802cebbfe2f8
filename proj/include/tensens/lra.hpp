#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensens/input_model.hpp"
#include "tensens/ortho_poly.hpp"
#include "tensens/pce.hpp"
#include "tensens/regression.hpp"
#include "tensens/sampling.hpp"

namespace tensens {

struct LRAOptions {
  std::vector<int> p_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::size_t r_max = 10;
  int I_max = 50;
  double delta_err_min = 1e-6;
  std::size_t cv_folds = 3;
  std::uint64_t cv_seed = 0;
};

/// Canonical low-rank approximation
///   y(u) = sum_l b_l prod_i sum_k z[l](i, k) P_k^(i)(u_i)
/// where z[l] is an M x (p+1) matrix.
struct LRAModel {
  InputModel input;
  BasisSpec spec;
  int degree = 0;
  Vector b{};
  std::vector<Matrix> z{};
  ErrorReport errors{};
  std::vector<double> cv_by_rank{};                  // per-rank CV error at the selected degree
  std::vector<std::pair<int, double>> cv_by_degree{}; // (p, CV error of the best rank)

  std::size_t rank() const { return static_cast<std::size_t>(b.size()); }
  std::size_t dim() const { return spec.dim(); }
};

/// prod_i sum_k z(i, k) P_k^(i)(u_i).
double rank_one_eval(const Matrix& z, std::span<const double> u, const BasisSpec& spec);

struct CorrectionResult {
  Matrix z;  // M x (p+1), each row scaled to unit Euclidean norm
  Vector w;  // rank-one term at the design points
  int iterations = 0;
  double err = 0.0;  // relative empirical error of the last sweep
};

/// One correction step: alternating least squares for a rank-one fit of the
/// residual. `tables[i]` holds the univariate basis of dimension i at the
/// design points; `var_y` normalizes the error.
CorrectionResult correction_step(const Vector& residual, const std::vector<Matrix>& tables, double var_y, int I_max,
                                 double delta_err_min);

/// Least-squares weights of y on the columns of W (rank-one terms at the design points).
Vector updating_step(const Matrix& W, const Vector& y);

struct GreedyLRA {
  std::vector<Matrix> z;
  std::vector<Vector> b;            // b[r-1] holds the weights of the rank-r approximation
  std::vector<double> empirical;    // relative empirical error at each rank
  std::vector<int> iterations;      // ALS sweeps used by each correction step
};

/// Greedy construction for ranks 1..r_max. Stops early when a new rank-one
/// term is numerically zero or collinear with the existing ones.
GreedyLRA greedy_lra(const std::vector<Matrix>& tables, const Vector& y, std::size_t r_max, int I_max,
                     double delta_err_min);

/// Greedy construction at a fixed degree with the rank chosen by k-fold CV.
LRAModel build_lra(const ExperimentalDesign& ed, const InputModel& input, int p, const LRAOptions& options = {});

/// Builds at every degree of `options.p_grid` and keeps the smallest CV error (ties -> smaller p).
LRAModel select_degree(const ExperimentalDesign& ed, const InputModel& input, const LRAOptions& options = {});

double lra_eval(const LRAModel& model, std::span<const double> x_physical);
double lra_eval_standard(const LRAModel& model, std::span<const double> u);
/// Predictions at standardized points, one per row (OpenMP over rows).
Vector lra_predict(const LRAModel& model, const PointMatrix& standard);
Vector lra_predict_serial(const LRAModel& model, const PointMatrix& standard);

double lra_mean(const LRAModel& model);
double lra_variance(const LRAModel& model);

inline constexpr std::size_t kMaxInteractionOrder = 12;

/// Subsets are 0-based variable indices.
double lra_sobol_first(const LRAModel& model, std::span<const std::size_t> u);
double lra_sobol_total(const LRAModel& model, std::span<const std::size_t> u);
double lra_sobol_interaction(const LRAModel& model, std::span<const std::size_t> u);

/// Full tensor-product PCE with the same response (basis {0..p}^M).
PCEModel lra_to_pce(const LRAModel& model);

}  // namespace tensens
