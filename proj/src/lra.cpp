#include "tensens/lra.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateTol = 1e-14;
// Relative CV errors below this sit at the ALS round-off level and count as ties.
constexpr double kCvFloor = 1e-12;

Error restage(const Error& e, const std::string& prefix, const std::string& stage) {
  return Error(e.code(), prefix + e.detail(), e.stage().empty() ? stage : stage + "/" + e.stage());
}

// Values of every rank-one term at the rows of `tables`: N x R.
Matrix rank_one_values(const std::vector<Matrix>& z, const std::vector<Matrix>& tables, std::size_t R) {
  const auto N = tables.front().rows();
  Matrix W = Matrix::Ones(N, static_cast<Eigen::Index>(R));
  for (std::size_t l = 0; l < R; ++l) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      W.col(static_cast<Eigen::Index>(l)).array() *=
          (tables[i] * z[l].row(static_cast<Eigen::Index>(i)).transpose()).array();
    }
  }
  return W;
}

struct Grams {
  std::vector<Matrix> full;  // full[i](l, l') = <z_l^(i), z_l'^(i)>
  std::vector<Matrix> zero;  // zero[i](l, l') = z_l^(i)[0] z_l'^(i)[0]
};

Grams grams(const LRAModel& m) {
  const std::size_t R = m.rank(), M = m.dim();
  Grams g;
  for (std::size_t i = 0; i < M; ++i) {
    Matrix Z(static_cast<Eigen::Index>(R), m.z.front().cols());
    for (std::size_t l = 0; l < R; ++l) Z.row(static_cast<Eigen::Index>(l)) = m.z[l].row(static_cast<Eigen::Index>(i));
    g.full.push_back(Z * Z.transpose());
    g.zero.push_back(Z.col(0) * Z.col(0).transpose());
  }
  return g;
}

// sum_{l,l'} b_l b_l' (prod_{i in u} G_i - prod_i Z0_i), i.e. E[E[Y|X_u]^2] - E[Y]^2.
double conditional_numerator(const LRAModel& m, const Grams& g, const std::vector<bool>& in_u) {
  const auto R = static_cast<Eigen::Index>(m.rank());
  Matrix cond = Matrix::Ones(R, R);
  Matrix base = Matrix::Ones(R, R);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    cond.array() *= (in_u[i] ? g.full[i] : g.zero[i]).array();
    base.array() *= g.zero[i].array();
  }
  return m.b.dot((cond - base) * m.b);
}

void check_subset(const LRAModel& m, std::span<const std::size_t> u, const char* stage) {
  if (u.empty()) fail(ErrorCode::InvalidParameter, "index subset must be non-empty", stage);
  for (auto i : u) {
    if (i >= m.dim()) fail(ErrorCode::InvalidParameter, "variable index out of range", stage);
  }
}

double checked_variance(const LRAModel& m, const char* stage) {
  const double var = lra_variance(m);
  const double mean = lra_mean(m);
  if (!(var > 1e-13 * (var + mean * mean))) fail(ErrorCode::ZeroVariance, "approximation has zero variance", stage);
  return var;
}

}  // namespace

double rank_one_eval(const Matrix& z, std::span<const double> u, const BasisSpec& spec) {
  const auto M = static_cast<std::size_t>(z.rows());
  if (u.size() != M || spec.dim() != M)
    fail(ErrorCode::InvalidParameter, "rank-one term dimension mismatch", "lra.rank_one_eval");
  std::vector<double> vals(static_cast<std::size_t>(z.cols()));
  double prod = 1.0;
  for (std::size_t i = 0; i < M; ++i) {
    eval_orthonormal(spec.families[i], u[i], vals);
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) s += z(static_cast<Eigen::Index>(i), k) * vals[static_cast<std::size_t>(k)];
    prod *= s;
  }
  return prod;
}

CorrectionResult correction_step(const Vector& residual, const std::vector<Matrix>& tables, double var_y, int I_max,
                                 double delta_err_min) {
  constexpr const char* stage = "lra.correction_step";
  const std::size_t M = tables.size();
  if (M == 0) fail(ErrorCode::InvalidParameter, "no dimensions", stage);
  const auto N = residual.size();
  const auto P = tables.front().cols();
  if (I_max < 1) fail(ErrorCode::InvalidParameter, "I_max must be >= 1", stage);
  if (!(var_y > 0.0)) fail(ErrorCode::ZeroVariance, "response variance must be positive", stage);
  if (N < P)
    fail(ErrorCode::UnderDetermined,
         "per-dimension least squares needs N >= p+1 (N=" + std::to_string(N) + ", p+1=" + std::to_string(P) + ")",
         stage);

  CorrectionResult out;
  out.z = Matrix::Zero(static_cast<Eigen::Index>(M), P);
  out.z.col(0).setOnes();
  Matrix V = Matrix::Ones(N, static_cast<Eigen::Index>(M));
  double prev = kInf;
  for (int it = 1; it <= I_max; ++it) {
    for (std::size_t j = 0; j < M; ++j) {
      Vector weights = Vector::Ones(N);
      for (std::size_t i = 0; i < M; ++i) {
        if (i != j) weights.array() *= V.col(static_cast<Eigen::Index>(i)).array();
      }
      const Matrix D = weights.asDiagonal() * tables[j];
      Vector coef;
      try {
        coef = ols_fit(D, residual).coefficients;
      } catch (const Error& e) {
        throw restage(e, "dimension " + std::to_string(j + 1) + ": ", stage);
      }
      out.z.row(static_cast<Eigen::Index>(j)) = coef.transpose();
      V.col(static_cast<Eigen::Index>(j)) = tables[j] * coef;
    }
    const Vector w = V.rowwise().prod();
    const double err = (residual - w).squaredNorm() / static_cast<double>(N) / var_y;
    out.iterations = it;
    if (std::isfinite(prev) && err > 1.1 * prev + 1e-14)
      fail(ErrorCode::NonDecreasingGuard,
           "error rose from " + std::to_string(prev) + " to " + std::to_string(err) + " in sweep " + std::to_string(it),
           stage);
    const double delta = prev - err;
    prev = err;
    out.err = err;
    if (delta <= delta_err_min) break;
  }
  for (std::size_t i = 0; i < M; ++i) {
    const double nrm = out.z.row(static_cast<Eigen::Index>(i)).norm();
    if (nrm > 0.0) {
      out.z.row(static_cast<Eigen::Index>(i)) /= nrm;
      V.col(static_cast<Eigen::Index>(i)) /= nrm;
    }
  }
  out.w = V.rowwise().prod();
  return out;
}

Vector updating_step(const Matrix& W, const Vector& y) {
  try {
    return ols_fit(W, y).coefficients;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient)
      fail(ErrorCode::CollinearRankOneTerms, "rank-one terms are numerically collinear", "lra.updating_step");
    throw e.within("lra.updating_step");
  }
}

GreedyLRA greedy_lra(const std::vector<Matrix>& tables, const Vector& y, std::size_t r_max, int I_max,
                     double delta_err_min) {
  if (r_max < 1) fail(ErrorCode::InvalidParameter, "r_max must be >= 1", "lra.greedy");
  const auto N = y.size();
  const double var_y = empirical_variance(y);
  const double y_norm = y.norm();
  GreedyLRA g;
  Matrix W(N, 0);
  Vector residual = y;
  for (std::size_t r = 1; r <= r_max; ++r) {
    CorrectionResult corr;
    Vector b;
    try {
      corr = correction_step(residual, tables, var_y, I_max, delta_err_min);
      if (!(corr.w.norm() >= kDegenerateTol * y_norm)) break;
      W.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(r));
      W.col(static_cast<Eigen::Index>(r - 1)) = corr.w;
      b = updating_step(W, y);
    } catch (const Error& e) {
      if (r == 1) throw restage(e, "rank 1: ", "lra");
      break;
    }
    const Vector fitted = W * b;
    residual = y - fitted;
    g.z.push_back(std::move(corr.z));
    g.b.push_back(std::move(b));
    g.empirical.push_back(residual.squaredNorm() / static_cast<double>(N) / var_y);
    g.iterations.push_back(corr.iterations);
  }
  if (g.z.empty()) fail(ErrorCode::AllRanksFailed, "first rank-one term is numerically zero", "lra");
  return g;
}

LRAModel build_lra(const ExperimentalDesign& ed, const InputModel& input, int p, const LRAOptions& options) {
  const std::size_t M = input.dim();
  if (ed.dim() != M) fail(ErrorCode::InvalidParameter, "design dimension does not match input model", "lra.build");
  if (p < 0) fail(ErrorCode::InvalidParameter, "degree must be >= 0", "lra.build");
  const auto spec = BasisSpec::for_input(input, p);
  const Vector& y = ed.y();
  const double var_y = empirical_variance(y);
  if (!(var_y > 0.0)) fail(ErrorCode::ZeroVariance, "responses have zero empirical variance", "lra.build");

  const std::size_t r_max = options.r_max;
  auto fitter = [&](const ExperimentalDesign& train, const ExperimentalDesign& test) -> Matrix {
    Matrix pred = Matrix::Constant(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(r_max),
                                   std::numeric_limits<double>::quiet_NaN());
    try {
      const auto g = greedy_lra(univariate_tables(train.standard, spec, p), train.y(), r_max, options.I_max,
                                options.delta_err_min);
      const Matrix W = rank_one_values(g.z, univariate_tables(test.standard, spec, p), g.z.size());
      for (std::size_t r = 1; r <= g.b.size(); ++r)
        pred.col(static_cast<Eigen::Index>(r - 1)) = W.leftCols(static_cast<Eigen::Index>(r)) * g.b[r - 1];
    } catch (const Error&) {
    }
    return pred;
  };
  const auto cv = kfold_cv_multi(fitter, ed, options.cv_folds, options.cv_seed);

  const auto g = greedy_lra(univariate_tables(ed.standard, spec, p), y, r_max, options.I_max, options.delta_err_min);
  std::size_t best = 0;
  for (std::size_t r = 1; r < std::min(cv.size(), g.b.size()); ++r) {
    if (std::max(cv[r], kCvFloor) < std::max(cv[best], kCvFloor)) best = r;
  }
  if (!std::isfinite(cv[best]))
    fail(ErrorCode::AllRanksFailed, "no rank produced a finite cross-validation error", "lra.build");

  LRAModel model{input, spec, p};
  model.b = g.b[best];
  model.z.assign(g.z.begin(), g.z.begin() + static_cast<std::ptrdiff_t>(best + 1));
  model.errors.empirical_rel = g.empirical[best];
  model.errors.cv_k_rel = cv[best];
  model.cv_by_rank = cv;
  return model;
}

LRAModel select_degree(const ExperimentalDesign& ed, const InputModel& input, const LRAOptions& options) {
  const auto& grid = options.p_grid;
  if (grid.empty()) fail(ErrorCode::InvalidParameter, "degree grid is empty", "lra.select_degree");
  std::vector<std::optional<LRAModel>> models(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(grid.size()); ++k) {
    try {
      models[k] = build_lra(ed, input, grid[k], options);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!models[k]) continue;
    const double e = std::max(*models[k]->errors.cv_k_rel, kCvFloor);
    if (!best) {
      best = k;
      continue;
    }
    const double eb = std::max(*models[*best]->errors.cv_k_rel, kCvFloor);
    if (e < eb || (e == eb && grid[k] < grid[*best])) best = k;
  }
  if (!best) std::rethrow_exception(errors.front());
  LRAModel out = std::move(*models[*best]);
  for (std::size_t k = 0; k < grid.size(); ++k)
    out.cv_by_degree.emplace_back(grid[k], models[k] ? *models[k]->errors.cv_k_rel : kInf);
  return out;
}

double lra_eval_standard(const LRAModel& model, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t l = 0; l < model.rank(); ++l) s += model.b(static_cast<Eigen::Index>(l)) * rank_one_eval(model.z[l], u, model.spec);
  return s;
}

double lra_eval(const LRAModel& model, std::span<const double> x_physical) {
  const auto u = model.input.to_standard(x_physical);
  return lra_eval_standard(model, u);
}

Vector lra_predict(const LRAModel& model, const PointMatrix& standard) {
  Vector out(standard.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index n = 0; n < standard.rows(); ++n) out(n) = lra_eval_standard(model, row_span(standard, n));
  return out;
}

Vector lra_predict_serial(const LRAModel& model, const PointMatrix& standard) {
  Vector out(standard.rows());
  for (Eigen::Index n = 0; n < standard.rows(); ++n) out(n) = lra_eval_standard(model, row_span(standard, n));
  return out;
}

double lra_mean(const LRAModel& model) {
  double s = 0.0;
  for (std::size_t l = 0; l < model.rank(); ++l) s += model.b(static_cast<Eigen::Index>(l)) * model.z[l].col(0).prod();
  return s;
}

double lra_variance(const LRAModel& model) {
  const auto g = grams(model);
  const double var = conditional_numerator(model, g, std::vector<bool>(model.dim(), true));
  const double mean = lra_mean(model);
  if (var < -1e-10 * (mean * mean + 1.0))
    fail(ErrorCode::NegativeVariance, "closed-form variance is negative (" + std::to_string(var) + ")",
         "lra.variance");
  return std::max(var, 0.0);
}

double lra_sobol_first(const LRAModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "lra.sobol_first";
  check_subset(model, u, stage);
  const double var = checked_variance(model, stage);
  std::vector<bool> in(model.dim(), false);
  for (auto i : u) in[i] = true;
  return conditional_numerator(model, grams(model), in) / var;
}

double lra_sobol_total(const LRAModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "lra.sobol_total";
  check_subset(model, u, stage);
  const double var = checked_variance(model, stage);
  std::vector<bool> in_complement(model.dim(), true);
  for (auto i : u) in_complement[i] = false;
  if (std::none_of(in_complement.begin(), in_complement.end(), [](bool b) { return b; })) return 1.0;
  return 1.0 - conditional_numerator(model, grams(model), in_complement) / var;
}

double lra_sobol_interaction(const LRAModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "lra.sobol_interaction";
  check_subset(model, u, stage);
  if (u.size() > kMaxInteractionOrder)
    fail(ErrorCode::SubsetTooLarge, "interaction order " + std::to_string(u.size()) + " exceeds 12", stage);
  const double var = checked_variance(model, stage);
  const auto g = grams(model);
  const std::size_t s = u.size();
  double total = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << s); ++mask) {
    std::vector<bool> in(model.dim(), false);
    for (std::size_t k = 0; k < s; ++k) {
      if (mask & (1u << k)) in[u[k]] = true;
    }
    const int sign = ((s - static_cast<std::size_t>(std::popcount(mask))) % 2 == 0) ? 1 : -1;
    total += sign * conditional_numerator(model, g, in);
  }
  return total / var;
}

PCEModel lra_to_pce(const LRAModel& model) {
  const std::size_t M = model.dim();
  const int p = model.degree;
  double count = std::pow(static_cast<double>(p + 1), static_cast<double>(M));
  if (count > 1e6) fail(ErrorCode::SizeOverflow, "tensor expansion would exceed 1e6 terms", "lra.to_pce");
  PCEModel pce{model.input, model.spec, {}, Vector()};
  pce.p_t = p * static_cast<int>(M);
  const auto n = static_cast<std::size_t>(count);
  pce.coefficients.resize(static_cast<Eigen::Index>(n));
  MultiIndex alpha(M, 0);
  for (std::size_t t = 0; t < n; ++t) {
    double c = 0.0;
    for (std::size_t l = 0; l < model.rank(); ++l) {
      double prod = model.b(static_cast<Eigen::Index>(l));
      for (std::size_t i = 0; i < M; ++i) prod *= model.z[l](static_cast<Eigen::Index>(i), alpha[i]);
      c += prod;
    }
    pce.terms.push_back(alpha);
    pce.coefficients(static_cast<Eigen::Index>(t)) = c;
    for (std::size_t i = 0; i < M; ++i) {
      if (alpha[i] < p) {
        ++alpha[i];
        break;
      }
      alpha[i] = 0;
    }
  }
  return pce;
}

}  // namespace tensens
