#include "tensens/pce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double corrected_score(const IncrementalLeastSquares& ls, const Vector& y, double var, TraceScaling scaling) {
  const std::size_t N = ls.rows(), P = ls.size();
  if (P >= N) return kInf;
  const Vector& h = ls.hat_diag();
  if (h.maxCoeff() >= 1.0 - 1e-12) return kInf;
  const Vector r = (y - ls.fitted()).cwiseQuotient((Vector::Ones(h.size()) - h));
  const double loo = r.squaredNorm() / static_cast<double>(N) / var;
  return loo * corrected_loo_factor(N, P, ls.trace_inv_gram(), scaling);
}

void check_subset(const PCEModel& model, std::span<const std::size_t> u, const char* stage) {
  if (u.empty()) fail(ErrorCode::InvalidParameter, "index subset must be non-empty", stage);
  for (auto i : u) {
    if (i >= model.spec.dim()) fail(ErrorCode::InvalidParameter, "variable index out of range", stage);
  }
}

std::vector<bool> subset_mask(std::size_t M, std::span<const std::size_t> u) {
  std::vector<bool> in(M, false);
  for (auto i : u) in[i] = true;
  return in;
}

double checked_variance(const PCEModel& model, const char* stage) {
  const double var = pce_variance(model);
  if (!(var > 0.0)) fail(ErrorCode::ZeroVariance, "expansion has zero variance", stage);
  return var;
}

}  // namespace

HybridLarFit hybrid_lar(const Matrix& Psi, const Vector& y, TraceScaling scaling) {
  const auto N = static_cast<std::size_t>(Psi.rows());
  const auto P = static_cast<std::size_t>(Psi.cols());
  HybridLarFit out{{0}, 0.0};
  const double var = empirical_variance(y);
  if (!(var > 0.0)) return out;

  IncrementalLeastSquares ls(y);
  ls.add_column(Psi.col(0));
  double best = corrected_score(ls, y, var, scaling);
  out.loo_corrected = best;
  if (P < 2 || N < 3) return out;

  std::vector<std::size_t> current{0};
  std::size_t best_size = 1;
  std::size_t steps = 0, since_best = 0;
  const std::size_t max_steps = std::min(P - 1, N - 2);
  lar(Psi.rightCols(static_cast<Eigen::Index>(P - 1)), y, max_steps, [&](std::size_t col) {
    ++steps;
    const std::size_t term = col + 1;
    if (ls.add_column(Psi.col(static_cast<Eigen::Index>(term)))) {
      current.push_back(term);
      const double score = corrected_score(ls, y, var, scaling);
      if (score < best) {
        best = score;
        best_size = current.size();
        since_best = 0;
        return true;
      }
    }
    ++since_best;
    return since_best < std::max<std::size_t>(10, steps / 10);
  });
  current.resize(best_size);
  out.selected = std::move(current);
  out.loo_corrected = best;
  return out;
}

PCEModel build_pce(const ExperimentalDesign& ed, const InputModel& input, const PCEOptions& options) {
  constexpr const char* stage = "pce.build";
  const std::size_t M = input.dim(), N = ed.size();
  if (ed.dim() != M) fail(ErrorCode::InvalidParameter, "design dimension does not match input model", stage);
  if (options.p_min < 0 || options.p_max < options.p_min || options.q_set.empty())
    fail(ErrorCode::InvalidParameter, "empty (p_t, q) grid", stage);
  const Vector& y = ed.y();

  PCEModel model{input, BasisSpec::for_input(input, 0), {MultiIndex(M, 0)}, Vector::Constant(1, y.mean())};
  if (N < 2 || !(empirical_variance(y) > 0.0)) {
    model.errors.empirical_rel = 0.0;
    model.errors.loo_corrected_rel = 0.0;
    return model;
  }

  struct Best {
    double err = kInf;
    std::size_t size = 0;
    int p_t = 0;
    double q = 0.0;
    std::vector<MultiIndex> terms;
  } best;
  auto better = [](double err, std::size_t size, int p_t, double q, const Best& b) {
    if (err != b.err) return err < b.err;
    if (size != b.size) return size < b.size;
    if (p_t != b.p_t) return p_t < b.p_t;
    return q > b.q;
  };

  for (double q : options.q_set) {
    double best_q = kInf;
    int worse = 0;
    for (int p_t = std::max(options.p_min, 1); p_t <= options.p_max; ++p_t) {
      std::vector<MultiIndex> basis;
      try {
        basis = truncation_set(M, p_t, q);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::SizeOverflow) break;
        throw;
      }
      if (basis.size() > options.max_basis) break;
      const auto spec = BasisSpec::for_input(input, p_t);
      const Matrix Psi = basis_matrix(ed.standard, spec, basis);
      const auto fit = hybrid_lar(Psi, y, options.trace_scaling);
      model.trace.push_back({p_t, q, basis.size(), fit.selected.size(), fit.loo_corrected});
      if (better(fit.loo_corrected, fit.selected.size(), p_t, q, best)) {
        best.err = fit.loo_corrected;
        best.size = fit.selected.size();
        best.p_t = p_t;
        best.q = q;
        best.terms.clear();
        for (auto k : fit.selected) best.terms.push_back(basis[k]);
      }
      if (fit.loo_corrected < best_q) {
        best_q = fit.loo_corrected;
        worse = 0;
      } else if (++worse >= options.patience) {
        break;
      }
    }
  }
  if (best.terms.empty() || !std::isfinite(best.err))
    fail(ErrorCode::NoFeasibleModel, "no (p_t, q) candidate produced a finite corrected LOO error", stage);

  model.spec = BasisSpec::for_input(input, best.p_t);
  model.terms = std::move(best.terms);
  model.p_t = best.p_t;
  model.q = best.q;
  const Matrix Psi = basis_matrix(ed.standard, model.spec, model.terms);
  OlsFit fit;
  try {
    fit = ols_fit(Psi, y);
  } catch (const Error& e) {
    throw e.within(stage);
  }
  model.coefficients = fit.coefficients;
  const double var = empirical_variance(y);
  model.errors.empirical_rel = fit.residuals.squaredNorm() / static_cast<double>(N) / var;
  if (fit.hat_diag.maxCoeff() < 1.0 - 1e-12) {
    const double loo = loo_error(y, fit.fitted, fit.hat_diag) / var;
    model.errors.loo_rel = loo;
    model.errors.loo_corrected_rel =
        loo * corrected_loo_factor(N, model.terms.size(), fit.trace_inv_gram, options.trace_scaling);
  }
  return model;
}

double pce_eval_standard(const PCEModel& model, std::span<const double> u) {
  const std::size_t M = model.spec.dim();
  if (u.size() != M) fail(ErrorCode::InvalidParameter, "point dimension mismatch", "pce.eval");
  std::vector<std::vector<double>> vals(M);
  for (std::size_t i = 0; i < M; ++i) {
    vals[i].resize(static_cast<std::size_t>(model.spec.max_degree[i] + 1));
    eval_orthonormal(model.spec.families[i], u[i], vals[i]);
  }
  double s = 0.0;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    double v = model.coefficients(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < M; ++i) {
      const auto a = model.terms[t][i];
      if (a) v *= vals[i][a];
    }
    s += v;
  }
  return s;
}

double pce_eval(const PCEModel& model, std::span<const double> x_physical) {
  const auto u = model.input.to_standard(x_physical);
  return pce_eval_standard(model, u);
}

Vector pce_predict(const PCEModel& model, const PointMatrix& standard) {
  return basis_matrix(standard, model.spec, model.terms) * model.coefficients;
}

double pce_mean(const PCEModel& model) {
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    if (total_degree(model.terms[t]) == 0) return model.coefficients(static_cast<Eigen::Index>(t));
  }
  return 0.0;
}

double pce_variance(const PCEModel& model) {
  double s = 0.0;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    if (total_degree(model.terms[t]) != 0) s += model.coefficients(static_cast<Eigen::Index>(t)) * model.coefficients(static_cast<Eigen::Index>(t));
  }
  return s;
}

double pce_sobol_first(const PCEModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "pce.sobol_first";
  check_subset(model, u, stage);
  const double var = checked_variance(model, stage);
  const auto in = subset_mask(model.spec.dim(), u);
  double s = 0.0;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    const auto& a = model.terms[t];
    bool inside = total_degree(a) != 0;
    for (std::size_t i = 0; inside && i < a.size(); ++i) inside = a[i] == 0 || in[i];
    if (inside) s += std::pow(model.coefficients(static_cast<Eigen::Index>(t)), 2);
  }
  return s / var;
}

double pce_sobol_total(const PCEModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "pce.sobol_total";
  check_subset(model, u, stage);
  const double var = checked_variance(model, stage);
  double s = 0.0;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    const auto& a = model.terms[t];
    if (std::any_of(u.begin(), u.end(), [&](std::size_t i) { return a[i] > 0; }))
      s += std::pow(model.coefficients(static_cast<Eigen::Index>(t)), 2);
  }
  return s / var;
}

double pce_sobol_interaction(const PCEModel& model, std::span<const std::size_t> u) {
  constexpr const char* stage = "pce.sobol_interaction";
  check_subset(model, u, stage);
  const double var = checked_variance(model, stage);
  const auto in = subset_mask(model.spec.dim(), u);
  double s = 0.0;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    const auto& a = model.terms[t];
    bool exact = true;
    for (std::size_t i = 0; exact && i < a.size(); ++i) exact = (a[i] > 0) == static_cast<bool>(in[i]);
    if (exact) s += std::pow(model.coefficients(static_cast<Eigen::Index>(t)), 2);
  }
  return s / var;
}

}  // namespace tensens
