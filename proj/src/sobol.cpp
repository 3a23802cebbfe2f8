#include "tensens/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <string>

#include "tensens/error.hpp"
#include "tensens/sampling.hpp"

namespace tensens {

namespace {

constexpr std::size_t kChunkRows = 1 << 16;

template <bool Parallel>
Vector evaluate_rows(const Evaluator& f, const PointMatrix& physical) {
  const Eigen::Index n = physical.rows();
  Vector out(n);
  std::vector<std::exception_ptr> errors(Parallel ? static_cast<std::size_t>(n) : 0);
  std::exception_ptr serial_error;
  Eigen::Index first_bad = -1;
#pragma omp parallel for schedule(static) if (Parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out(i) = f(row_span(physical, i));
    } catch (...) {
      out(i) = std::numeric_limits<double>::quiet_NaN();
      if constexpr (Parallel) errors[static_cast<std::size_t>(i)] = std::current_exception();
      else serial_error = std::current_exception();
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(out(i))) {
      first_bad = i;
      break;
    }
  }
  if (first_bad < 0) return out;
  std::string why = "non-finite response";
  std::exception_ptr ep = Parallel ? errors[static_cast<std::size_t>(first_bad)] : serial_error;
  if (ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      why = e.what();
    } catch (...) {
      why = "unknown exception";
    }
  }
  fail(ErrorCode::ModelFailure, "point " + std::to_string(first_bad) + ": " + why, "model.evaluate");
}

// Rows of the unit-hypercube stream, drawn in the same order as `pseudo_random`.
class UnitStream {
 public:
  UnitStream(std::size_t M, std::uint64_t seed) : M_(M), rng_(seed) {}
  PointMatrix next(std::size_t rows) {
    PointMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(M_));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = open_unit(rng_);
    }
    return out;
  }

 private:
  std::size_t M_;
  std::mt19937_64 rng_;
};

PointMatrix to_physical(const PointMatrix& unit, const InputModel& input) {
  PointMatrix x(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    for (Eigen::Index j = 0; j < unit.cols(); ++j)
      x(i, j) = input.marginal(static_cast<std::size_t>(j)).from_unit(unit(i, j));
  }
  return x;
}

// Responses at points whose component j comes from the base block when
// from_base[j] is set and from the redraw block otherwise.
Vector mixed_responses(const BatchEvaluator& f, const InputModel& input, std::size_t n, std::uint64_t seed,
                       const std::vector<bool>& from_base) {
  const std::size_t M = input.dim();
  UnitStream base(M, mix_seed(seed, 0)), redraw(M, mix_seed(seed, 1));
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t start = 0; start < n; start += kChunkRows) {
    const std::size_t rows = std::min(kChunkRows, n - start);
    PointMatrix a = base.next(rows);
    const PointMatrix b = redraw.next(rows);
    for (std::size_t j = 0; j < M; ++j) {
      if (!from_base[j]) a.col(static_cast<Eigen::Index>(j)) = b.col(static_cast<Eigen::Index>(j));
    }
    const Vector chunk = f(to_physical(a, input));
    if (chunk.size() != static_cast<Eigen::Index>(rows))
      fail(ErrorCode::ModelFailure, "model returned a wrong number of responses", "sobol.pick_freeze");
    y.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(rows)) = chunk;
  }
  return y;
}

double mean_of(const Vector& v) { return pairwise_sum({v.data(), static_cast<std::size_t>(v.size())}) / static_cast<double>(v.size()); }

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

template <class Model, class First, class Total, class Interaction>
SensitivityReport analytic_report(const Model& model, double mean, double variance, First first, Total total,
                                  Interaction interaction, std::span<const std::vector<std::size_t>> subsets) {
  SensitivityReport r;
  const std::size_t M = model.input.dim();
  for (std::size_t i = 0; i < M; ++i) r.names.push_back(model.input.name(i));
  r.mean = mean;
  r.variance = variance;
  for (std::size_t i = 0; i < M; ++i) {
    const std::size_t u[] = {i};
    r.first.push_back(first(model, u));
    r.total.push_back(total(model, u));
  }
  for (const auto& u : subsets) {
    SubsetIndices s{u, first(model, u), total(model, u), 0.0};
    if (u.size() <= kMaxInteractionOrder) s.interaction = interaction(model, u);
    r.subsets.push_back(std::move(s));
  }
  return r;
}

}  // namespace

const char* to_string(IndexMethod m) {
  switch (m) {
    case IndexMethod::LraAnalytic: return "lra";
    case IndexMethod::PceAnalytic: return "pce";
    case IndexMethod::McPickFreeze: return "mc";
    case IndexMethod::ExactBenchmark: return "exact";
  }
  return "unknown";
}

Vector evaluate_batch(const Evaluator& f, const PointMatrix& physical) { return evaluate_rows<true>(f, physical); }
Vector evaluate_batch_serial(const Evaluator& f, const PointMatrix& physical) {
  return evaluate_rows<false>(f, physical);
}

BatchEvaluator batched(Evaluator f) {
  return [f = std::move(f)](const PointMatrix& x) { return evaluate_batch(f, x); };
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 128) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Moments sample_moments(const Vector& y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) fail(ErrorCode::InvalidParameter, "moments need at least two samples", "sobol.moments");
  Moments m;
  m.mean = mean_of(y);
  const Vector c = y.array() - m.mean;
  const Vector c2 = c.array().square();
  const Vector c4 = c2.array().square();
  const double m2 = mean_of(c2), m4 = mean_of(c4);
  m.variance = m2 * n / (n - 1.0);
  m.mean_se = std::sqrt(m.variance / n);
  m.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return m;
}

Moments mc_moments(const BatchEvaluator& f, const InputModel& input, std::size_t n, std::uint64_t seed) {
  if (n < 2) fail(ErrorCode::InvalidParameter, "n must be >= 2", "sobol.mc_moments");
  UnitStream stream(input.dim(), seed);
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t start = 0; start < n; start += kChunkRows) {
    const std::size_t rows = std::min(kChunkRows, n - start);
    y.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(rows)) =
        f(to_physical(stream.next(rows), input));
  }
  return sample_moments(y);
}

IndexEstimate janon_first_order(const Vector& y, const Vector& y_frozen) {
  if (y.size() != y_frozen.size() || y.size() < 2)
    fail(ErrorCode::InvalidParameter, "paired samples must have equal length >= 2", "sobol.pick_freeze");
  const auto n = static_cast<double>(y.size());
  const double m = 0.5 * (mean_of(y) + mean_of(y_frozen));
  const Vector a = y.array() - m;
  const Vector b = y_frozen.array() - m;
  const double num = mean_of(a.cwiseProduct(b));
  const double den = 0.5 * (mean_of(a.cwiseAbs2()) + mean_of(b.cwiseAbs2()));
  if (!(den > 0.0)) fail(ErrorCode::ZeroVariance, "response sample has zero variance", "sobol.pick_freeze");
  IndexEstimate est;
  est.value = num / den;
  const Vector psi = a.cwiseProduct(b).array() - 0.5 * est.value * (a.cwiseAbs2() + b.cwiseAbs2()).array();
  const double pm = mean_of(psi);
  const Vector pc = (psi.array() - pm).square();
  est.std_error = std::sqrt(mean_of(pc) * n / (n - 1.0) / n) / den;
  return est;
}

PickFreezeResult pick_freeze_indices(const BatchEvaluator& f, const InputModel& input, std::size_t n,
                                     std::span<const std::size_t> u, std::uint64_t seed) {
  constexpr const char* stage = "sobol.pick_freeze";
  const std::size_t M = input.dim();
  if (n < 100) fail(ErrorCode::InvalidParameter, "pick-freeze needs n >= 100", stage);
  if (u.empty()) fail(ErrorCode::InvalidParameter, "index subset must be non-empty", stage);
  std::vector<bool> in_u(M, false);
  for (auto i : u) {
    if (i >= M) fail(ErrorCode::InvalidParameter, "variable index out of range", stage);
    in_u[i] = true;
  }
  const Vector y = mixed_responses(f, input, n, seed, std::vector<bool>(M, true));
  PickFreezeResult r;
  r.first = janon_first_order(y, mixed_responses(f, input, n, seed, in_u));
  std::vector<bool> complement(M);
  for (std::size_t j = 0; j < M; ++j) complement[j] = !in_u[j];
  if (std::any_of(complement.begin(), complement.end(), [](bool b) { return b; })) {
    const auto c = janon_first_order(y, mixed_responses(f, input, n, seed, complement));
    r.total = {1.0 - c.value, c.std_error};
  } else {
    r.total = {1.0, 0.0};
  }
  return r;
}

SensitivityReport pick_freeze_report(const BatchEvaluator& f, const InputModel& input, std::size_t n,
                                     std::uint64_t seed) {
  if (n < 100) fail(ErrorCode::InvalidParameter, "pick-freeze needs n >= 100", "sobol.pick_freeze");
  const std::size_t M = input.dim();
  SensitivityReport r;
  r.method = IndexMethod::McPickFreeze;
  r.sample_size = n;
  for (std::size_t i = 0; i < M; ++i) r.names.push_back(input.name(i));
  const Vector y = mixed_responses(f, input, n, seed, std::vector<bool>(M, true));
  const auto mom = sample_moments(y);
  r.mean = mom.mean;
  r.variance = mom.variance;
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<bool> only(M, false), all_but(M, true);
    only[i] = true;
    all_but[i] = false;
    const auto first = janon_first_order(y, mixed_responses(f, input, n, seed, only));
    r.first.push_back(first.value);
    r.first_se.push_back(first.std_error);
    if (M == 1) {
      r.total.push_back(1.0);
      r.total_se.push_back(0.0);
      continue;
    }
    const auto rest = janon_first_order(y, mixed_responses(f, input, n, seed, all_but));
    r.total.push_back(1.0 - rest.value);
    r.total_se.push_back(rest.std_error);
  }
  return r;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  constexpr const char* stage = "sobol.spearman";
  if (x.size() != y.size() || x.size() < 3)
    fail(ErrorCode::InvalidParameter, "Spearman needs equal-length samples of size >= 3", stage);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean, b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::ZeroRankVariance, "constant sample has no rank variance", stage);
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::size_t> rank_variables(const SensitivityReport& report) {
  std::vector<std::size_t> order(report.total.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return report.total[a] > report.total[b]; });
  return order;
}

SensitivityReport lra_report(const LRAModel& model, std::span<const std::vector<std::size_t>> subsets) {
  auto r = analytic_report(
      model, lra_mean(model), lra_variance(model),
      [](const LRAModel& m, std::span<const std::size_t> u) { return lra_sobol_first(m, u); },
      [](const LRAModel& m, std::span<const std::size_t> u) { return lra_sobol_total(m, u); },
      [](const LRAModel& m, std::span<const std::size_t> u) { return lra_sobol_interaction(m, u); }, subsets);
  r.method = IndexMethod::LraAnalytic;
  return r;
}

SensitivityReport pce_report(const PCEModel& model, std::span<const std::vector<std::size_t>> subsets) {
  auto r = analytic_report(
      model, pce_mean(model), pce_variance(model),
      [](const PCEModel& m, std::span<const std::size_t> u) { return pce_sobol_first(m, u); },
      [](const PCEModel& m, std::span<const std::size_t> u) { return pce_sobol_total(m, u); },
      [](const PCEModel& m, std::span<const std::size_t> u) { return pce_sobol_interaction(m, u); }, subsets);
  r.method = IndexMethod::PceAnalytic;
  return r;
}

}  // namespace tensens
