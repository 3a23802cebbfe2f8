#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tensens/input_model.hpp"
#include "tensens/lra.hpp"
#include "tensens/pce.hpp"
#include "tensens/types.hpp"

namespace tensens {

enum class IndexMethod { LraAnalytic, PceAnalytic, McPickFreeze, ExactBenchmark };
const char* to_string(IndexMethod m);

struct SubsetIndices {
  std::vector<std::size_t> u;  // 0-based
  double first = 0.0;
  double total = 0.0;
  double interaction = 0.0;
};

struct SensitivityReport {
  std::vector<std::string> names;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> first;
  std::vector<double> total;
  std::vector<double> first_se;  // filled by Monte-Carlo methods only
  std::vector<double> total_se;
  std::vector<SubsetIndices> subsets;
  IndexMethod method = IndexMethod::ExactBenchmark;
  std::size_t sample_size = 0;
};

/// Evaluates a pointwise model at every row (OpenMP over rows). Exceptions
/// and non-finite responses become ModelFailure naming the point index.
Vector evaluate_batch(const Evaluator& f, const PointMatrix& physical);
Vector evaluate_batch_serial(const Evaluator& f, const PointMatrix& physical);
BatchEvaluator batched(Evaluator f);

/// Sum in fixed pairwise order (independent of thread count).
double pairwise_sum(std::span<const double> v);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_se = 0.0;
  double variance_se = 0.0;
};
Moments sample_moments(const Vector& y);

/// Moments of f(X) from n i.i.d. draws of the input model.
Moments mc_moments(const BatchEvaluator& f, const InputModel& input, std::size_t n, std::uint64_t seed);

struct IndexEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Correlated-pair first-order estimate from Y = f(X) and Y' = f(X') where X'
/// shares the frozen components with X. The standard error comes from the
/// delta method.
IndexEstimate janon_first_order(const Vector& y, const Vector& y_frozen);

struct PickFreezeResult {
  IndexEstimate first;
  IndexEstimate total;
};

/// Pick-freeze estimates for the subset u. The base block is drawn from
/// substream 0 of `seed` and the redraw block from substream 1, so different
/// subsets share the base sample.
PickFreezeResult pick_freeze_indices(const BatchEvaluator& f, const InputModel& input, std::size_t n,
                                     std::span<const std::size_t> u, std::uint64_t seed);

/// Per-variable pick-freeze report (mean and variance from the base block).
SensitivityReport pick_freeze_report(const BatchEvaluator& f, const InputModel& input, std::size_t n,
                                     std::uint64_t seed);

/// Pearson correlation of average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Variables by descending total index; ties by ascending index.
std::vector<std::size_t> rank_variables(const SensitivityReport& report);

SensitivityReport lra_report(const LRAModel& model, std::span<const std::vector<std::size_t>> subsets = {});
SensitivityReport pce_report(const PCEModel& model, std::span<const std::vector<std::size_t>> subsets = {});

}  // namespace tensens
