#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensens/input_model.hpp"
#include "tensens/ortho_poly.hpp"
#include "tensens/regression.hpp"
#include "tensens/sampling.hpp"

namespace tensens {

struct PCEOptions {
  int p_min = 1;
  int p_max = 20;
  std::vector<double> q_set{0.5, 0.75, 1.0};
  /// Candidate bases larger than this are skipped (and end the sweep over p_t for that q).
  std::size_t max_basis = 20'000;
  TraceScaling trace_scaling = TraceScaling::Unscaled;
  /// Consecutive p_t increases without improvement before a q sweep stops.
  int patience = 2;
};

struct PCECandidate {
  int p_t;
  double q;
  std::size_t basis_size;
  std::size_t active_size;
  double loo_corrected;
};

struct PCEModel {
  InputModel input;
  BasisSpec spec;
  std::vector<MultiIndex> terms;  // terms[0] is the zero index
  Vector coefficients;
  int p_t = 0;
  double q = 1.0;
  ErrorReport errors{};
  std::vector<PCECandidate> trace{};
};

/// Sparse PCE by hybrid LAR over the (p_t, q) grid, selected by corrected LOO.
PCEModel build_pce(const ExperimentalDesign& ed, const InputModel& input, const PCEOptions& options = {});

/// Best hybrid-LAR model for a single candidate basis. Returns the selected
/// term indices into `basis` (always starting with the zero index) and the
/// corrected LOO error.
struct HybridLarFit {
  std::vector<std::size_t> selected;
  double loo_corrected;
};
HybridLarFit hybrid_lar(const Matrix& Psi, const Vector& y, TraceScaling scaling = TraceScaling::Unscaled);

double pce_eval(const PCEModel& model, std::span<const double> x_physical);
double pce_eval_standard(const PCEModel& model, std::span<const double> u);
/// Predictions at standardized points, one per row.
Vector pce_predict(const PCEModel& model, const PointMatrix& standard);

double pce_mean(const PCEModel& model);
double pce_variance(const PCEModel& model);

/// Subsets are 0-based variable indices.
double pce_sobol_first(const PCEModel& model, std::span<const std::size_t> u);
double pce_sobol_total(const PCEModel& model, std::span<const std::size_t> u);
/// Variance share of the terms whose support is exactly u.
double pce_sobol_interaction(const PCEModel& model, std::span<const std::size_t> u);

}  // namespace tensens
