#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tensens/input_model.hpp"
#include "tensens/sobol.hpp"
#include "tensens/types.hpp"

namespace tensens {

// ---- Sobol g-function -------------------------------------------------------

/// Constants of the 20-dimensional test case.
std::vector<double> sobol_g_constants();

/// prod_i (|4 x_i - 2| + c_i) / (1 + c_i) on [0,1]^M.
double sobol_function(std::span<const double> x, std::span<const double> c);

/// Partial variance 1 / (3 (1 + c_i)^2).
double sobol_g_partial_variance(double c);
double sobol_g_variance(std::span<const double> c);
/// Interaction index of the subset u (0-based).
double sobol_g_interaction(std::span<const double> c, std::span<const std::size_t> u);
/// Closed-subset (first-order) and total indices of u.
double sobol_g_first(std::span<const double> c, std::span<const std::size_t> u);
double sobol_g_total(std::span<const double> c, std::span<const std::size_t> u);

// ---- Products of lognormal factors ------------------------------------------

/// Indices of exp(sum_i s_i Z_i) with independent standard normals Z_i, given
/// the exponent variances s_i^2. Covers the beam deflection and the EOLE field.
std::vector<double> lognormal_product_first(std::span<const double> exponent_variances);
std::vector<double> lognormal_product_total(std::span<const double> exponent_variances);

// ---- Simply supported beam ---------------------------------------------------

/// Midspan deflection P L^3 / (4 E b h^3) in meters.
double beam_deflection(double b, double h, double L, double E, double P);
/// Inputs (b, h, L, E, P) in SI units.
InputModel beam_input();

struct LognormalMoments {
  double mean;
  double std;
};
/// Exact mean and standard deviation (meters) of the deflection under lognormal inputs.
LognormalMoments beam_exact_moments(const InputModel& input);
/// Exponent variances of ln U = ln P + 3 ln L - ln E - ln b - 3 ln h - ln 4, in input order.
std::vector<double> beam_exponent_variances(const InputModel& input);

// ---- 23-bar truss -------------------------------------------------------------

inline constexpr std::size_t kTrussBars = 23;
inline constexpr std::size_t kTrussNodes = 13;

/// Midspan vertical deflection in meters (positive downward). Inputs in SI:
/// (A1, A2, E1, E2, P1..P6).
double truss_deflection(std::span<const double> x);
InputModel truss_input();

// ---- EOLE discretization of a Gaussian field -----------------------------------

struct EoleBasis {
  PointMatrix grid;          // n x 2 grid points
  double correlation_length;
  Vector eigenvalues;        // all n eigenvalues, descending
  Matrix eigenvectors;       // n x n, column i matches eigenvalues(i)
  std::size_t retained = 0;  // smallest M reaching the variance threshold
};

/// Regular nx x ny grid over [x0,x1] x [y0,y1].
PointMatrix square_grid(std::size_t nx, std::size_t ny, double x0, double x1, double y0, double y1);

/// Squared-exponential correlation exp(-|z - z'|^2 / l^2).
double gaussian_correlation(std::span<const double> z1, std::span<const double> z2, double ell);

EoleBasis eole_basis(const PointMatrix& grid, double ell, double threshold);

/// Coefficients c_i = phi_i^T C(z, grid) / sqrt(l_i) for the retained modes,
/// so that g(z) = sum_i xi_i c_i.
Vector eole_coefficients(const EoleBasis& basis, std::span<const double> z);
double eole_field_eval(const EoleBasis& basis, std::span<const double> xi, std::span<const double> z);

/// Lognormal transform with the given mean and standard deviation of kappa.
struct LognormalField {
  double a;
  double b;
};
LognormalField lognormal_field(double mean, double std);

// ---- Registry ---------------------------------------------------------------------

struct ExactReference {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> first;
  std::vector<double> total;
};

struct BenchmarkOptions {
  std::array<double, 2> eole_point{-0.25, -0.25};
  std::size_t eole_grid = 11;
  double eole_correlation_length = 0.2;
  double eole_threshold = 0.99;
};

struct BenchmarkModel {
  std::string name;
  std::string description;
  std::string unit;  // unit of the reported response
  InputModel input;
  Evaluator evaluate;  // physical point -> response in `unit`
  std::optional<ExactReference> exact;
};

std::vector<std::string> benchmark_names();
/// ConfigError for unknown names.
BenchmarkModel make_benchmark(const std::string& name, const BenchmarkOptions& options = {});

/// Runs `command` through the shell with the points as CSV on standard input
/// (header x1..xM) and reads one response per line from standard output.
Vector evaluate_external(const std::string& command, const PointMatrix& physical);
BatchEvaluator external_model(std::string command);

}  // namespace tensens
