#include "tensens/ortho_poly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr double kDomainTol = 1e-12;

void check_legendre_domain(double u) {
  if (!(std::abs(u) <= 1.0 + kDomainTol))
    fail(ErrorCode::DomainError, "Legendre argument " + std::to_string(u) + " outside [-1,1]", "ortho_poly");
}

int max_entry(std::span<const MultiIndex> basis, std::size_t dim) {
  int m = 0;
  for (const auto& a : basis) m = std::max(m, static_cast<int>(a[dim]));
  return m;
}

template <bool Parallel>
Matrix assemble(const PointMatrix& standard, const BasisSpec& spec, std::span<const MultiIndex> basis) {
  const std::size_t M = spec.dim();
  if (static_cast<std::size_t>(standard.cols()) != M)
    fail(ErrorCode::InvalidParameter, "point dimension does not match basis spec", "ortho_poly.basis_matrix");
  std::vector<Matrix> tables(M);
  for (std::size_t i = 0; i < M; ++i) {
    const int p = max_entry(basis, i);
    if (p > spec.max_degree[i])
      fail(ErrorCode::DegreeExceeded, "basis degree exceeds spec in dimension " + std::to_string(i + 1),
           "ortho_poly.basis_matrix");
    tables[i].resize(standard.rows(), p + 1);
    std::vector<double> vals(static_cast<std::size_t>(p + 1));
    for (Eigen::Index n = 0; n < standard.rows(); ++n) {
      eval_orthonormal(spec.families[i], standard(n, static_cast<Eigen::Index>(i)), vals);
      for (int k = 0; k <= p; ++k) tables[i](n, k) = vals[static_cast<std::size_t>(k)];
    }
  }
  Matrix out(standard.rows(), static_cast<Eigen::Index>(basis.size()));
  const auto ncols = static_cast<std::ptrdiff_t>(basis.size());
#pragma omp parallel for schedule(static) if (Parallel)
  for (std::ptrdiff_t c = 0; c < ncols; ++c) {
    auto col = out.col(c);
    col.setOnes();
    const auto& alpha = basis[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < M; ++i) {
      if (alpha[i] != 0) col.array() *= tables[i].col(alpha[i]).array();
    }
  }
  return out;
}

void enumerate(std::size_t M, std::size_t dim, int p_t, double q, double budget, double tol, MultiIndex& current,
               std::vector<MultiIndex>& out, std::size_t cap) {
  if (dim == M) {
    if (out.size() >= cap)
      fail(ErrorCode::SizeOverflow, "truncation set exceeds cap of " + std::to_string(cap) + " indices",
           "ortho_poly.truncation_set");
    out.push_back(current);
    return;
  }
  for (int a = 0; a <= p_t; ++a) {
    const double cost = a == 0 ? 0.0 : std::pow(static_cast<double>(a), q);
    if (cost > budget + tol) break;
    current[dim] = static_cast<std::uint16_t>(a);
    enumerate(M, dim + 1, p_t, q, budget - cost, tol, current, out, cap);
  }
  current[dim] = 0;
}

}  // namespace

PolyFamily family_for(StandardFamily f) {
  return f == StandardFamily::Uniform ? PolyFamily::Legendre : PolyFamily::Hermite;
}

const char* to_string(PolyFamily f) { return f == PolyFamily::Legendre ? "legendre" : "hermite"; }

PolyFamily parse_poly_family(const std::string& s) {
  if (s == "legendre") return PolyFamily::Legendre;
  if (s == "hermite") return PolyFamily::Hermite;
  fail(ErrorCode::UnreadableModel, "unknown polynomial family '" + s + "'", "ortho_poly");
}

double legendre_orthonormal(int k, double u) {
  check_legendre_domain(u);
  if (k < 0) fail(ErrorCode::InvalidParameter, "negative degree", "ortho_poly");
  double prev = 1.0;
  if (k == 0) return 1.0;
  double cur = u;
  for (int j = 1; j < k; ++j) {
    const double next = ((2.0 * j + 1.0) * u * cur - j * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return std::sqrt(2.0 * k + 1.0) * cur;
}

double hermite_orthonormal(int k, double u) {
  if (k < 0) fail(ErrorCode::InvalidParameter, "negative degree", "ortho_poly");
  double prev = 1.0;
  if (k == 0) return 1.0;
  double cur = u;
  for (int j = 1; j < k; ++j) {
    const double next = (u * cur - std::sqrt(static_cast<double>(j)) * prev) / std::sqrt(j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

void eval_orthonormal(PolyFamily family, double u, std::span<double> out) {
  const auto n = out.size();
  if (n == 0) return;
  out[0] = 1.0;
  if (n == 1) return;
  if (family == PolyFamily::Legendre) {
    check_legendre_domain(u);
    // Classical recurrence, normalized afterwards.
    double prev = 1.0, cur = u;
    out[1] = cur;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double jj = static_cast<double>(j);
      const double next = ((2.0 * jj + 1.0) * u * cur - jj * prev) / (jj + 1.0);
      prev = cur;
      cur = next;
      out[j + 1] = cur;
    }
    for (std::size_t k = 1; k < n; ++k) out[k] *= std::sqrt(2.0 * static_cast<double>(k) + 1.0);
  } else {
    out[1] = u;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double jj = static_cast<double>(j);
      out[j + 1] = (u * out[j] - std::sqrt(jj) * out[j - 1]) / std::sqrt(jj + 1.0);
    }
  }
}

int total_degree(const MultiIndex& alpha) {
  int s = 0;
  for (auto a : alpha) s += a;
  return s;
}

double q_norm(const MultiIndex& alpha, double q) {
  double s = 0.0;
  for (auto a : alpha) {
    if (a) s += std::pow(static_cast<double>(a), q);
  }
  return std::pow(s, 1.0 / q);
}

BasisSpec BasisSpec::for_input(const InputModel& input, int degree) {
  BasisSpec spec;
  for (std::size_t i = 0; i < input.dim(); ++i) {
    spec.families.push_back(family_for(input.standard_family(i)));
    spec.max_degree.push_back(degree);
  }
  return spec;
}

double tensor_basis_eval(const MultiIndex& alpha, std::span<const double> u, const BasisSpec& spec) {
  if (alpha.size() != spec.dim() || u.size() != spec.dim())
    fail(ErrorCode::InvalidParameter, "multi-index / point dimension mismatch", "ortho_poly.tensor_basis_eval");
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > spec.max_degree[i])
      fail(ErrorCode::DegreeExceeded, "degree " + std::to_string(alpha[i]) + " exceeds spec in dimension " +
                                          std::to_string(i + 1),
           "ortho_poly.tensor_basis_eval");
    v *= spec.families[i] == PolyFamily::Legendre ? legendre_orthonormal(alpha[i], u[i])
                                                  : hermite_orthonormal(alpha[i], u[i]);
  }
  return v;
}

std::vector<MultiIndex> truncation_set(std::size_t M, int p_t, double q, std::size_t cap) {
  if (M < 1) fail(ErrorCode::InvalidParameter, "dimension must be >= 1", "ortho_poly.truncation_set");
  if (p_t < 0) fail(ErrorCode::InvalidParameter, "total degree must be >= 0", "ortho_poly.truncation_set");
  if (!(q > 0.0 && q <= 1.0)) fail(ErrorCode::InvalidParameter, "q must lie in (0,1]", "ortho_poly.truncation_set");
  const double budget = std::pow(static_cast<double>(p_t), q);
  std::vector<MultiIndex> out;
  MultiIndex current(M, 0);
  enumerate(M, 0, p_t, q, budget, 1e-10 * std::max(1.0, budget), current, out, cap);
  std::stable_sort(out.begin(), out.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a > b;
  });
  return out;
}

std::vector<Matrix> univariate_tables(const PointMatrix& standard, const BasisSpec& spec, int p) {
  std::vector<Matrix> tables(spec.dim());
  std::vector<double> vals(static_cast<std::size_t>(p + 1));
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    tables[i].resize(standard.rows(), p + 1);
    for (Eigen::Index n = 0; n < standard.rows(); ++n) {
      eval_orthonormal(spec.families[i], standard(n, static_cast<Eigen::Index>(i)), vals);
      for (int k = 0; k <= p; ++k) tables[i](n, k) = vals[static_cast<std::size_t>(k)];
    }
  }
  return tables;
}

Matrix basis_matrix(const PointMatrix& standard, const BasisSpec& spec, std::span<const MultiIndex> basis) {
  return assemble<true>(standard, spec, basis);
}

Matrix basis_matrix_serial(const PointMatrix& standard, const BasisSpec& spec, std::span<const MultiIndex> basis) {
  return assemble<false>(standard, spec, basis);
}

}  // namespace tensens
