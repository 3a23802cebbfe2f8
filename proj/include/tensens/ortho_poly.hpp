#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tensens/input_model.hpp"
#include "tensens/types.hpp"

namespace tensens {

enum class PolyFamily { Legendre, Hermite };

PolyFamily family_for(StandardFamily f);
const char* to_string(PolyFamily f);
PolyFamily parse_poly_family(const std::string& s);

/// sqrt(2k+1) * L_k(u), orthonormal under U(-1,1).
double legendre_orthonormal(int k, double u);
/// He_k(u) / sqrt(k!), orthonormal under N(0,1).
double hermite_orthonormal(int k, double u);

/// Writes degrees 0..out.size()-1 of the orthonormal family at u.
void eval_orthonormal(PolyFamily family, double u, std::span<double> out);

using MultiIndex = std::vector<std::uint16_t>;

int total_degree(const MultiIndex& alpha);
double q_norm(const MultiIndex& alpha, double q);

struct BasisSpec {
  std::vector<PolyFamily> families;
  std::vector<int> max_degree;

  std::size_t dim() const { return families.size(); }
  static BasisSpec for_input(const InputModel& input, int degree);
};

double tensor_basis_eval(const MultiIndex& alpha, std::span<const double> u, const BasisSpec& spec);

inline constexpr std::size_t kDefaultTruncationCap = 10'000'000;

/// {alpha : ||alpha||_q <= p_t}, sorted by total degree then reverse-lexicographically,
/// so the zero index comes first.
std::vector<MultiIndex> truncation_set(std::size_t M, int p_t, double q,
                                       std::size_t cap = kDefaultTruncationCap);

/// Univariate evaluations for a point set: result[i] is an N x (p+1) matrix
/// holding degrees 0..p of dimension i at every point.
std::vector<Matrix> univariate_tables(const PointMatrix& standard, const BasisSpec& spec, int p);

/// N x |basis| matrix of tensor-product basis values (OpenMP over columns).
Matrix basis_matrix(const PointMatrix& standard, const BasisSpec& spec, std::span<const MultiIndex> basis);
/// Single-threaded reference for `basis_matrix`.
Matrix basis_matrix_serial(const PointMatrix& standard, const BasisSpec& spec, std::span<const MultiIndex> basis);

}  // namespace tensens
