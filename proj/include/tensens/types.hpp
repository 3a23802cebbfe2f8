#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

namespace tensens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Point sets are stored one point per row so a point is a contiguous span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A black-box model: physical input point -> scalar response.
using Evaluator = std::function<double(std::span<const double>)>;
/// A model evaluated on a whole physical point set, one response per row.
using BatchEvaluator = std::function<Vector(const PointMatrix&)>;

inline std::span<const double> row_span(const PointMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}
inline std::span<double> row_span(PointMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// SplitMix64 finalizer; used to derive independent seeds for substreams.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tensens
