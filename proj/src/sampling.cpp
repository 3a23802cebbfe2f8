#include "tensens/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "tensens/error.hpp"

namespace tensens {

namespace {

struct DirectionNumbers {
  unsigned degree;
  unsigned coeffs;
  std::array<std::uint32_t, 18> m;
};

constexpr DirectionNumbers kDirections[] = {
#include "sobol_directions.inc"
};
static_assert(std::size(kDirections) == kMaxSobolDimension - 1);

constexpr unsigned kBits = 32;

std::array<std::uint32_t, kBits> direction_vector(std::size_t dim) {
  std::array<std::uint32_t, kBits> v{};
  if (dim == 0) {
    for (unsigned k = 0; k < kBits; ++k) v[k] = 1u << (31 - k);
    return v;
  }
  const auto& d = kDirections[dim - 1];
  const unsigned s = d.degree;
  for (unsigned k = 0; k < std::min(s, kBits); ++k) v[k] = d.m[k] << (31 - k);
  for (unsigned k = s; k < kBits; ++k) {
    std::uint32_t x = v[k - s] ^ (v[k - s] >> s);
    for (unsigned j = 1; j < s; ++j) {
      if ((d.coeffs >> (s - 1 - j)) & 1u) x ^= v[k - j];
    }
    v[k] = x;
  }
  return v;
}

unsigned rightmost_zero_bit(std::uint64_t n) {
  unsigned c = 0;
  while (n & 1u) {
    n >>= 1;
    ++c;
  }
  return c;
}

}  // namespace

PointMatrix sobol_sequence(std::size_t M, std::size_t N) {
  if (M < 1 || M > kMaxSobolDimension)
    fail(ErrorCode::DimensionTooLarge, "Sobol sequence supports 1 <= M <= 64, got " + std::to_string(M),
         "sampling.sobol_sequence");
  if (N < 1 || N >= (std::size_t{1} << kBits))
    fail(ErrorCode::InvalidParameter, "Sobol sequence length must be in [1, 2^32)", "sampling.sobol_sequence");

  std::vector<std::array<std::uint32_t, kBits>> dirs(M);
  for (std::size_t j = 0; j < M; ++j) dirs[j] = direction_vector(j);

  PointMatrix pts(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  std::vector<std::uint32_t> x(M, 0);
  constexpr double scale = 0x1.0p-32;
  // Point n is reached from point n-1 by one Gray-code step; point 0 is skipped.
  for (std::size_t n = 1; n <= N; ++n) {
    const unsigned c = rightmost_zero_bit(n - 1);
    for (std::size_t j = 0; j < M; ++j) {
      x[j] ^= dirs[j][c];
      pts(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(j)) = x[j] * scale;
    }
  }
  return pts;
}

double min_pairwise_distance(const PointMatrix& points) {
  const Eigen::Index n = points.rows();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

std::size_t select_maximin(std::span<const PointMatrix> candidates) {
  if (candidates.empty()) fail(ErrorCode::InvalidParameter, "no candidate designs", "sampling.select_maximin");
  std::vector<double> score(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(candidates.size()); ++k) {
    score[k] = min_pairwise_distance(candidates[k]);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < score.size(); ++k) {
    if (score[k] > score[best]) best = k;
  }
  return best;
}

PointMatrix random_lhs(std::size_t M, std::size_t N, std::mt19937_64& rng) {
  PointMatrix pts(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  std::vector<std::size_t> perm(N);
  for (std::size_t j = 0; j < M; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < N; ++i) {
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(perm[i]) + open_unit(rng)) / static_cast<double>(N);
    }
  }
  return pts;
}

PointMatrix maximin_lhs(std::size_t M, std::size_t N, std::size_t n_candidates, std::uint64_t seed) {
  if (N < 2) fail(ErrorCode::InvalidParameter, "maximin LHS needs N >= 2", "sampling.maximin_lhs");
  if (n_candidates < 1) fail(ErrorCode::InvalidParameter, "need at least one LHS candidate", "sampling.maximin_lhs");
  if (M < 1) fail(ErrorCode::InvalidParameter, "dimension must be >= 1", "sampling.maximin_lhs");
  std::vector<PointMatrix> candidates(n_candidates);
  for (std::size_t k = 0; k < n_candidates; ++k) {
    std::mt19937_64 rng(mix_seed(seed, k));
    candidates[k] = random_lhs(M, N, rng);
  }
  return std::move(candidates[select_maximin(candidates)]);
}

PointMatrix pseudo_random(std::size_t M, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PointMatrix pts(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = open_unit(rng);
  }
  return pts;
}

DesignKind parse_design_kind(const std::string& s) {
  if (s == "sobol") return DesignKind::Sobol;
  if (s == "lhs") return DesignKind::Lhs;
  if (s == "random") return DesignKind::Random;
  fail(ErrorCode::ConfigError, "unknown design type '" + s + "' (expected sobol|lhs|random)", "design.type");
}

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::Sobol: return "sobol";
    case DesignKind::Lhs: return "lhs";
    case DesignKind::Random: return "random";
  }
  return "unknown";
}

const Vector& ExperimentalDesign::y() const {
  if (!responses) fail(ErrorCode::InvalidParameter, "experimental design has no responses", "design");
  return *responses;
}

ExperimentalDesign make_design(PointMatrix unit, const InputModel& input, DesignProvenance provenance) {
  if (static_cast<std::size_t>(unit.cols()) != input.dim())
    fail(ErrorCode::InvalidParameter, "design dimension does not match input model", "design");
  if (unit.rows() < 1) fail(ErrorCode::InvalidParameter, "design must contain at least one point", "design");
  ExperimentalDesign ed;
  ed.standard.resize(unit.rows(), unit.cols());
  ed.physical.resize(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    for (Eigen::Index j = 0; j < unit.cols(); ++j) {
      const auto& m = input.marginal(static_cast<std::size_t>(j));
      ed.standard(i, j) = m.standard_from_unit(unit(i, j));
      ed.physical(i, j) = m.from_standard(ed.standard(i, j));
    }
  }
  ed.unit = std::move(unit);
  ed.provenance = provenance;
  return ed;
}

ExperimentalDesign design_from_standard(const PointMatrix& standard, const InputModel& input) {
  ExperimentalDesign ed;
  ed.standard = standard;
  ed.physical.resize(standard.rows(), standard.cols());
  ed.unit.resize(standard.rows(), standard.cols());
  for (Eigen::Index i = 0; i < standard.rows(); ++i) {
    for (Eigen::Index j = 0; j < standard.cols(); ++j) {
      const auto& m = input.marginal(static_cast<std::size_t>(j));
      const double u = standard(i, j);
      ed.physical(i, j) = m.from_standard(u);
      ed.unit(i, j) = m.standard_family() == StandardFamily::Uniform ? 0.5 * (u + 1.0) : normal_cdf(u);
    }
  }
  ed.provenance = PseudoRandomProvenance{0};
  return ed;
}

ExperimentalDesign generate_design(DesignKind kind, const InputModel& input, std::size_t N, std::uint64_t seed,
                                   std::size_t lhs_candidates) {
  const std::size_t M = input.dim();
  switch (kind) {
    case DesignKind::Sobol: return make_design(sobol_sequence(M, N), input, SobolProvenance{});
    case DesignKind::Lhs:
      return make_design(maximin_lhs(M, N, lhs_candidates, seed), input,
                         MaximinLhsProvenance{seed, lhs_candidates});
    case DesignKind::Random: return make_design(pseudo_random(M, N, seed), input, PseudoRandomProvenance{seed});
  }
  fail(ErrorCode::ConfigError, "unknown design kind", "design");
}

ExperimentalDesign subset(const ExperimentalDesign& ed, std::span<const std::size_t> idx) {
  ExperimentalDesign out;
  const auto n = static_cast<Eigen::Index>(idx.size());
  out.unit.resize(n, ed.unit.cols());
  out.physical.resize(n, ed.physical.cols());
  out.standard.resize(n, ed.standard.cols());
  if (ed.responses) out.responses = Vector(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
    out.unit.row(r) = ed.unit.row(src);
    out.physical.row(r) = ed.physical.row(src);
    out.standard.row(r) = ed.standard.row(src);
    if (ed.responses) (*out.responses)(r) = (*ed.responses)(src);
  }
  out.provenance = ed.provenance;
  return out;
}

}  // namespace tensens
