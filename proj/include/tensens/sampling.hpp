#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>

#include "tensens/input_model.hpp"
#include "tensens/types.hpp"

namespace tensens {

inline constexpr std::size_t kMaxSobolDimension = 64;

/// First N points of the Sobol sequence in M dimensions (Joe-Kuo direction
/// numbers), skipping the initial all-zeros point.
PointMatrix sobol_sequence(std::size_t M, std::size_t N);

/// Minimum pairwise Euclidean distance between rows.
double min_pairwise_distance(const PointMatrix& points);

/// Index of the candidate with the largest minimum pairwise distance; ties go
/// to the lowest index.
std::size_t select_maximin(std::span<const PointMatrix> candidates);

/// One random LHS: stratum permutations per column with uniform jitter.
PointMatrix random_lhs(std::size_t M, std::size_t N, std::mt19937_64& rng);

/// Best of `n_candidates` random LHS designs by the maximin criterion.
/// Candidate k draws from its own substream of `seed`.
PointMatrix maximin_lhs(std::size_t M, std::size_t N, std::size_t n_candidates, std::uint64_t seed);

/// i.i.d. uniform points in (0,1) from mt19937_64 seeded with `seed`.
PointMatrix pseudo_random(std::size_t M, std::size_t N, std::uint64_t seed);

/// Uniform double in the open interval (0,1) built from 53 random bits.
inline double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

struct SobolProvenance {};
struct MaximinLhsProvenance {
  std::uint64_t seed;
  std::size_t n_candidates;
};
struct PseudoRandomProvenance {
  std::uint64_t seed;
};
using DesignProvenance = std::variant<SobolProvenance, MaximinLhsProvenance, PseudoRandomProvenance>;

enum class DesignKind { Sobol, Lhs, Random };
DesignKind parse_design_kind(const std::string& s);
std::string to_string(DesignKind kind);

struct ExperimentalDesign {
  PointMatrix unit;
  PointMatrix physical;
  PointMatrix standard;
  std::optional<Vector> responses;
  DesignProvenance provenance;

  std::size_t size() const { return static_cast<std::size_t>(unit.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(unit.cols()); }
  const Vector& y() const;
};

/// Maps unit-hypercube points into physical and standardized coordinates.
ExperimentalDesign make_design(PointMatrix unit, const InputModel& input, DesignProvenance provenance);

/// Builds a design from a standardized point set (used by MC and tests).
ExperimentalDesign design_from_standard(const PointMatrix& standard, const InputModel& input);

ExperimentalDesign generate_design(DesignKind kind, const InputModel& input, std::size_t N, std::uint64_t seed,
                                   std::size_t lhs_candidates = 5);

/// Rows `idx` of the design (responses included when present).
ExperimentalDesign subset(const ExperimentalDesign& ed, std::span<const std::size_t> idx);

}  // namespace tensens
