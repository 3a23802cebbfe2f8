#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tensens/benchmarks.hpp"
#include "tensens/io.hpp"
#include "tensens/lra.hpp"
#include "tensens/pce.hpp"
#include "tensens/sampling.hpp"

namespace tensens {

struct ModelSpec {
  std::string benchmark;  // registry name, or empty for an external command
  std::string command;
  std::optional<InputModel> inputs;  // required for external commands, overrides benchmark inputs
  BenchmarkOptions benchmark_options;
};

struct DesignSpec {
  DesignKind kind = DesignKind::Sobol;
  std::size_t n = 50;
  std::uint64_t seed = 0;
  std::size_t lhs_candidates = 5;
};

struct ValidationSpec {
  std::size_t n = 0;
  std::uint64_t seed = 1;
};

struct ReferenceSpec {
  std::size_t n = 100000;
  std::uint64_t seed = 2;
};

struct RunConfig {
  ModelSpec model;
  DesignSpec design;
  LRAOptions lra;
  PCEOptions pce;
  std::optional<ValidationSpec> validation;
  ReferenceSpec reference;
  std::string output_dir = ".";
};

/// Parses and validates a config document. Errors are ConfigError with the
/// offending field path as the stage.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

/// Canonical form including defaults; its hash (output location excluded) identifies a run.
Json config_to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

struct ResolvedModel {
  std::string name;
  std::string unit;
  InputModel input;
  BatchEvaluator evaluate;
  bool external = false;
  std::optional<ExactReference> exact;
};

ResolvedModel resolve_model(const ModelSpec& spec);

}  // namespace tensens
