#include "tensens/config.hpp"

#include <set>

#include "tensens/error.hpp"
#include "tensens/sobol.hpp"

namespace tensens {

namespace {

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "expected an object", path);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) fail(ErrorCode::ConfigError, "unknown field '" + key + "'", path.empty() ? key : path + "." + key);
  }
}

template <class T>
T get(const Json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::ConfigError, std::string("field '") + key + "' has the wrong type", path + "." + key);
  }
}

std::size_t get_count(const Json& j, const char* key, const std::string& path, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0)
    fail(ErrorCode::ConfigError, std::string("field '") + key + "' must be a non-negative integer", path + "." + key);
  return j.at(key).get<std::size_t>();
}

}  // namespace

RunConfig parse_config(const Json& j) {
  check_keys(j, "", {"model", "design", "lra", "pce", "validation", "reference", "output"});
  RunConfig c;

  if (!j.contains("model")) fail(ErrorCode::ConfigError, "missing 'model' section", "model");
  const Json& m = j["model"];
  check_keys(m, "model", {"benchmark", "command", "inputs", "point", "grid", "correlation_length", "threshold"});
  c.model.benchmark = get<std::string>(m, "benchmark", "model", "");
  c.model.command = get<std::string>(m, "command", "model", "");
  if (c.model.benchmark.empty() == c.model.command.empty())
    fail(ErrorCode::ConfigError, "exactly one of 'benchmark' or 'command' is required", "model");
  if (!c.model.benchmark.empty()) {
    const auto names = benchmark_names();
    if (std::find(names.begin(), names.end(), c.model.benchmark) == names.end())
      fail(ErrorCode::ConfigError, "unknown benchmark '" + c.model.benchmark + "'", "model.benchmark");
  }
  if (m.contains("inputs")) {
    try {
      c.model.inputs = input_from_json(m["inputs"]);
    } catch (const Error& e) {
      throw e.within("model");
    }
  }
  if (!c.model.command.empty() && !c.model.inputs)
    fail(ErrorCode::ConfigError, "external models need an 'inputs' list", "model.inputs");
  auto& bo = c.model.benchmark_options;
  bo.eole_point = get<std::array<double, 2>>(m, "point", "model", bo.eole_point);
  bo.eole_grid = get_count(m, "grid", "model", bo.eole_grid);
  bo.eole_correlation_length = get<double>(m, "correlation_length", "model", bo.eole_correlation_length);
  bo.eole_threshold = get<double>(m, "threshold", "model", bo.eole_threshold);

  if (j.contains("design")) {
    const Json& d = j["design"];
    check_keys(d, "design", {"type", "n", "seed", "lhs_candidates"});
    try {
      c.design.kind = parse_design_kind(get<std::string>(d, "type", "design", "sobol"));
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.detail(), "design.type");
    }
    c.design.n = get_count(d, "n", "design", c.design.n);
    c.design.seed = get<std::uint64_t>(d, "seed", "design", c.design.seed);
    c.design.lhs_candidates = get_count(d, "lhs_candidates", "design", c.design.lhs_candidates);
  }
  if (c.design.n < 2) fail(ErrorCode::ConfigError, "design size must be >= 2", "design.n");
  if (c.design.lhs_candidates < 1) fail(ErrorCode::ConfigError, "need at least one LHS candidate", "design.lhs_candidates");

  if (j.contains("lra")) {
    const Json& l = j["lra"];
    check_keys(l, "lra", {"p_grid", "r_max", "i_max", "delta_err_min", "cv_folds", "cv_seed"});
    c.lra.p_grid = get<std::vector<int>>(l, "p_grid", "lra", c.lra.p_grid);
    c.lra.r_max = get_count(l, "r_max", "lra", c.lra.r_max);
    c.lra.I_max = get<int>(l, "i_max", "lra", c.lra.I_max);
    c.lra.delta_err_min = get<double>(l, "delta_err_min", "lra", c.lra.delta_err_min);
    c.lra.cv_folds = get_count(l, "cv_folds", "lra", c.lra.cv_folds);
    c.lra.cv_seed = get<std::uint64_t>(l, "cv_seed", "lra", c.lra.cv_seed);
  }
  if (c.lra.p_grid.empty() || *std::min_element(c.lra.p_grid.begin(), c.lra.p_grid.end()) < 0)
    fail(ErrorCode::ConfigError, "degree grid must be non-empty and non-negative", "lra.p_grid");
  if (c.lra.r_max < 1) fail(ErrorCode::ConfigError, "r_max must be >= 1", "lra.r_max");
  if (c.lra.I_max < 1) fail(ErrorCode::ConfigError, "i_max must be >= 1", "lra.i_max");
  if (c.lra.cv_folds < 2) fail(ErrorCode::ConfigError, "cv_folds must be >= 2", "lra.cv_folds");

  if (j.contains("pce")) {
    const Json& p = j["pce"];
    check_keys(p, "pce", {"p_min", "p_max", "q", "max_basis", "trace_scaling", "patience"});
    c.pce.p_min = get<int>(p, "p_min", "pce", c.pce.p_min);
    c.pce.p_max = get<int>(p, "p_max", "pce", c.pce.p_max);
    c.pce.q_set = get<std::vector<double>>(p, "q", "pce", c.pce.q_set);
    c.pce.max_basis = get_count(p, "max_basis", "pce", c.pce.max_basis);
    c.pce.patience = get<int>(p, "patience", "pce", c.pce.patience);
    const auto ts = get<std::string>(p, "trace_scaling", "pce", "unscaled");
    if (ts == "unscaled") c.pce.trace_scaling = TraceScaling::Unscaled;
    else if (ts == "scaled") c.pce.trace_scaling = TraceScaling::ScaledByN;
    else fail(ErrorCode::ConfigError, "trace_scaling must be 'unscaled' or 'scaled'", "pce.trace_scaling");
  }
  if (c.pce.p_min < 0 || c.pce.p_max < c.pce.p_min)
    fail(ErrorCode::ConfigError, "need 0 <= p_min <= p_max", "pce.p_max");
  if (c.pce.q_set.empty()) fail(ErrorCode::ConfigError, "q list is empty", "pce.q");
  for (double q : c.pce.q_set) {
    if (!(q > 0.0 && q <= 1.0)) fail(ErrorCode::ConfigError, "q values must lie in (0,1]", "pce.q");
  }
  if (c.pce.patience < 1) fail(ErrorCode::ConfigError, "patience must be >= 1", "pce.patience");

  if (j.contains("validation")) {
    const Json& v = j["validation"];
    check_keys(v, "validation", {"n", "seed"});
    ValidationSpec vs;
    vs.n = get_count(v, "n", "validation", 10000);
    vs.seed = get<std::uint64_t>(v, "seed", "validation", vs.seed);
    if (vs.n < 2) fail(ErrorCode::ConfigError, "validation set needs n >= 2", "validation.n");
    c.validation = vs;
  }
  if (j.contains("reference")) {
    const Json& r = j["reference"];
    check_keys(r, "reference", {"n", "seed"});
    c.reference.n = get_count(r, "n", "reference", c.reference.n);
    c.reference.seed = get<std::uint64_t>(r, "seed", "reference", c.reference.seed);
  }
  if (j.contains("output")) {
    check_keys(j["output"], "output", {"dir"});
    c.output_dir = get<std::string>(j["output"], "dir", "output", c.output_dir);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  Json j;
  try {
    j = load_json(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.detail(), "config");
  }
  return parse_config(j);
}

Json config_to_json(const RunConfig& c) {
  Json model = Json::object();
  if (!c.model.benchmark.empty()) model["benchmark"] = c.model.benchmark;
  if (!c.model.command.empty()) model["command"] = c.model.command;
  if (c.model.inputs) model["inputs"] = input_to_json(*c.model.inputs);
  if (c.model.benchmark == "eole-field") {
    model["point"] = c.model.benchmark_options.eole_point;
    model["grid"] = c.model.benchmark_options.eole_grid;
    model["correlation_length"] = c.model.benchmark_options.eole_correlation_length;
    model["threshold"] = c.model.benchmark_options.eole_threshold;
  }
  Json j{{"model", model},
         {"design",
          {{"type", to_string(c.design.kind)},
           {"n", c.design.n},
           {"seed", c.design.seed},
           {"lhs_candidates", c.design.lhs_candidates}}},
         {"lra",
          {{"p_grid", c.lra.p_grid},
           {"r_max", c.lra.r_max},
           {"i_max", c.lra.I_max},
           {"delta_err_min", c.lra.delta_err_min},
           {"cv_folds", c.lra.cv_folds},
           {"cv_seed", c.lra.cv_seed}}},
         {"pce",
          {{"p_min", c.pce.p_min},
           {"p_max", c.pce.p_max},
           {"q", c.pce.q_set},
           {"max_basis", c.pce.max_basis},
           {"patience", c.pce.patience},
           {"trace_scaling", c.pce.trace_scaling == TraceScaling::Unscaled ? "unscaled" : "scaled"}}},
         {"reference", {{"n", c.reference.n}, {"seed", c.reference.seed}}},
         {"output", {{"dir", c.output_dir}}}};
  if (c.validation) j["validation"] = {{"n", c.validation->n}, {"seed", c.validation->seed}};
  return j;
}

std::string config_hash(const RunConfig& config) {
  Json j = config_to_json(config);
  j.erase("output");
  return hex64(fnv1a64(j.dump()));
}

ResolvedModel resolve_model(const ModelSpec& spec) {
  if (!spec.command.empty()) {
    return {"external", "", *spec.inputs, external_model(spec.command), true, std::nullopt};
  }
  auto bm = make_benchmark(spec.benchmark, spec.benchmark_options);
  ResolvedModel r{bm.name, bm.unit, bm.input, batched(bm.evaluate), false, bm.exact};
  if (spec.inputs) {
    if (spec.inputs->dim() != bm.input.dim())
      fail(ErrorCode::ConfigError,
           "benchmark '" + spec.benchmark + "' has " + std::to_string(bm.input.dim()) + " inputs, config lists " +
               std::to_string(spec.inputs->dim()),
           "model.inputs");
    r.input = *spec.inputs;
    r.exact.reset();
  }
  return r;
}

}  // namespace tensens
