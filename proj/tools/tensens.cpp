#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tensens/benchmarks.hpp"
#include "tensens/config.hpp"
#include "tensens/error.hpp"
#include "tensens/io.hpp"
#include "tensens/lra.hpp"
#include "tensens/pce.hpp"
#include "tensens/sobol.hpp"

using namespace tensens;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kExternal = 4 };

int log_level() {
  static const int level = [] {
    const char* v = std::getenv("TS_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
  }();
  return level;
}

template <class... Args>
void log(int level, const char* fmt, Args... args) {
  if (log_level() < level) return;
  std::fprintf(stderr, "[tensens] ");
  if constexpr (sizeof...(Args) == 0) std::fputs(fmt, stderr);
  else std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnreadableModel: return kConfig;
    case ErrorCode::ModelFailure: return kExternal;
    default: return kNumerical;
  }
}

struct CommonOptions {
  std::string config;
  std::string benchmark;
  std::string design;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::size_t lhs_candidates = 0;
  int jobs = 0;
  std::string out;
  std::vector<int> degrees;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "Run configuration (JSON)");
  app->add_option("--benchmark", o.benchmark, "Registry model, used when no config is given");
  app->add_option("--design", o.design, "Experimental design: sobol|lhs|random");
  app->add_option("--n", o.n, "Experimental design size");
  app->add_option("--seed", o.seed, "Design seed");
  app->add_option("--lhs-candidates", o.lhs_candidates, "Candidate LHS designs for the maximin criterion");
  app->add_option("--jobs", o.jobs, "Worker threads (default: all)");
  app->add_option("--out", o.out, "Output directory");
}

RunConfig make_config(const CommonOptions& o) {
  RunConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else if (!o.benchmark.empty()) {
    c = parse_config(Json{{"model", {{"benchmark", o.benchmark}}}});
  } else {
    fail(ErrorCode::ConfigError, "either --config or --benchmark is required", "config");
  }
  if (!o.design.empty()) {
    try {
      c.design.kind = parse_design_kind(o.design);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.detail(), "--design");
    }
  }
  if (o.n) c.design.n = o.n;
  if (o.seed) c.design.seed = *o.seed;
  if (o.lhs_candidates) c.design.lhs_candidates = o.lhs_candidates;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.degrees.empty()) c.lra.p_grid = o.degrees;
  return c;
}

void apply_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

ReportHeader header_for(const RunConfig& c) {
  return {config_hash(c),
          {{"design", c.design.seed}, {"cv", c.lra.cv_seed}, {"validation", c.validation ? c.validation->seed : 0}},
          {}};
}

ExperimentalDesign build_design(const RunConfig& c, const ResolvedModel& model, std::uint64_t seed) {
  auto ed = generate_design(c.design.kind, model.input, c.design.n, seed, c.design.lhs_candidates);
  log(1, "evaluating %s at %zu design points", model.name.c_str(), ed.size());
  ed.responses = model.evaluate(ed.physical);
  return ed;
}

std::optional<double> validation_error(const RunConfig& c, const ResolvedModel& model,
                                       const std::function<Vector(const PointMatrix&)>& predict) {
  if (!c.validation) return std::nullopt;
  const auto val = generate_design(DesignKind::Random, model.input, c.validation->n, c.validation->seed);
  const Vector y = model.evaluate(val.physical);
  return generalization_error_rel(y, predict(val.standard));
}

std::string output_path(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.output_dir);
  return (std::filesystem::path(c.output_dir) / file).string();
}

void write_csv(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  out << text;
  if (!out) fail(ErrorCode::ConfigError, "cannot write '" + path + "'", "output");
}

std::string fmt_opt(const std::optional<double>& v) { return v ? format_number(*v) : "n/a"; }

int run_build(const CommonOptions& o, bool lra, const std::string& subsets_text) {
  apply_jobs(o.jobs);
  const RunConfig c = make_config(o);
  const auto model = resolve_model(c.model);
  const auto subsets = parse_subsets(subsets_text, model.input.dim());
  const auto ed = build_design(c, model, c.design.seed);
  const std::string stem = model.name + (lra ? "_lra" : "_pce");
  SensitivityReport report;
  Json j;
  if (lra) {
    log(1, "building LRA over %zu degrees, r_max=%zu", c.lra.p_grid.size(), c.lra.r_max);
    auto m = select_degree(ed, model.input, c.lra);
    m.errors.generalization_rel = validation_error(c, model, [&](const PointMatrix& u) { return lra_predict(m, u); });
    report = lra_report(m, subsets);
    j = to_json(m);
    std::printf("lra degree=%d rank=%zu cv3=%s empirical=%s generalization=%s\n", m.degree, m.rank(),
                fmt_opt(m.errors.cv_k_rel).c_str(), fmt_opt(m.errors.empirical_rel).c_str(),
                fmt_opt(m.errors.generalization_rel).c_str());
  } else {
    log(1, "building PCE for p_t in [%d, %d]", c.pce.p_min, c.pce.p_max);
    auto m = build_pce(ed, model.input, c.pce);
    m.errors.generalization_rel = validation_error(c, model, [&](const PointMatrix& u) { return pce_predict(m, u); });
    report = pce_report(m, subsets);
    j = to_json(m);
    std::printf("pce p_t=%d q=%s terms=%zu loo_corrected=%s empirical=%s generalization=%s\n", m.p_t,
                format_number(m.q).c_str(), m.terms.size(), fmt_opt(m.errors.loo_corrected_rel).c_str(),
                fmt_opt(m.errors.empirical_rel).c_str(), fmt_opt(m.errors.generalization_rel).c_str());
  }
  report.sample_size = ed.size();
  j["config_hash"] = config_hash(c);
  j["design"] = {{"type", to_string(c.design.kind)}, {"n", ed.size()}, {"seed", c.design.seed}};
  const auto model_path = output_path(c, stem + ".json");
  save_json(model_path, j);
  std::ostringstream csv;
  write_report_csv(csv, report, header_for(c));
  const auto report_path = output_path(c, stem + ".csv");
  write_csv(report_path, csv.str());
  std::printf("wrote %s\nwrote %s\n", model_path.c_str(), report_path.c_str());
  return kOk;
}

int run_sobol(const std::string& model_path, const std::string& subsets_text, const std::string& out) {
  const auto any = load_model(model_path);
  const Json raw = load_json(model_path);
  ReportHeader header{raw.value("config_hash", std::string("none")), {}, {{"model", model_path}}};
  SensitivityReport report;
  std::visit(
      [&](const auto& m) {
        const auto subsets = parse_subsets(subsets_text, m.input.dim());
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LRAModel>) report = lra_report(m, subsets);
        else report = pce_report(m, subsets);
      },
      any);
  if (raw.contains("design") && raw["design"].contains("n")) report.sample_size = raw["design"]["n"].get<std::size_t>();
  std::ostringstream csv;
  write_report_csv(csv, report, header);
  write_csv(out, csv.str());
  return kOk;
}

int run_reference(const CommonOptions& o, std::size_t n_mc, std::optional<std::uint64_t> mc_seed,
                  const std::string& subsets_text, const std::string& out) {
  apply_jobs(o.jobs);
  RunConfig c = make_config(o);
  if (n_mc) c.reference.n = n_mc;
  if (mc_seed) c.reference.seed = *mc_seed;
  const auto model = resolve_model(c.model);
  const auto subsets = parse_subsets(subsets_text, model.input.dim());
  log(1, "pick-freeze reference for %s with n=%zu", model.name.c_str(), c.reference.n);
  auto report = pick_freeze_report(model.evaluate, model.input, c.reference.n, c.reference.seed);
  for (const auto& u : subsets) {
    const auto pf = pick_freeze_indices(model.evaluate, model.input, c.reference.n, u, c.reference.seed);
    report.subsets.push_back({u, pf.first.value, pf.total.value, 0.0});
  }
  ReportHeader header{config_hash(c), {{"reference", c.reference.seed}}, {}};
  std::ostringstream csv;
  write_report_csv(csv, report, header);
  write_csv(out.empty() ? output_path(c, model.name + "_reference.csv") : out, csv.str());
  return kOk;
}

int run_benchmark(const std::string& name, const std::string& out) {
  std::ostringstream csv;
  csv << "# tensens " << version() << '\n';
  csv << "benchmark,variable,family,first_order,total,mean,std,unit\n";
  std::vector<std::string> names = name.empty() ? benchmark_names() : std::vector<std::string>{name};
  for (const auto& n : names) {
    const auto bm = make_benchmark(n);
    for (std::size_t i = 0; i < bm.input.dim(); ++i) {
      csv << bm.name << ',' << bm.input.name(i) << ',' << bm.input.marginal(i).family_name() << ',';
      if (bm.exact) {
        csv << format_number(bm.exact->first[i]) << ',' << format_number(bm.exact->total[i]) << ','
            << format_number(bm.exact->mean) << ',' << format_number(bm.exact->std);
      } else {
        csv << ",,,";
      }
      csv << ',' << bm.unit << '\n';
    }
  }
  write_csv(out, csv.str());
  return kOk;
}

struct CellResult {
  std::size_t N;
  std::size_t replication;
  std::string method;
  std::string status = "ok";
  std::optional<SensitivityReport> report{};
  std::optional<double> generalization{};
};

int run_convergence(const CommonOptions& o, const std::string& n_list, std::size_t replications,
                    const std::string& methods_text, const std::string& out) {
  RunConfig c = make_config(o);
  const auto model = resolve_model(c.model);
  std::vector<std::size_t> Ns;
  {
    std::stringstream ss(n_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        Ns.push_back(std::stoul(item));
      } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "bad design size '" + item + "'", "--n-list");
      }
    }
  }
  if (Ns.empty()) fail(ErrorCode::ConfigError, "empty design size list", "--n-list");
  if (replications < 1) fail(ErrorCode::ConfigError, "need at least one replication", "--replications");
  std::vector<std::string> methods;
  if (methods_text == "both") methods = {"lra", "pce"};
  else if (methods_text == "lra" || methods_text == "pce") methods = {methods_text};
  else fail(ErrorCode::ConfigError, "method must be lra|pce|both", "--method");

  std::vector<double> ref_first, ref_total;
  if (model.exact) {
    ref_first = model.exact->first;
    ref_total = model.exact->total;
  } else if (c.reference.n > 0) {
    log(1, "computing pick-freeze reference with n=%zu", c.reference.n);
    const auto r = pick_freeze_report(model.evaluate, model.input, c.reference.n, c.reference.seed);
    ref_first = r.first;
    ref_total = r.total;
  }

  std::vector<CellResult> cells;
  for (auto N : Ns)
    for (std::size_t r = 0; r < replications; ++r)
      for (const auto& m : methods) cells.push_back({N, r, m});

  const int jobs = o.jobs > 0 ? o.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(cells.size()); ++k) {
    auto& cell = cells[k];
    try {
      RunConfig cc = c;
      cc.design.n = cell.N;
      const std::uint64_t seed = mix_seed(c.design.seed, cell.replication);
      const auto ed = build_design(cc, model, seed);
      if (cell.method == "lra") {
        const auto m = select_degree(ed, model.input, c.lra);
        cell.report = lra_report(m);
        cell.generalization = validation_error(c, model, [&](const PointMatrix& u) { return lra_predict(m, u); });
      } else {
        const auto m = build_pce(ed, model.input, c.pce);
        cell.report = pce_report(m);
        cell.generalization = validation_error(c, model, [&](const PointMatrix& u) { return pce_predict(m, u); });
      }
    } catch (const Error& e) {
      cell.status = std::string("failed:") + std::string(to_string(e.code()));
      log(1, "cell N=%zu rep=%zu %s failed: %s", cell.N, cell.replication, cell.method.c_str(), e.what());
    }
  }

  std::ostringstream csv;
  write_header(csv, header_for(c));
  csv << "N,replication,method,status,variable,first_order,total,first_ref,total_ref,first_delta,total_delta,"
         "generalization_rel\n";
  for (const auto& cell : cells) {
    const std::string prefix =
        std::to_string(cell.N) + ',' + std::to_string(cell.replication) + ',' + cell.method + ',' + cell.status + ',';
    const std::string gen = cell.generalization ? format_number(*cell.generalization) : "";
    if (!cell.report) {
      csv << prefix << ",,,,,,," << gen << '\n';
      continue;
    }
    const auto& r = *cell.report;
    for (std::size_t i = 0; i < r.names.size(); ++i) {
      csv << prefix << r.names[i] << ',' << format_number(r.first[i]) << ',' << format_number(r.total[i]) << ',';
      if (!ref_first.empty()) {
        csv << format_number(ref_first[i]) << ',' << format_number(ref_total[i]) << ','
            << format_number(r.first[i] - ref_first[i]) << ',' << format_number(r.total[i] - ref_total[i]);
      } else {
        csv << ",,,";
      }
      csv << ',' << gen << '\n';
    }
  }
  write_csv(out.empty() ? output_path(c, model.name + "_convergence.csv") : out, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobol' sensitivity analysis with low-rank tensor and polynomial chaos meta-models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  CommonOptions build_lra_o, build_pce_o, ref_o, conv_o;
  std::string lra_subsets, pce_subsets;
  auto* build_lra = app.add_subcommand("build-lra", "Fit a low-rank approximation and report its Sobol' indices");
  add_common(build_lra, build_lra_o);
  build_lra->add_option("--degree", build_lra_o.degrees, "Candidate degrees (overrides lra.p_grid)");
  build_lra->add_option("--subsets", lra_subsets, "Extra subsets, e.g. \"1,2;2,3\"");
  auto* build_pce = app.add_subcommand("build-pce", "Fit a sparse polynomial chaos expansion and report its indices");
  add_common(build_pce, build_pce_o);
  build_pce->add_option("--subsets", pce_subsets, "Extra subsets, e.g. \"1,2;2,3\"");

  std::string model_path, sobol_subsets, sobol_out = "-";
  auto* sobol = app.add_subcommand("sobol", "Sobol' indices of a saved model file");
  sobol->add_option("--model", model_path, "Model file written by build-lra or build-pce")->required();
  sobol->add_option("--subsets", sobol_subsets, "Extra subsets, e.g. \"1,2;2,3\"");
  sobol->add_option("--out", sobol_out, "CSV path (default: standard output)");

  std::size_t ref_n = 0;
  std::optional<std::uint64_t> ref_seed;
  std::string ref_subsets, ref_out;
  auto* reference = app.add_subcommand("reference", "Monte-Carlo pick-freeze reference indices");
  add_common(reference, ref_o);
  reference->add_option("--mc-n", ref_n, "Monte-Carlo sample size");
  reference->add_option("--mc-seed", ref_seed, "Monte-Carlo seed");
  reference->add_option("--subsets", ref_subsets, "Extra subsets, e.g. \"1,2\"");
  reference->add_option("--csv", ref_out, "CSV path (default: <out>/<model>_reference.csv)");

  std::string bench_name, bench_out = "-";
  auto* benchmark = app.add_subcommand("benchmark", "List registry models with their exact references");
  benchmark->add_option("--name", bench_name, "Single registry model");
  benchmark->add_option("--csv", bench_out, "CSV path (default: standard output)");

  std::string n_list, conv_method = "lra", conv_out;
  std::size_t replications = 1;
  auto* convergence = app.add_subcommand("convergence", "Index estimates and errors over a list of design sizes");
  add_common(convergence, conv_o);
  convergence->add_option("--n-list", n_list, "Comma-separated design sizes")->required();
  convergence->add_option("--replications", replications, "Designs per size (seeded substreams)");
  convergence->add_option("--method", conv_method, "lra|pce|both");
  convergence->add_option("--csv", conv_out, "CSV path (default: <out>/<model>_convergence.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*build_lra) return run_build(build_lra_o, true, lra_subsets);
    if (*build_pce) return run_build(build_pce_o, false, pce_subsets);
    if (*sobol) return run_sobol(model_path, sobol_subsets, sobol_out);
    if (*reference) return run_reference(ref_o, ref_n, ref_seed, ref_subsets, ref_out);
    if (*benchmark) return run_benchmark(bench_name, bench_out);
    if (*convergence) return run_convergence(conv_o, n_list, replications, conv_method, conv_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
