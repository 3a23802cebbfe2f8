#include "tensens/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tensens/error.hpp"

namespace tensens {

namespace {

constexpr const char* kModelStage = "io.model";

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string subset_label(const std::vector<std::size_t>& u) {
  std::string s = "u=";
  for (std::size_t k = 0; k < u.size(); ++k) s += (k ? "," : "") + std::to_string(u[k] + 1);
  return s;
}

Json families_to_json(const BasisSpec& spec) {
  Json f = Json::array();
  for (auto fam : spec.families) f.push_back(to_string(fam));
  return f;
}

}  // namespace

const char* version() { return TENSENS_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json marginal_to_json(const NamedMarginal& m) {
  Json j{{"name", m.name}, {"family", m.marginal.family_name()}};
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Marginal::Uniform>) {
          j["lower"] = f.lower;
          j["upper"] = f.upper;
        } else if constexpr (std::is_same_v<T, Marginal::Gaussian>) {
          j["mean"] = f.mean;
          j["std"] = f.std;
        } else {
          j["mean"] = f.mean;
          j["cov"] = f.cov;
        }
      },
      m.marginal.family());
  return j;
}

NamedMarginal marginal_from_json(const Json& j) {
  constexpr const char* stage = "config.inputs";
  if (!j.is_object()) fail(ErrorCode::ConfigError, "each input must be an object", stage);
  const std::string name = j.value("name", "");
  if (name.empty()) fail(ErrorCode::ConfigError, "input without a name", stage);
  const std::string family = j.value("family", "");
  auto need = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number())
      fail(ErrorCode::ConfigError, "input '" + name + "' needs numeric field '" + key + "'", stage);
    return j[key].get<double>();
  };
  try {
    if (family == "uniform") return {name, Marginal::uniform(need("lower"), need("upper"))};
    if (family == "gaussian") return {name, Marginal::gaussian(need("mean"), need("std"))};
    if (family == "lognormal") return {name, Marginal::lognormal(need("mean"), need("cov"))};
    if (family == "gumbel") return {name, Marginal::gumbel(need("mean"), need("cov"))};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, "input '" + name + "': " + e.detail(), stage);
  }
  fail(ErrorCode::ConfigError, "input '" + name + "' has unknown family '" + family + "'", stage + std::string(".family"));
}

Json input_to_json(const InputModel& input) {
  Json a = Json::array();
  for (const auto& m : input.marginals()) a.push_back(marginal_to_json(m));
  return a;
}

InputModel input_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::ConfigError, "inputs must be a non-empty array", "config.inputs");
  std::vector<NamedMarginal> m;
  for (const auto& e : j) m.push_back(marginal_from_json(e));
  return InputModel(std::move(m));
}

Json error_report_to_json(const ErrorReport& e) {
  return {{"empirical_rel", optional_number(e.empirical_rel)},
          {"loo_rel", optional_number(e.loo_rel)},
          {"loo_corrected_rel", optional_number(e.loo_corrected_rel)},
          {"cv_k_rel", optional_number(e.cv_k_rel)},
          {"generalization_rel", optional_number(e.generalization_rel)}};
}

ErrorReport error_report_from_json(const Json& j) {
  ErrorReport e;
  auto get = [&](const char* key, std::optional<double>& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<double>();
  };
  get("empirical_rel", e.empirical_rel);
  get("loo_rel", e.loo_rel);
  get("loo_corrected_rel", e.loo_corrected_rel);
  get("cv_k_rel", e.cv_k_rel);
  get("generalization_rel", e.generalization_rel);
  return e;
}

Json to_json(const LRAModel& model) {
  Json z = Json::array();
  for (const auto& zl : model.z) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < zl.rows(); ++i) {
      Json r = Json::array();
      for (Eigen::Index k = 0; k < zl.cols(); ++k) r.push_back(zl(i, k));
      rows.push_back(r);
    }
    z.push_back(rows);
  }
  Json b = Json::array();
  for (Eigen::Index l = 0; l < model.b.size(); ++l) b.push_back(model.b(l));
  Json cv = Json::array();
  for (double e : model.cv_by_rank) cv.push_back(number(e));
  Json cvp = Json::array();
  for (const auto& [p, e] : model.cv_by_degree) cvp.push_back({p, number(e)});
  return {{"type", "lra"},
          {"version", version()},
          {"inputs", input_to_json(model.input)},
          {"families", families_to_json(model.spec)},
          {"degree", model.degree},
          {"rank", model.rank()},
          {"b", b},
          {"z", z},
          {"errors", error_report_to_json(model.errors)},
          {"cv_by_rank", cv},
          {"cv_by_degree", cvp}};
}

Json to_json(const PCEModel& model) {
  Json terms = Json::array();
  for (std::size_t t = 0; t < model.terms.size(); ++t)
    terms.push_back({{"alpha", model.terms[t]}, {"coefficient", model.coefficients(static_cast<Eigen::Index>(t))}});
  Json trace = Json::array();
  for (const auto& c : model.trace)
    trace.push_back({{"p_t", c.p_t}, {"q", c.q}, {"basis_size", c.basis_size}, {"active_size", c.active_size},
                     {"loo_corrected", number(c.loo_corrected)}});
  return {{"type", "pce"},
          {"version", version()},
          {"inputs", input_to_json(model.input)},
          {"families", families_to_json(model.spec)},
          {"max_degree", model.spec.max_degree},
          {"p_t", model.p_t},
          {"q", model.q},
          {"terms", terms},
          {"errors", error_report_to_json(model.errors)},
          {"trace", trace}};
}

LRAModel lra_from_json(const Json& j) {
  try {
    auto input = input_from_json(j.at("inputs"));
    const int p = j.at("degree").get<int>();
    auto spec = BasisSpec::for_input(input, p);
    const auto& fam = j.at("families");
    if (fam.size() != input.dim()) fail(ErrorCode::UnreadableModel, "family list length mismatch", kModelStage);
    for (std::size_t i = 0; i < input.dim(); ++i) spec.families[i] = parse_poly_family(fam[i].get<std::string>());
    LRAModel m{input, spec, p};
    const auto& b = j.at("b");
    const auto& z = j.at("z");
    if (b.size() != z.size() || b.empty()) fail(ErrorCode::UnreadableModel, "b and z lengths differ", kModelStage);
    m.b.resize(static_cast<Eigen::Index>(b.size()));
    for (std::size_t l = 0; l < b.size(); ++l) {
      m.b(static_cast<Eigen::Index>(l)) = b[l].get<double>();
      Matrix zl(static_cast<Eigen::Index>(input.dim()), p + 1);
      if (z[l].size() != input.dim()) fail(ErrorCode::UnreadableModel, "z slice has wrong dimension", kModelStage);
      for (std::size_t i = 0; i < input.dim(); ++i) {
        if (z[l][i].size() != static_cast<std::size_t>(p + 1))
          fail(ErrorCode::UnreadableModel, "z row has wrong length", kModelStage);
        for (int k = 0; k <= p; ++k) zl(static_cast<Eigen::Index>(i), k) = z[l][i][static_cast<std::size_t>(k)].get<double>();
      }
      m.z.push_back(std::move(zl));
    }
    if (j.contains("errors")) m.errors = error_report_from_json(j["errors"]);
    if (j.contains("cv_by_rank"))
      for (const auto& e : j["cv_by_rank"]) m.cv_by_rank.push_back(number_from(e));
    if (j.contains("cv_by_degree"))
      for (const auto& e : j["cv_by_degree"]) m.cv_by_degree.emplace_back(e.at(0).get<int>(), number_from(e.at(1)));
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorCode::UnreadableModel, std::string("malformed LRA model: ") + e.what(), kModelStage);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnreadableModel) throw;
    fail(ErrorCode::UnreadableModel, e.what(), kModelStage);
  }
}

PCEModel pce_from_json(const Json& j) {
  try {
    auto input = input_from_json(j.at("inputs"));
    BasisSpec spec = BasisSpec::for_input(input, 0);
    spec.max_degree = j.at("max_degree").get<std::vector<int>>();
    const auto& fam = j.at("families");
    if (fam.size() != input.dim() || spec.max_degree.size() != input.dim())
      fail(ErrorCode::UnreadableModel, "basis spec length mismatch", kModelStage);
    for (std::size_t i = 0; i < input.dim(); ++i) spec.families[i] = parse_poly_family(fam[i].get<std::string>());
    PCEModel m{input, spec, {}, Vector()};
    const auto& terms = j.at("terms");
    m.coefficients.resize(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      auto alpha = terms[t].at("alpha").get<MultiIndex>();
      if (alpha.size() != input.dim()) fail(ErrorCode::UnreadableModel, "multi-index length mismatch", kModelStage);
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] > spec.max_degree[i]) fail(ErrorCode::UnreadableModel, "multi-index exceeds degree", kModelStage);
      }
      m.terms.push_back(std::move(alpha));
      m.coefficients(static_cast<Eigen::Index>(t)) = terms[t].at("coefficient").get<double>();
    }
    m.p_t = j.value("p_t", 0);
    m.q = j.value("q", 1.0);
    if (j.contains("errors")) m.errors = error_report_from_json(j["errors"]);
    if (j.contains("trace"))
      for (const auto& c : j["trace"])
        m.trace.push_back({c.at("p_t").get<int>(), c.at("q").get<double>(), c.at("basis_size").get<std::size_t>(),
                           c.at("active_size").get<std::size_t>(), number_from(c.at("loo_corrected"))});
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorCode::UnreadableModel, std::string("malformed PCE model: ") + e.what(), kModelStage);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnreadableModel) throw;
    fail(ErrorCode::UnreadableModel, e.what(), kModelStage);
  }
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::UnreadableModel, "cannot open '" + path + "'", "io");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::UnreadableModel, "'" + path + "' is not valid JSON: " + e.what(), "io");
  }
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::ConfigError, "cannot write '" + path + "'", "output");
}

AnyModel load_model(const std::string& path) {
  const Json j = load_json(path);
  const std::string type = j.is_object() ? j.value("type", "") : "";
  if (type == "lra") return lra_from_json(j);
  if (type == "pce") return pce_from_json(j);
  fail(ErrorCode::UnreadableModel, "'" + path + "' is not an LRA or PCE model file", kModelStage);
}

void write_header(std::ostream& out, const ReportHeader& header) {
  out << "# tensens " << version() << '\n';
  out << "# config_hash " << header.config_hash << '\n';
  out << "# seeds";
  for (const auto& [k, v] : header.seeds) out << ' ' << k << '=' << v;
  out << '\n';
  for (const auto& [k, v] : header.extra) out << "# " << k << ' ' << v << '\n';
}

void write_report_csv(std::ostream& out, const SensitivityReport& report, const ReportHeader& header) {
  write_header(out, header);
  out << "# mean " << format_number(report.mean) << '\n';
  out << "# variance " << format_number(report.variance) << '\n';
  for (const auto& s : report.subsets)
    out << "# interaction " << subset_label(s.u) << ' ' << format_number(s.interaction) << '\n';
  out << "variable,first_order,total,method,N\n";
  const char* method = to_string(report.method);
  for (auto i : rank_variables(report)) {
    out << csv_quote(report.names[i]) << ',' << format_number(report.first[i]) << ','
        << format_number(report.total[i]) << ',' << method << ',' << report.sample_size << '\n';
  }
  for (const auto& s : report.subsets) {
    out << csv_quote(subset_label(s.u)) << ',' << format_number(s.first) << ',' << format_number(s.total) << ','
        << method << ',' << report.sample_size << '\n';
  }
}

std::vector<std::vector<std::size_t>> parse_subsets(const std::string& text, std::size_t M) {
  std::vector<std::vector<std::size_t>> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::size_t> u;
    std::stringstream items(group);
    std::string item;
    while (std::getline(items, item, ',')) {
      std::size_t pos = 0;
      long v = 0;
      try {
        v = std::stol(item, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || v < 1 || static_cast<std::size_t>(v) > M)
        fail(ErrorCode::ConfigError, "bad variable index '" + item + "' in subset list", "subsets");
      u.push_back(static_cast<std::size_t>(v - 1));
    }
    std::sort(u.begin(), u.end());
    if (std::adjacent_find(u.begin(), u.end()) != u.end())
      fail(ErrorCode::ConfigError, "repeated variable in subset '" + group + "'", "subsets");
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace tensens
