#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tensens/input_model.hpp"
#include "tensens/lra.hpp"
#include "tensens/pce.hpp"
#include "tensens/sobol.hpp"

namespace tensens {

using Json = nlohmann::json;

/// Version string written into every output file.
const char* version();

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Round-trip-safe decimal form (17 significant digits).
std::string format_number(double v);

Json marginal_to_json(const NamedMarginal& m);
NamedMarginal marginal_from_json(const Json& j);
Json input_to_json(const InputModel& input);
InputModel input_from_json(const Json& j);

Json error_report_to_json(const ErrorReport& e);
ErrorReport error_report_from_json(const Json& j);

Json to_json(const LRAModel& model);
Json to_json(const PCEModel& model);
LRAModel lra_from_json(const Json& j);
PCEModel pce_from_json(const Json& j);

using AnyModel = std::variant<LRAModel, PCEModel>;
/// UnreadableModel on I/O, parse or schema errors.
AnyModel load_model(const std::string& path);
void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);

struct ReportHeader {
  std::string config_hash;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<std::pair<std::string, std::string>> extra;
};

void write_header(std::ostream& out, const ReportHeader& header);

/// Sensitivity CSV: header comments, then `variable,first_order,total,method,N`
/// with variables ordered by descending total index, then subset rows.
void write_report_csv(std::ostream& out, const SensitivityReport& report, const ReportHeader& header);

/// "1,2;2,3" -> {{0,1},{1,2}} (1-based input, 0-based output).
std::vector<std::vector<std::size_t>> parse_subsets(const std::string& text, std::size_t M);

}  // namespace tensens
