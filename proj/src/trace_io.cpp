#include "rblo/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "rblo/errors.hpp"

namespace rblo::trace_io {

namespace fs = std::filesystem;

namespace {

constexpr const char* kInnerHeader = "outer_idx,inner_idx,phase,s_u_k,s_l_k,ll_value,ul_value,view";
constexpr const char* kOuterHeader =
    "outer_idx,ul_value,ul_dval,ll_final_value,ll_residual,hypergrad_norm,x_orthonormality,"
    "y_orthonormality_max,wall_time_ms";

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> header_columns(const char* header) { return split(header); }

struct CsvReader {
  fs::path path;
  std::vector<std::string> columns;
  std::size_t line_no = 1;

  double real(const std::vector<std::string>& row, std::size_t i) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(row.at(i), &used);
      if (used != row[i].size()) throw std::invalid_argument(row[i]);
      return v;
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": column '" + columns[i] +
                        "' is not a number");
    }
  }
  int integer(const std::vector<std::string>& row, std::size_t i) const { return static_cast<int>(real(row, i)); }
};

template <typename Fn>
void read_csv(const fs::path& path, const char* header, Fn&& on_row) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file, expected header");
  CsvReader reader{path, header_columns(header)};
  const auto got = split(line);
  for (std::size_t i = 0; i < reader.columns.size(); ++i)
    if (i >= got.size() || got[i] != reader.columns[i])
      throw FormatError(path.string() + ": missing column '" + reader.columns[i] + "'");
  while (std::getline(in, line)) {
    ++reader.line_no;
    if (line.empty()) continue;
    const auto row = split(line);
    if (row.size() != reader.columns.size())
      throw FormatError(path.string() + ":" + std::to_string(reader.line_no) + ": expected " +
                        std::to_string(reader.columns.size()) + " columns");
    on_row(reader, row);
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_inner_csv(const RunTrace& trace, const fs::path& path) {
  auto os = open_out(path);
  os << kInnerHeader << '\n';
  for (const auto& r : trace.inner)
    os << r.outer_idx << ',' << r.inner_idx << ',' << to_string(r.phase) << ',' << format_real(r.s_u) << ','
       << format_real(r.s_l) << ',' << format_real(r.ll_value) << ',' << format_real(r.ul_value) << ',' << r.view
       << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

void write_outer_csv(const RunTrace& trace, const fs::path& path) {
  auto os = open_out(path);
  os << kOuterHeader << '\n';
  for (const auto& r : trace.outer)
    os << r.outer_idx << ',' << format_real(r.ul_value) << ',' << (r.ul_dval ? format_real(*r.ul_dval) : "") << ','
       << format_real(r.ll_final_value) << ',' << format_real(r.ll_residual) << ',' << format_real(r.hypergrad_norm)
       << ',' << format_real(r.x_orthonormality) << ',' << format_real(r.y_orthonormality_max) << ','
       << format_real(r.wall_time_ms) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

void read_inner_csv(const fs::path& path, RunTrace& trace) {
  trace.inner.clear();
  read_csv(path, kInnerHeader, [&](const CsvReader& rd, const std::vector<std::string>& row) {
    InnerRecord r;
    r.outer_idx = rd.integer(row, 0);
    r.inner_idx = rd.integer(row, 1);
    if (row[2] == "bb") r.phase = Phase::bb;
    else if (row[2] == "dim") r.phase = Phase::diminishing;
    else throw FormatError(path.string() + ":" + std::to_string(rd.line_no) + ": column 'phase' must be bb|dim");
    r.s_u = rd.real(row, 3);
    r.s_l = rd.real(row, 4);
    r.ll_value = rd.real(row, 5);
    r.ul_value = rd.real(row, 6);
    r.view = rd.integer(row, 7);
    trace.inner.push_back(r);
  });
}

void read_outer_csv(const fs::path& path, RunTrace& trace) {
  trace.outer.clear();
  read_csv(path, kOuterHeader, [&](const CsvReader& rd, const std::vector<std::string>& row) {
    OuterRecord r;
    r.outer_idx = rd.integer(row, 0);
    r.ul_value = rd.real(row, 1);
    if (!row[2].empty()) r.ul_dval = rd.real(row, 2);
    r.ll_final_value = rd.real(row, 3);
    r.ll_residual = rd.real(row, 4);
    r.hypergrad_norm = rd.real(row, 5);
    r.x_orthonormality = rd.real(row, 6);
    r.y_orthonormality_max = rd.real(row, 7);
    r.wall_time_ms = rd.real(row, 8);
    trace.outer.push_back(r);
  });
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string validate_summary(const nlohmann::json& s) {
  if (!s.is_object()) return "summary is not an object";
  const std::pair<const char*, nlohmann::json::value_t> required[] = {
      {"schema", nlohmann::json::value_t::string},
      {"variant", nlohmann::json::value_t::string},
      {"seed", nlohmann::json::value_t::number_unsigned},
      {"config", nlohmann::json::value_t::object},
      {"outer_iterations", nlohmann::json::value_t::number_unsigned},
      {"final", nlohmann::json::value_t::object},
      {"metrics", nlohmann::json::value_t::object},
      {"wall_time_ms", nlohmann::json::value_t::number_float},
      {"status", nlohmann::json::value_t::string},
  };
  for (const auto& [key, type] : required) {
    if (!s.contains(key)) return std::string("missing key '") + key + "'";
    const auto t = s.at(key).type();
    const bool numeric_ok = (type == nlohmann::json::value_t::number_float && s.at(key).is_number()) ||
                            (type == nlohmann::json::value_t::number_unsigned && s.at(key).is_number_integer());
    if (t != type && !numeric_ok) return std::string("key '") + key + "' has the wrong type";
  }
  for (const char* key : {"ul_value", "ul_dval", "ll_value", "ll_residual", "hypergrad_norm"})
    if (!s.at("final").contains(key)) return std::string("final: missing key '") + key + "'";
  for (const char* key : {"acc", "nmi", "ari", "f1"})
    if (!s.at("metrics").contains(key)) return std::string("metrics: missing key '") + key + "'";
  return {};
}

}  // namespace rblo::trace_io
