#pragma once

// Model specs from JSON, range parsing, and the tabular report format
// shared by every CLI command (JSON or CSV, optional gnuplot script).

#include "orbk/error.hpp"
#include "orbk/groups.hpp"
#include "orbk/models.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace orbk {

using nlohmann::json;

/// Validation failure tied to a named input field.
class FieldError : public InvalidArgument {
 public:
  FieldError(std::string field, const std::string& what)
      : InvalidArgument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline int json_int(const json& j, const char* key, const std::string& field) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) throw FieldError(field, std::string("integer '") + key + "' required");
  return j.at(key).get<int>();
}

inline CyclicGenerator parse_generator(const json& j, const std::string& field) {
  if (!j.is_object()) throw FieldError(field, "generator must be an object {order, weights}");
  CyclicGenerator g;
  g.order = json_int(j, "order", field);
  if (g.order < 1) throw FieldError(field, "generator order must be positive");
  if (!j.contains("weights") || !j.at("weights").is_array()) throw FieldError(field, "generator needs a weights array");
  for (const auto& w : j.at("weights")) {
    if (!w.is_number_integer()) throw FieldError(field, "weights must be integers");
    g.weights.push_back(w.get<int>());
  }
  if (g.weights.empty()) throw FieldError(field, "weights must be non-empty");
  return g;
}

}  // namespace detail

/// {"order": q, "weights": [...]}, {"generators": [...]} or a bare list of
/// generators. Only diagonal (hence abelian) actions are representable.
inline GroupAction parse_group(const json& j) {
  const std::string field = "model.group";
  std::vector<CyclicGenerator> gens;
  if (j.is_array()) {
    for (const auto& g : j) gens.push_back(detail::parse_generator(g, field));
  } else if (j.is_object()) {
    if (j.contains("matrices") || (j.contains("type") && j.at("type") != "abelian" && j.at("type") != "cyclic")) {
      throw FieldError(field, "non-abelian group specs are not supported");
    }
    if (j.contains("generators")) {
      for (const auto& g : j.at("generators")) gens.push_back(detail::parse_generator(g, field));
    } else {
      gens.push_back(detail::parse_generator(j, field));
    }
  } else {
    throw FieldError(field, "group must be an object or a list of generators");
  }
  if (gens.empty()) throw FieldError(field, "at least one generator required");
  const auto dim = gens.front().weights.size();
  for (const auto& g : gens) {
    if (g.weights.size() != dim) throw FieldError(field, "generators act on different dimensions");
  }
  if (dim > 3) throw FieldError(field, "cone dimension must be at most 3");
  return GroupAction::product(static_cast<int>(dim), gens);
}

inline ModelSpec parse_model(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw FieldError("model", "expected an object with a string 'kind'");
  }
  const std::string kind = j.at("kind");
  if (kind == "football") {
    const int n = detail::json_int(j, "n", "model.n");
    if (n < 1) throw FieldError("model.n", "football order must be positive");
    return ModelSpec::football(n);
  }
  if (kind == "wpl" || kind == "weighted_projective_line") {
    if (!j.contains("d") || !j.at("d").is_array() || j.at("d").size() != 2) {
      throw FieldError("model.d", "weighted line needs d = [d0, d1]");
    }
    const auto& d = j.at("d");
    if (!d[0].is_number_integer() || !d[1].is_number_integer()) throw FieldError("model.d", "weights must be integers");
    return ModelSpec::weighted_line(d[0].get<int>(), d[1].get<int>());
  }
  if (kind == "cone") {
    if (!j.contains("group")) throw FieldError("model.group", "cone needs a group");
    return ModelSpec::cone(parse_group(j.at("group")));
  }
  throw FieldError("model.kind", "unknown model kind '" + kind + "'");
}

inline json model_to_json(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::football:
      return {{"kind", "football"}, {"n", spec.n}};
    case ModelKind::weighted_projective_line:
      return {{"kind", "wpl"}, {"d", {spec.d0, spec.d1}}};
    case ModelKind::local_cone: {
      json gens = json::array();
      for (const auto& g : spec.group->generators()) gens.push_back({{"order", g.order}, {"weights", g.weights}});
      return {{"kind", "cone"}, {"group", {{"generators", gens}}}};
    }
  }
  return {};
}

/// --model accepts inline JSON, a path to a JSON file, or a bare kind
/// completed by --n / --d.
inline ModelSpec resolve_model(const std::string& text, std::optional<int> n, const std::vector<int>& d) {
  if (text.empty()) throw FieldError("model", "required");
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw FieldError("model", std::string("invalid JSON: ") + e.what());
    }
    return parse_model(j);
  }
  if (text == "football") {
    if (!n) throw FieldError("n", "required for --model football");
    return parse_model({{"kind", "football"}, {"n", *n}});
  }
  if (text == "wpl") {
    if (d.size() != 2) throw FieldError("d", "two weights required for --model wpl");
    return parse_model({{"kind", "wpl"}, {"d", d}});
  }
  if (std::filesystem::is_regular_file(text)) {
    std::ifstream in(text);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FieldError("model", "invalid JSON in " + text + ": " + e.what());
    }
    return parse_model(j);
  }
  throw FieldError("model", "expected JSON, a file path, or one of football|wpl");
}

/// "start:stop:step" (inclusive), "start:stop" (step 1) or a single value.
inline std::vector<int> parse_int_range(const std::string& text, const std::string& field) {
  std::vector<long> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t pos = 0;
      parts.push_back(std::stol(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw FieldError(field, "malformed range '" + text + "'");
    }
  }
  if (parts.empty() || parts.size() > 3) throw FieldError(field, "malformed range '" + text + "'");
  const long start = parts[0];
  const long stop = parts.size() > 1 ? parts[1] : start;
  const long step = parts.size() > 2 ? parts[2] : 1;
  if (step <= 0) throw FieldError(field, "step must be positive");
  if (stop < start) throw FieldError(field, "range is empty");
  if ((stop - start) / step > 100000) throw FieldError(field, "range too long");
  std::vector<int> out;
  for (long v = start; v <= stop; v += step) out.push_back(static_cast<int>(v));
  return out;
}

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::string command;
  json model;
  json params = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  void add_row(std::vector<json> row) {
    if (row.size() != columns.size()) throw Error("report row width does not match columns");
    rows.push_back(std::move(row));
  }

  void check(std::string name, double value, double tolerance, bool pass, std::string detail = {}) {
    checks.push_back({std::move(name), value, tolerance, pass, std::move(detail)});
  }

  json to_json() const {
    json table = json::array();
    for (const auto& row : rows) {
      json obj = json::object();
      for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = row[c];
      table.push_back(obj);
    }
    json cks = json::array();
    for (const auto& c : checks) {
      cks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass},
                     {"detail", c.detail}});
    }
    return {{"command", command}, {"model", model},  {"params", params}, {"columns", columns},
            {"rows", table},      {"checks", cks},   {"notes", notes},   {"pass", pass()}};
  }

  std::string to_csv() const {
    std::ostringstream out;
    for (const auto& n : notes) out << "# " << n << "\n";
    for (const auto& c : checks) {
      out << "# check " << c.name << " value=" << format_cell(c.value) << " tolerance=" << format_cell(c.tolerance)
          << " " << (c.pass ? "PASS" : "FAIL") << "\n";
    }
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_cell(row[c]);
      out << "\n";
    }
    return out.str();
  }

  /// Self-contained gnuplot script with the numeric columns inlined;
  /// the first numeric column is the abscissa.
  std::string gnuplot() const {
    std::vector<std::size_t> numeric;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const bool all_numeric = !rows.empty() && std::all_of(rows.begin(), rows.end(), [&](const auto& row) {
        return row[c].is_number();
      });
      if (all_numeric) numeric.push_back(c);
    }
    std::ostringstream out;
    out << "# gnuplot script for " << command << "\n$data << EOD\n";
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < numeric.size(); ++k) out << (k ? " " : "") << format_cell(row[numeric[k]]);
      out << "\n";
    }
    out << "EOD\nset key outside\nset title '" << command << "'\n";
    if (numeric.size() >= 2) {
      out << "set xlabel '" << columns[numeric[0]] << "'\nplot ";
      for (std::size_t k = 1; k < numeric.size(); ++k) {
        out << (k > 1 ? ", \\\n     " : "") << "$data using 1:" << k + 1 << " with linespoints title '"
            << columns[numeric[k]] << "'";
      }
      out << "\n";
    }
    return out.str();
  }

  static std::string format_cell(const json& v) {
    if (v.is_number_float()) return format_cell(v.get<double>());
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    if (v.is_null()) return "";
    return v.dump();
  }

  static std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
};

/// Structural check of a JSON report; returns the list of problems.
inline std::vector<std::string> validate_report(const json& j) {
  std::vector<std::string> problems;
  auto need = [&](const char* key, auto pred, const char* what) {
    if (!j.contains(key) || !pred(j.at(key))) problems.push_back(std::string(key) + ": " + what);
  };
  if (!j.is_object()) return {"report: not an object"};
  need("command", [](const json& v) { return v.is_string(); }, "string required");
  need("model", [](const json& v) { return v.is_object() || v.is_null(); }, "object required");
  need("params", [](const json& v) { return v.is_object(); }, "object required");
  need("columns", [](const json& v) { return v.is_array(); }, "array required");
  need("rows", [](const json& v) { return v.is_array(); }, "array required");
  need("checks", [](const json& v) { return v.is_array() && !v.empty(); }, "non-empty array required");
  need("notes", [](const json& v) { return v.is_array(); }, "array required");
  need("pass", [](const json& v) { return v.is_boolean(); }, "boolean required");
  if (!problems.empty()) return problems;

  std::vector<std::string> columns;
  for (const auto& c : j.at("columns")) {
    if (!c.is_string()) problems.push_back("columns: entries must be strings");
    else columns.push_back(c);
  }
  const bool has_m = std::find(columns.begin(), columns.end(), "m") != columns.end();
  const bool has_n = std::find(columns.begin(), columns.end(), "N") != columns.end();
  if (has_m && !has_n) problems.push_back("columns: tables with m must also carry N");
  std::size_t index = 0;
  for (const auto& row : j.at("rows")) {
    if (!row.is_object() || row.size() != columns.size()) {
      problems.push_back("rows[" + std::to_string(index) + "]: keys do not match columns");
    } else {
      for (const auto& c : columns) {
        if (!row.contains(c)) problems.push_back("rows[" + std::to_string(index) + "]: missing " + c);
      }
    }
    ++index;
  }
  bool all_pass = true;
  for (const auto& c : j.at("checks")) {
    if (!c.is_object() || !c.contains("name") || !c.contains("pass") || !c.at("pass").is_boolean() ||
        !c.contains("value") || !c.contains("tolerance")) {
      problems.push_back("checks: entries need name, value, tolerance, pass");
      continue;
    }
    all_pass = all_pass && c.at("pass").get<bool>();
  }
  if (problems.empty() && j.at("pass").get<bool>() != all_pass) problems.push_back("pass: inconsistent with checks");
  return problems;
}

}  // namespace orbk
