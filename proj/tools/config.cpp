#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spinsc/errors.hpp"

namespace spinsc::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

double number(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where + "." + key + " is missing");
  if (!it->is_number()) fail(where + "." + key + " must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) fail(where + "." + key + " must be finite");
  return v;
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj, key, where);
}

std::optional<int> optional_int(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number_integer()) fail(where + "." + key + " must be an integer");
  return obj.at(key).get<int>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) fail(where + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

void only_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) fail("unknown key " + where + "." + it.key());
  }
}

Spin parse_spin(const json& model) {
  const double j = number(model, "j", "model");
  try {
    return Spin::from_value(j);
  } catch (const ConfigError& e) {
    fail(std::string("model.j: ") + e.what());
  }
}

Term parse_term(const json& t, std::size_t i) {
  const std::string where = "model.terms[" + std::to_string(i) + "]";
  only_keys(t, {"coefficient", "ops"}, where);
  Term term;
  term.coefficient = number(t, "coefficient", where);
  if (!t.contains("ops") || !t.at("ops").is_array() || t.at("ops").empty())
    fail(where + ".ops must be a non-empty array of operator names");
  for (const auto& op : t.at("ops")) {
    if (!op.is_string()) fail(where + ".ops entries must be strings");
    const auto parsed = parse_spin_op(op.get<std::string>());
    if (!parsed) fail(where + ": unknown operator '" + op.get<std::string>() + "' (use Jx, Jy, Jz, J+, J-)");
    term.monomial.push_back(*parsed);
  }
  return term;
}

ModelSpec parse_model(const json& m) {
  only_keys(m, {"j", "hbar", "preset", "omega", "hbar_alpha", "terms"}, "model");
  const Spin spin = parse_spin(m);
  const auto hbar = optional_number(m, "hbar", "model");
  if (hbar && !(*hbar > 0.0)) fail("model.hbar must be positive");
  const auto preset = optional_string(m, "preset", "model");
  if (preset) {
    if (m.contains("terms")) fail("model: give either preset or terms, not both");
    const double omega = optional_number(m, "omega", "model").value_or(1.0);
    if (*preset == "jz") {
      if (m.contains("hbar_alpha")) fail("model.hbar_alpha does not apply to preset jz");
      return ModelSpec::jz_model(spin, omega, hbar);
    }
    if (*preset == "lmg") return ModelSpec::lmg(spin, omega, number(m, "hbar_alpha", "model"), hbar);
    fail("model.preset '" + *preset + "' is unknown (use jz or lmg)");
  }
  if (m.contains("omega") || m.contains("hbar_alpha")) fail("model: omega and hbar_alpha require a preset");
  if (!m.contains("terms") || !m.at("terms").is_array() || m.at("terms").empty())
    fail("model.terms must be a non-empty array");
  ModelSpec spec;
  spec.spin = spin;
  spec.hbar = hbar.value_or(ModelSpec::default_hbar(spin));
  const auto& terms = m.at("terms");
  for (std::size_t i = 0; i < terms.size(); ++i) spec.terms.push_back(parse_term(terms[i], i));
  return spec;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  only_keys(doc, {"model", "grid", "tolerances", "task"}, "config");
  if (!doc.contains("model")) fail("model section is missing");
  RunConfig c;
  c.model = parse_model(doc.at("model"));
  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    only_keys(g, {"N", "zmax"}, "grid");
    c.grid.n = optional_int(g, "N", "grid").value_or(c.grid.n);
    c.grid.zmax = optional_number(g, "zmax", "grid").value_or(c.grid.zmax);
    if (c.grid.n < 2) fail("grid.N must be at least 2");
    if (!(c.grid.zmax > 0.0)) fail("grid.zmax must be positive");
  }
  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    only_keys(t, {"ode", "root", "dE"}, "tolerances");
    c.tolerances.ode = optional_number(t, "ode", "tolerances").value_or(c.tolerances.ode);
    c.tolerances.root = optional_number(t, "root", "tolerances").value_or(c.tolerances.root);
    c.tolerances.dE = optional_number(t, "dE", "tolerances");
    if (!(c.tolerances.ode > 0.0) || !(c.tolerances.root > 0.0)) fail("tolerances must be positive");
    if (c.tolerances.dE && !(*c.tolerances.dE > 0.0)) fail("tolerances.dE must be positive");
  }
  if (doc.contains("task")) {
    const auto& t = doc.at("task");
    only_keys(t, {"command", "state", "method", "index_base", "q0", "p0"}, "task");
    c.task.command = optional_string(t, "command", "task");
    c.task.state = optional_int(t, "state", "task");
    c.task.method = optional_string(t, "method", "task");
    c.task.indexBase = optional_int(t, "index_base", "task");
    c.task.q0 = optional_number(t, "q0", "task");
    c.task.p0 = optional_number(t, "p0", "task");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json terms = json::array();
  for (const auto& t : c.model.terms) {
    json ops = json::array();
    for (SpinOp op : t.monomial) ops.push_back(std::string(to_string(op)));
    terms.push_back({{"coefficient", t.coefficient}, {"ops", ops}});
  }
  json doc;
  doc["model"] = {{"j", c.model.spin.value()}, {"hbar", c.model.hbar}, {"terms", terms}};
  doc["grid"] = {{"N", c.grid.n}, {"zmax", c.grid.zmax}};
  doc["tolerances"] = {{"ode", c.tolerances.ode}, {"root", c.tolerances.root}};
  if (c.tolerances.dE) doc["tolerances"]["dE"] = *c.tolerances.dE;
  json task = json::object();
  if (c.task.command) task["command"] = *c.task.command;
  if (c.task.state) task["state"] = *c.task.state;
  if (c.task.method) task["method"] = *c.task.method;
  if (c.task.indexBase) task["index_base"] = *c.task.indexBase;
  if (c.task.q0) task["q0"] = *c.task.q0;
  if (c.task.p0) task["p0"] = *c.task.p0;
  if (!task.empty()) doc["task"] = task;
  return doc;
}

}  // namespace spinsc::cli
