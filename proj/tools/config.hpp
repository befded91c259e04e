#pragma once

// Run configuration: a JSON document with model, grid, tolerances and task
// sections. Presets ("jz", "lmg") are expanded into explicit terms on parse,
// so serialize(parse(x)) is a complete, self-contained description.

#include <optional>
#include <string>

#include "json.hpp"
#include "spinsc/spin_algebra.hpp"

namespace spinsc::cli {

struct GridConfig {
  int n = 256;
  double zmax = 1e6;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct ToleranceConfig {
  double ode = 1e-12;               // relative error per step on the phase point
  double root = 1e-12;              // level bracket width relative to the energy span
  std::optional<double> dE;         // stencil for orbit functionals (default 1e-4 * span)
  friend bool operator==(const ToleranceConfig&, const ToleranceConfig&) = default;
};

struct TaskConfig {
  std::optional<std::string> command;
  std::optional<int> state;
  std::optional<std::string> method;
  std::optional<int> indexBase;
  std::optional<double> q0, p0;
  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct RunConfig {
  ModelSpec model;
  GridConfig grid;
  ToleranceConfig tolerances;
  TaskConfig task;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError naming the offending key or term.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace spinsc::cli
