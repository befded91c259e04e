#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"
#include "spinsc/classical.hpp"
#include "spinsc/husimi.hpp"

namespace spinsc::cli {

/// Level table for --method exact|bs|both.
nlohmann::json run_quantize(const RunConfig& config, const std::string& method);

struct HusimiOutput {
  HusimiField field;  // normalized
  nlohmann::json sidecar;
};

/// `state` is interpreted in the given index base (0 or 1).
HusimiOutput run_husimi(const RunConfig& config, int state, const std::string& method, int indexBase);

/// q,p,value rows for active cells, 17 significant digits.
void write_field_csv(std::ostream& os, const HusimiField& field);

struct CsvField {
  std::vector<double> q, p, value;
};
CsvField read_field_csv(const std::string& path);

/// Values are treated as probability vectors over identical point lists.
nlohmann::json compare_csv(const CsvField& a, const CsvField& b);

struct OrbitOutput {
  PeriodicOrbit orbit;
  std::vector<double> q, p, drift;
  nlohmann::json sidecar;
};
OrbitOutput run_orbit(const RunConfig& config, double q0, double p0);
void write_orbit_csv(std::ostream& os, const OrbitOutput& out);

/// Full command line: parses arguments, runs one command, maps errors to exit
/// codes (0 ok, 2 configuration, 3 numerical).
int run_cli(int argc, char** argv);

}  // namespace spinsc::cli
