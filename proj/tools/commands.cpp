#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spinsc/errors.hpp"
#include "spinsc/execution.hpp"
#include "spinsc/quantization.hpp"

namespace spinsc::cli {

using nlohmann::json;

namespace {

OrbitTolerances orbit_tolerances(const RunConfig& c) {
  OrbitTolerances t;
  t.rtol = c.tolerances.ode;
  t.atol = 1e-2 * c.tolerances.ode;
  return t;
}

QuantizationOptions quantization_options(const RunConfig& c) {
  QuantizationOptions o;
  o.orbit = orbit_tolerances(c);
  o.rootTol = c.tolerances.root;
  return o;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json level_json(const QuantizedLevel& lv) {
  return {{"index", lv.index},
          {"n", lv.n},
          {"E", lv.energy},
          {"method", to_string(lv.method)},
          {"branch", lv.branch},
          {"residual", number_or_null(lv.residual)},
          {"flags", lv.flags}};
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json run_quantize(const RunConfig& config, const std::string& method) {
  if (method != "exact" && method != "bs" && method != "both")
    throw ConfigError("quantize: --method must be exact, bs or both (got '" + method + "')");
  const SpinOperatorSet ops = build_operators(config.model);
  json out;
  out["j"] = config.model.spin.value();
  out["hbar"] = config.model.hbar;
  out["expected_levels"] = config.model.spin.dim();
  if (method != "bs") {
    const ExactSpectrum ex = eigendecompose(ops);
    json levels = json::array();
    for (const auto& lv : ex.levels) levels.push_back(level_json(lv));
    out["exact"] = levels;
  }
  if (method != "exact") {
    const ClassicalSystem sys(ops);
    const LevelTable table = quantize_all(sys, quantization_options(config));
    json levels = json::array();
    for (const auto& lv : table.levels) levels.push_back(level_json(lv));
    out["bohr_sommerfeld"] = levels;
    out["energy_range"] = {sys.energy_min(), sys.energy_max()};
    out["separatrix_window_levels"] = table.gapLevels;
    out["reports"] = table.reports;
  }
  return out;
}

HusimiOutput run_husimi(const RunConfig& config, int state, const std::string& method, int indexBase) {
  if (method != "exact" && method != "semiclassical")
    throw ConfigError("husimi: --method must be exact or semiclassical (got '" + method + "')");
  if (indexBase != 0 && indexBase != 1) throw ConfigError("husimi: --index-base must be 0 or 1");
  const int index = state - indexBase;
  const int dim = config.model.spin.dim();
  if (index < 0 || index >= dim) {
    std::ostringstream os;
    os << "husimi: state " << state << " (index base " << indexBase << ") is out of range for " << dim
       << " levels";
    throw ConfigError(os.str());
  }
  const SpinOperatorSet ops = build_operators(config.model);
  const PhaseGrid grid(config.grid.n, config.model.spin, config.model.hbar, config.grid.zmax);
  HusimiOutput out;
  json sidecar;
  sidecar["state"] = index;
  sidecar["state_argument"] = state;
  sidecar["index_base"] = indexBase;
  sidecar["method"] = method;
  if (method == "exact") {
    const ExactSpectrum ex = eigendecompose(ops);
    out.field = normalize_field(exact_husimi(ex.states.col(index), config.model.spin, grid));
    out.field.state = index;
    out.field.energy = ex.levels[index].energy;
    sidecar["flags"] = ex.levels[index].flags;
  } else {
    const ClassicalSystem sys(ops);
    const LevelTable table = quantize_all(sys, quantization_options(config));
    if (index >= static_cast<int>(table.levels.size())) {
      std::ostringstream os;
      os << "husimi: the semiclassical table has only " << table.levels.size() << " levels";
      throw NumericalError(os.str());
    }
    const QuantizedLevel& level = table.levels[index];
    const LevelFunctionals lf = level_functionals(sys, level, config.tolerances.dE, orbit_tolerances(config));
    out.field = normalize_field(semiclassical_husimi(sys, level, lf, grid));
    sidecar["branch"] = level.branch;
    sidecar["flags"] = level.flags;
    sidecar["period"] = number_or_null(lf.available ? lf.period : NAN);
    sidecar["dSk_dE"] = number_or_null(lf.available ? lf.dSkdE : NAN);
  }
  sidecar["energy"] = out.field.energy;
  sidecar["norm_constant"] = out.field.normConstant;
  sidecar["guard_cells"] = out.field.guardCells;
  sidecar["shape_only"] = out.field.shapeOnly;
  sidecar["grid"] = {{"N", grid.n()},
                     {"zmax", grid.zmax()},
                     {"radius", grid.radius()},
                     {"cell_measure", grid.measure()},
                     {"active_cells", grid.active_count()}};
  out.sidecar = sidecar;
  return out;
}

void write_field_csv(std::ostream& os, const HusimiField& field) {
  const PhaseGrid& g = field.grid;
  os << "q,p,value\n";
  for (int row = 0; row < g.n(); ++row)
    for (int col = 0; col < g.n(); ++col) {
      const std::size_t cell = static_cast<std::size_t>(row) * g.n() + col;
      if (!g.active(cell)) continue;
      os << format17(g.q(col)) << ',' << format17(g.p(row)) << ',' << format17(field.value(cell)) << '\n';
    }
}

CsvField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("compare: cannot open " + path);
  CsvField f;
  std::string line;
  if (!std::getline(in, line) || line != "q,p,value") throw ConfigError("compare: " + path + " lacks the q,p,value header");
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    double v[3];
    std::istringstream ls(line);
    std::string cell;
    int k = 0;
    for (; k < 3 && std::getline(ls, cell, ','); ++k) {
      char* end = nullptr;
      v[k] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') k = 99;
    }
    if (k != 3 || std::getline(ls, cell, ',')) {
      throw ConfigError("compare: " + path + ":" + std::to_string(lineNo) + " is not a q,p,value row");
    }
    f.q.push_back(v[0]);
    f.p.push_back(v[1]);
    f.value.push_back(v[2]);
  }
  if (f.value.empty()) throw ConfigError("compare: " + path + " has no data rows");
  return f;
}

json compare_csv(const CsvField& a, const CsvField& b) {
  if (a.q != b.q || a.p != b.p) throw ConfigError("compare: the two fields are sampled on different grids");
  const std::size_t n = a.value.size();
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a.value[i] >= 0.0) || !(b.value[i] >= 0.0)) throw ConfigError("compare: values must be non-negative");
    sa += a.value[i];
    sb += b.value[i];
  }
  if (!(sa > 0.0) || !(sb > 0.0)) throw NumericalError("compare: a field has no positive mass");
  double l1 = 0.0, diff2 = 0.0, norm2 = 0.0, overlap = 0.0, sup = 0.0;
  std::size_t supAt = 0, maxA = 0, maxB = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.value[i] / sa, y = b.value[i] / sb;
    const double d = std::abs(x - y);
    l1 += d;
    diff2 += d * d;
    norm2 += x * x;
    overlap += std::sqrt(x * y);
    if (d > sup) {
      sup = d;
      supAt = i;
    }
    if (a.value[i] > a.value[maxA]) maxA = i;
    if (b.value[i] > b.value[maxB]) maxB = i;
  }
  // Lattice spacing: smallest gap between distinct q values.
  std::vector<double> qs = a.q;
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  double h = 0.0;
  for (std::size_t i = 1; i < qs.size(); ++i) h = h == 0.0 ? qs[i] - qs[i - 1] : std::min(h, qs[i] - qs[i - 1]);
  int cells = 0;
  if (h > 0.0)
    cells = static_cast<int>(std::lround(std::max(std::abs(a.q[maxA] - a.q[maxB]), std::abs(a.p[maxA] - a.p[maxB])) / h));
  return {{"points", n},
          {"l1", l1},
          {"l2_relative", std::sqrt(diff2 / norm2)},
          {"overlap", overlap},
          {"sup_difference", sup},
          {"sup_location", {a.q[supAt], a.p[supAt]}},
          {"argmax_a", {a.q[maxA], a.p[maxA]}},
          {"argmax_b", {a.q[maxB], a.p[maxB]}},
          {"argmax_distance_cells", cells}};
}

OrbitOutput run_orbit(const RunConfig& config, double q0, double p0) {
  const SpinOperatorSet ops = build_operators(config.model);
  const ClassicalSystem sys(ops);
  const double hbarJ = sys.hbar_j();
  const cplx z0 = chart_z({q0, p0}, hbarJ);
  // Integrate in the chart that keeps the start inside the unit disk.
  const Chart chart = std::norm(z0) > 1.0 ? Chart::North : Chart::South;
  const cplx start = chart == Chart::North ? other_chart(z0) : z0;
  OrbitTolerances tol = orbit_tolerances(config);
  tol.keepSamples = true;
  OrbitOutput out;
  out.orbit = integrate_periodic_orbit(sys, chart, start, tol);
  const SymbolEvaluator& ev = sys.evaluator(chart);
  for (const auto& s : out.orbit.samples) {
    const cplx z = chart == Chart::North ? other_chart(s.z) : s.z;
    const PhasePoint pt = chart_qp(z, hbarJ);
    out.q.push_back(pt.q);
    out.p.push_back(pt.p);
    out.drift.push_back(ev.energy(s.z) - out.orbit.energy);
  }
  out.sidecar = {{"q0", q0},
                 {"p0", p0},
                 {"chart", chart == Chart::North ? "north" : "south"},
                 {"energy", out.orbit.energy},
                 {"period", out.orbit.period},
                 {"action", out.orbit.action},
                 {"sk_integral", out.orbit.skIntegral},
                 {"max_energy_drift", out.orbit.maxEnergyDrift},
                 {"closure_residual", out.orbit.closureResidual},
                 {"steps", out.orbit.steps}};
  return out;
}

void write_orbit_csv(std::ostream& os, const OrbitOutput& out) {
  os << "t,q,p,energy_drift\n";
  for (std::size_t i = 0; i < out.q.size(); ++i)
    os << format17(out.orbit.samples[i].t) << ',' << format17(out.q[i]) << ',' << format17(out.p[i]) << ','
       << format17(out.drift[i]) << '\n';
}

namespace {

void emit_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + *path);
  f << text;
}

// Main output goes to --out (or stdout); the sidecar to <out>.json (or stderr).
void emit_with_sidecar(const std::optional<std::string>& path, const std::string& text, const json& sidecar) {
  emit_text(path, text);
  const std::string side = sidecar.dump(2) + "\n";
  if (path)
    emit_text(*path + ".json", side);
  else
    std::cerr << side;
}

void apply_thread_limit() {
  const char* env = std::getenv("HUSIMI_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(std::string("HUSIMI_THREADS must be a positive integer, got '") + env + "'");
  set_thread_limit(static_cast<int>(n));
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Semiclassical spin quantization and Husimi functions"};
  app.require_subcommand(1);
  std::string configPath;
  std::optional<std::string> outPath;
  std::optional<std::string> method;
  std::optional<int> state, indexBase;
  std::optional<double> q0, p0;
  std::vector<std::string> files;

  auto* quantize = app.add_subcommand("quantize", "level table as JSON");
  auto* husimi = app.add_subcommand("husimi", "Husimi field as CSV plus JSON sidecar");
  auto* compare = app.add_subcommand("compare", "metrics between two field CSV files");
  auto* orbit = app.add_subcommand("orbit", "periodic orbit through (q0, p0) as CSV plus JSON sidecar");
  for (auto* sub : {quantize, husimi, orbit}) {
    sub->add_option("--config", configPath, "run configuration (JSON)")->required();
    sub->add_option("--out", outPath, "output file (default stdout)");
  }
  quantize->add_option("--method", method, "exact | bs | both");
  husimi->add_option("--state", state, "state index");
  husimi->add_option("--method", method, "exact | semiclassical");
  husimi->add_option("--index-base", indexBase, "0 or 1");
  orbit->add_option("--q0", q0, "start q");
  orbit->add_option("--p0", p0, "start p");
  compare->add_option("files", files, "fieldA.csv fieldB.csv")->expected(2)->required();
  compare->add_option("--out", outPath, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    apply_thread_limit();
    if (compare->parsed()) {
      const json metrics = compare_csv(read_field_csv(files[0]), read_field_csv(files[1]));
      emit_text(outPath, metrics.dump(2) + "\n");
      return 0;
    }
    const RunConfig config = load_config(configPath);
    const TaskConfig& task = config.task;
    if (quantize->parsed()) {
      emit_text(outPath, run_quantize(config, method.value_or(task.method.value_or("both"))).dump(2) + "\n");
    } else if (husimi->parsed()) {
      const auto s = state ? state : task.state;
      if (!s) throw ConfigError("husimi: --state (or task.state) is required");
      const HusimiOutput out =
          run_husimi(config, *s, method.value_or(task.method.value_or("exact")), indexBase.value_or(task.indexBase.value_or(0)));
      std::ostringstream csv;
      write_field_csv(csv, out.field);
      emit_with_sidecar(outPath, csv.str(), out.sidecar);
    } else if (orbit->parsed()) {
      const auto q = q0 ? q0 : task.q0;
      const auto p = p0 ? p0 : task.p0;
      if (!q || !p) throw ConfigError("orbit: --q0 and --p0 (or task.q0, task.p0) are required");
      const OrbitOutput out = run_orbit(config, *q, *p);
      std::ostringstream csv;
      write_orbit_csv(csv, out);
      emit_with_sidecar(outPath, csv.str(), out.sidecar);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FixedPointError& e) {
    std::cerr << "error (fixed point): " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace spinsc::cli
