// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spinsc/husimi.hpp"
#include "spinsc/quantization.hpp"

using namespace spinsc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %d [%s] %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Jz levels are exact for j in {5, 20, 200}.
void jz_exactness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool countOk = true;
  for (int twiceJ : {10, 40, 400}) {
    const auto ops = build_operators(ModelSpec::jz_model(Spin::from_twice(twiceJ), 1.0));
    const ClassicalSystem sys(ops);
    const LevelTable t = quantize_all(sys);
    countOk = countOk && t.levels.size() == static_cast<std::size_t>(twiceJ + 1);
    for (std::size_t n = 0; n < t.levels.size(); ++n) {
      const double ref = oracle::jz_level(ops.hbar, 1.0, 0.5 * twiceJ, static_cast<int>(n));
      worst = std::max(worst, std::abs(t.levels[n].energy - ref) / ops.hbar);
    }
  }
  const double dt = seconds_since(t0);
  report(1, "Jz exactness", countOk && worst <= 1e-8 && dt <= 10.0,
         fmt("max |E_n - hbar omega (n-j)| / hbar omega = %.3e (tol 1e-8), %.2f s (limit 10 s)", worst, dt));
}

// 2. Jz j = 50 fields against the closed forms, and exact vs semiclassical overlap.
void jz_fields() {
  const auto t0 = Clock::now();
  const Spin s = Spin::from_twice(100);
  const double j = 50.0;
  const auto ops = build_operators(ModelSpec::jz_model(s, 1.0));
  const ClassicalSystem sys(ops);
  const LevelTable table = quantize_all(sys);
  const ExactSpectrum ex = eigendecompose(ops);
  const PhaseGrid g(256, s, ops.hbar);
  double worstSc = 0.0, worstEx = 0.0, minOverlap = 1.0;
  int minOverlapM = 0;
  for (int i = 0; i <= 100; ++i) {
    const double m = i - j;
    const QuantizedLevel& lv = table.levels[i];
    const HusimiField sc = semiclassical_husimi(sys, lv, level_functionals(sys, lv), g);
    const HusimiField exf = exact_husimi(ex.states.col(i), s, g);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      if (!g.active(c)) continue;
      const double r = std::norm(g.z(c));
      const double refEx = oracle::jz_husimi_exact(j, m, r);
      if (refEx > 1e-290) worstEx = std::max(worstEx, std::abs(exf.raw[c] - refEx) / refEx);
      if (r <= 1e-3) continue;
      const double refSc = oracle::jz_husimi_semiclassical(j, m, r);
      if (refSc > 1e-290) worstSc = std::max(worstSc, std::abs(sc.raw[c] - refSc) / refSc);
    }
    const double ov = compare_fields(exf, sc).overlap;
    if (ov < minOverlap) {
      minOverlap = ov;
      minOverlapM = static_cast<int>(m);
    }
  }
  const double dt = seconds_since(t0);
  report(2, "Jz j=50 Husimi closed forms", worstSc <= 1e-6 && worstEx <= 1e-10 && minOverlap >= 0.99 && dt <= 60.0,
         fmt("semiclassical rel err %.2e (tol 1e-6), exact rel err %.2e (tol 1e-10), min overlap %.4f at m=%d "
             "(tol 0.99), %.1f s (limit 60 s)",
             worstSc, worstEx, minOverlap, minOverlapM, dt));
}

struct LmgRun {
  SpinOperatorSet ops;
  ClassicalSystem sys;
  LevelTable table;
  ExactSpectrum exact;
  double quantizeSeconds = 0.0;
};

LmgRun& lmg200() {
  static LmgRun run = [] {
    const auto ops = build_operators(ModelSpec::lmg(Spin::from_twice(400), 1.0, 1000.0));
    const auto t0 = Clock::now();
    ClassicalSystem sys(ops);
    LevelTable t = quantize_all(sys);
    ExactSpectrum ex = eigendecompose(ops);
    const double dt = seconds_since(t0);
    return LmgRun{ops, std::move(sys), std::move(t), std::move(ex), dt};
  }();
  return run;
}

// 3. LMG j = 200 Bohr-Sommerfeld levels.
void lmg_levels() {
  LmgRun& r = lmg200();
  const double span = r.sys.span();
  std::vector<double> err;
  for (std::size_t i = 0; i < r.table.levels.size(); ++i)
    if (!r.table.levels[i].has_flag(flags::kNearSeparatrix))
      err.push_back(std::abs(r.table.levels[i].energy - r.exact.levels[i].energy));
  const bool countOk = r.table.levels.size() == 401u && !err.empty();
  double median = INFINITY;
  if (!err.empty()) {
    std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
    median = err[err.size() / 2];
  }
  const double e200 = std::abs(r.table.levels[200].energy - r.exact.levels[200].energy);
  const double e270 = std::abs(r.table.levels[270].energy - r.exact.levels[270].energy);
  report(3, "LMG j=200 levels",
         countOk && median <= 1e-3 * span && e200 <= 2e-3 * span && e270 <= 2e-3 * span && r.quantizeSeconds <= 300.0,
         fmt("median err/span %.2e over %zu unflagged levels (tol 1e-3), state 200 %.2e, state 270 %.2e (tol 2e-3), "
             "%.1f s (limit 300 s)",
             median / span, err.size(), e200 / span, e270 / span, r.quantizeSeconds));
}

// 4. LMG j = 200 Husimi fields for states 200 and 270; zero-based first, then one-based.
void lmg_fields() {
  LmgRun& r = lmg200();
  const PhaseGrid g(256, r.ops.spin, r.ops.hbar);
  auto check = [&](int base, std::string& detail) {
    bool ok = true;
    for (int state : {200, 270}) {
      const int idx = state - base;
      const QuantizedLevel& lv = r.table.levels[idx];
      const LevelFunctionals lf = level_functionals(r.sys, lv);
      const HusimiField sc = semiclassical_husimi(r.sys, lv, lf, g);
      const HusimiField exf = exact_husimi(r.exact.states.col(idx), r.ops.spin, g);
      const FieldMetrics m = compare_fields(exf, sc);
      const bool pass = m.overlap >= 0.98 && m.argmaxDistance <= 2;
      ok = ok && pass;
      detail += fmt("state %d: overlap %.4f (tol 0.98), argmax distance %d cells (tol 2)%s; ", state, m.overlap,
                    m.argmaxDistance, lf.available ? "" : ", shape-only");
    }
    return ok;
  };
  std::string detail0 = "zero-based: ";
  if (check(0, detail0)) {
    report(4, "LMG j=200 Husimi", true, detail0);
    return;
  }
  std::string detail1 = "one-based: ";
  const bool ok1 = check(1, detail1);
  report(4, "LMG j=200 Husimi", ok1, detail0 + detail1);
}

// 5. Numerical hygiene.
void hygiene() {
  std::vector<std::string> failed;
  std::string detail;

  const Spin s = Spin::from_twice(41);
  const auto ops = build_operators(ModelSpec::lmg(s, 0.9, 4.0));
  const cplx i(0.0, 1.0);
  const double h = ops.hbar;
  const double comm = (ops.jx * ops.jy - ops.jy * ops.jx - i * h * ops.jz).cwiseAbs().maxCoeff() / (h * h * s.value());
  if (comm > 1e-12) failed.push_back("commutators");
  detail += fmt("commutators %.1e; ", comm);

  oracle::Gen gen(17);
  double normErr = 0.0, derivErr = 0.0;
  const SymbolEvaluator ev(ops);
  for (int t = 0; t < 40; ++t) {
    const cplx z = std::polar(std::exp(gen.uniform(-3.0, 3.0)), gen.uniform(-3.2, 3.2));
    normErr = std::max(normErr, std::abs(coherent_vector(z, s).logNorm2 - 41.0 * std::log1p(std::norm(z))) /
                                    std::max(1.0, 41.0 * std::log1p(std::norm(z))));
    const cplx zz = std::polar(std::exp(gen.uniform(-1.0, 1.0)), gen.uniform(-3.2, 3.2));
    const double d = 1e-5 * std::abs(zz);
    const double ex = (ev.energy(zz + d) - ev.energy(zz - d)) / (2 * d);
    const double ey = (ev.energy(zz + cplx(0, d)) - ev.energy(zz - cplx(0, d))) / (2 * d);
    const cplx fd = cplx(ex, -ey) / 2.0;
    const SymbolValue v = ev.evaluate(zz);
    derivErr = std::max(derivErr, std::abs(v.dHdz - fd) / std::max(std::abs(fd), 1e-300));
  }
  if (normErr > 1e-10) failed.push_back("coherent norm");
  if (derivErr > 1e-5) failed.push_back("derivatives");
  detail += fmt("<z|z> %.1e; dH/dz %.1e; ", normErr, derivErr);

  LmgRun& r = lmg200();
  OrbitTolerances tol;
  tol.keepSamples = false;
  double drift = 0.0, dsde = 0.0;
  for (const auto& br : r.sys.branches()) {
    const double e = br.eBottom + br.sigma * 0.5 * br.maxDepth;
    const PeriodicOrbit o = orbit_at_energy(r.sys, br.id, e, tol);
    drift = std::max(drift, o.maxEnergyDrift / r.sys.span());
    const double step = 1e-4 * r.sys.span();
    const double lo = orbit_at_energy(r.sys, br.id, e - step, tol).action;
    const double hi = orbit_at_energy(r.sys, br.id, e + step, tol).action;
    dsde = std::max(dsde, std::abs((hi - lo) / (2 * step) - o.period) / o.period);
  }
  if (drift > 1e-9) failed.push_back("energy drift");
  if (dsde > 1e-4) failed.push_back("dS/dE");
  detail += fmt("drift %.1e; dS/dE-T %.1e; ", drift, dsde);

  const PhaseGrid g(128, r.ops.spin, r.ops.hbar);
  const HusimiField f = exact_husimi(r.exact.states.col(123), r.ops.spin, g);
  const HusimiField n1 = normalize_field(f);
  const HusimiField n2 = normalize_field(n1);
  const auto v1 = n1.values(), v2 = n2.values();
  const bool idem = std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0;
  if (!idem) failed.push_back("normalization idempotence");

  const ClassicalSystem sys2(r.ops);
  const LevelTable again = quantize_all(sys2);
  bool same = again.levels.size() == r.table.levels.size();
  for (std::size_t k = 0; same && k < again.levels.size(); ++k)
    same = std::memcmp(&again.levels[k].energy, &r.table.levels[k].energy, sizeof(double)) == 0 &&
           again.levels[k].flags == r.table.levels[k].flags;
  const QuantizedLevel& lv = r.table.levels[123];
  const HusimiField a = semiclassical_husimi(r.sys, lv, level_functionals(r.sys, lv), g, Execution::Parallel);
  const HusimiField b = semiclassical_husimi(sys2, again.levels[123], level_functionals(sys2, again.levels[123]), g,
                                             Execution::Serial);
  same = same && std::memcmp(a.raw.data(), b.raw.data(), a.raw.size() * sizeof(double)) == 0;
  if (!same) failed.push_back("determinism");
  detail += fmt("idempotence %s; reruns %s", idem ? "bitwise" : "differs", same ? "bitwise" : "differ");

  std::string names;
  for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
  report(5, "numerical hygiene", failed.empty(), detail + (failed.empty() ? "" : " | failed: " + names));
}

}  // namespace

int main() {
  jz_exactness();
  jz_fields();
  lmg_levels();
  lmg_fields();
  hygiene();
  std::printf("%d of 5 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
