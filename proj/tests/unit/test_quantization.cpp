#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "spinsc/quantization.hpp"

using namespace spinsc;

TEST_CASE("SK-corrected Bohr-Sommerfeld is exact for Jz") {
  for (int twiceJ : {5, 10, 40}) {
    const double omega = 0.8;
    const auto ops = build_operators(ModelSpec::jz_model(Spin::from_twice(twiceJ), omega));
    const ClassicalSystem sys(ops);
    const LevelTable t = quantize_all(sys);
    REQUIRE(t.levels.size() == static_cast<std::size_t>(twiceJ + 1));
    CHECK(t.gapLevels == 0);
    const double j = 0.5 * twiceJ;
    for (int n = 0; n <= twiceJ; ++n) {
      const QuantizedLevel& lv = t.levels[n];
      CHECK(lv.index == n);
      CHECK(lv.n == n);
      CHECK(lv.method == LevelMethod::BohrSommerfeld);
      CHECK(std::abs(lv.energy - oracle::jz_level(ops.hbar, omega, j, n)) <= 1e-8 * ops.hbar * omega);
      CHECK(lv.residual <= 1e-8 * std::numbers::pi * ops.hbar);
    }
  }
}

TEST_CASE("LMG with alpha = 0 quantizes like Jz") {
  const Spin s = Spin::from_twice(16);
  const auto ops = build_operators(ModelSpec::lmg(s, 1.0, 0.0));
  const ClassicalSystem sys(ops);
  const LevelTable t = quantize_all(sys);
  REQUIRE(t.levels.size() == 17u);
  for (int n = 0; n < 17; ++n) CHECK(std::abs(t.levels[n].energy - oracle::jz_level(ops.hbar, 1.0, 8.0, n)) <= 1e-8 * ops.hbar);
}

namespace {

const ClassicalSystem& lmg20() {
  static const SpinOperatorSet ops = build_operators(ModelSpec::lmg(Spin::from_twice(40), 1.0, 30.0));
  static const ClassicalSystem sys(ops);
  return sys;
}

}  // namespace

TEST_CASE("per-branch levels: oriented energy increases with n, residuals small") {
  const ClassicalSystem& sys = lmg20();
  const LevelTable t = quantize_all(sys);
  CHECK(static_cast<int>(t.levels.size()) == t.expected);
  for (std::size_t i = 0; i + 1 < t.levels.size(); ++i) CHECK(t.levels[i].energy <= t.levels[i + 1].energy);
  std::map<int, std::vector<QuantizedLevel>> byBranch;
  for (const auto& lv : t.levels)
    if (lv.branch >= 0) byBranch[lv.branch].push_back(lv);
  CHECK(byBranch.size() == sys.branches().size());
  for (auto& [id, levels] : byBranch) {
    const Branch& br = sys.branch(id);
    std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
    for (std::size_t k = 0; k < levels.size(); ++k) {
      CHECK(levels[k].n == static_cast<int>(k));
      CHECK(levels[k].residual <= 1e-8 * std::numbers::pi * sys.hbar());
      if (k > 0) CHECK(br.sigma * levels[k].energy > br.sigma * levels[k - 1].energy);
      // The below-extremum flag marks exactly the levels outside the classical range.
      const double depth = br.sigma * (levels[k].energy - br.eBottom);
      CHECK(levels[k].has_flag(flags::kBelowExtremum) == (depth < 0.0));
    }
  }
  for (const auto& lv : t.levels)
    if (lv.branch < 0) CHECK(lv.has_flag(flags::kNearSeparatrix));
}

TEST_CASE("branch action is monotone in depth and matches the orbit value") {
  const ClassicalSystem& sys = lmg20();
  oracle::Gen gen(4);
  for (const auto& br : sys.branches()) {
    std::vector<double> depths;
    for (int t = 0; t < 12; ++t) depths.push_back(gen.uniform(0.0, br.maxDepth));
    std::sort(depths.begin(), depths.end());
    double prev = -INFINITY;
    for (double d : depths) {
      double period = 0.0;
      const double phi = branch_action(sys, br.id, d, &period);
      CHECK(phi > prev);
      CHECK(period > 0.0);
      prev = phi;
      CHECK(phi == doctest::Approx(action_total(sys, br.id, br.eBottom + br.sigma * d)).epsilon(1e-12));
    }
    // Continuous at the bottom and linear below it.
    const double eps = 1e-6 * br.maxDepth;
    CHECK(branch_action(sys, br.id, eps) == doctest::Approx(br.bottomAction).epsilon(1e-4));
    CHECK(branch_action(sys, br.id, -eps) == doctest::Approx(br.bottomAction - eps * br.bottomPeriod).epsilon(1e-14));
  }
}

TEST_CASE("LMG mid-well action is finite and grows with distance from the well") {
  const ClassicalSystem& sys = lmg20();
  const Branch& br = sys.branch(0);
  double prev = 0.0;
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double phi = action_total(sys, br.id, br.eBottom + br.sigma * f * br.maxDepth);
    CHECK(std::isfinite(phi));
    CHECK(phi > prev);
    prev = phi;
  }
}

TEST_CASE("serial and parallel quantization agree bitwise") {
  const ClassicalSystem& sys = lmg20();
  QuantizationOptions serial;
  serial.execution = Execution::Serial;
  QuantizationOptions parallel;
  parallel.execution = Execution::Parallel;
  const LevelTable a = quantize_all(sys, serial);
  const LevelTable b = quantize_all(sys, parallel);
  REQUIRE(a.levels.size() == b.levels.size());
  for (std::size_t i = 0; i < a.levels.size(); ++i) {
    CHECK(a.levels[i].energy == b.levels[i].energy);
    CHECK(a.levels[i].flags == b.levels[i].flags);
  }
  CHECK(a.reports == b.reports);
}

TEST_CASE("LMG j = 20 Bohr-Sommerfeld levels track the exact spectrum") {
  const ClassicalSystem& sys = lmg20();
  const auto ex = eigendecompose(build_operators(ModelSpec::lmg(Spin::from_twice(40), 1.0, 30.0)));
  const LevelTable t = quantize_all(sys);
  std::vector<double> err;
  for (std::size_t i = 0; i < t.levels.size(); ++i)
    if (!t.levels[i].has_flag(flags::kNearSeparatrix)) err.push_back(std::abs(t.levels[i].energy - ex.levels[i].energy));
  REQUIRE(!err.empty());
  std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
  CHECK(err[err.size() / 2] <= 1e-3 * sys.span());
}
