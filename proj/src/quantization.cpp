#include "spinsc/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spinsc/errors.hpp"

namespace spinsc {

double action_total(const ClassicalSystem& sys, int branchId, double energy, const OrbitTolerances& tol) {
  const PeriodicOrbit o = orbit_at_energy(sys, branchId, energy, tol);
  return sys.branch(branchId).sigma * (o.action + o.skIntegral);
}

double branch_action(const ClassicalSystem& sys, int branchId, double depth, double* period,
                     const OrbitTolerances& tol) {
  const Branch& b = sys.branch(branchId);
  const double tiny = 1e-12 * sys.span();
  double t = 0.0, phi = 0.0;
  if (depth <= tiny) {
    t = b.bottomPeriod;
    phi = b.bottomAction + b.bottomPeriod * std::min(depth, 0.0);
  } else if (b.endKind == BranchEnd::Extremum && depth >= b.maxDepth - tiny) {
    t = b.topPeriod;
    phi = b.topAction + b.topPeriod * std::max(depth - b.maxDepth, 0.0);
  } else {
    OrbitTolerances quiet = tol;
    quiet.keepSamples = false;
    const PeriodicOrbit o = orbit_at_energy(sys, branchId, b.eBottom + b.sigma * depth, quiet);
    t = o.period;
    phi = b.sigma * (o.action + o.skIntegral);
  }
  if (period) *period = t;
  return phi;
}

namespace {

struct Root {
  double depth = 0.0;
  double residual = 0.0;  // signed action mismatch at `depth`
  std::string error;
};

// Safeguarded secant/Newton inside a bracket with f(a) < 0 < f(b), f = action - target.
Root refine(const ClassicalSystem& sys, int branchId, double target, double a, double fa, double b, double fb,
            double widthTol, const OrbitTolerances& tol) {
  const double hbarPi = std::numbers::pi * sys.hbar();
  Root best{std::abs(fa) <= std::abs(fb) ? a : b, std::abs(fa) <= std::abs(fb) ? fa : fb, {}};
  double dPrev = std::numeric_limits<double>::quiet_NaN(), fPrev = 0.0;
  double d = a + (b - a) * (-fa) / (fb - fa);
  for (int it = 0; it < 80; ++it) {
    if (!(d > a && d < b)) d = 0.5 * (a + b);
    double period = 0.0;
    const double f = branch_action(sys, branchId, d, &period, tol) - target;
    if (std::abs(f) < std::abs(best.residual)) best = {d, f, {}};
    if (std::abs(f) <= 1e-11 * hbarPi) break;
    (f < 0.0 ? a : b) = d;
    (f < 0.0 ? fa : fb) = f;
    if (b - a <= widthTol) break;
    double slope = period;
    if (std::isfinite(dPrev) && d != dPrev) {
      const double secant = (f - fPrev) / (d - dPrev);
      if (secant > 0.0) slope = secant;
    }
    dPrev = d;
    fPrev = f;
    double next = d - f / slope;
    if (!(next > a && next < b)) next = a + (b - a) * (-fa) / (fb - fa);
    d = next;
  }
  return best;
}

void add_flag(QuantizedLevel& lv, const char* flag) {
  if (!lv.has_flag(flag)) lv.flags.emplace_back(flag);
}

}  // namespace

BranchLevels quantize(const ClassicalSystem& sys, int branchId, const QuantizationOptions& options) {
  const Branch& br = sys.branch(branchId);
  const double hbarPi = std::numbers::pi * sys.hbar();
  const double snap = 1e-9 * hbarPi;
  BranchLevels out;
  out.branch = branchId;

  const int samples = std::max(8, options.samplesPerState * sys.spin().dim());
  const double dHi = br.maxDepth;
  std::vector<double> depth(samples + 1), phi(samples + 1), period(samples + 1);
  std::vector<std::string> failure(samples + 1);
  for (int i = 0; i <= samples; ++i) depth[i] = i == samples ? dHi : dHi * i / samples;

  auto sample = [&](int i) {
    try {
      phi[i] = branch_action(sys, branchId, depth[i], &period[i], options.orbit);
    } catch (const std::exception& e) {
      failure[i] = e.what();
    }
  };
  if (options.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i <= samples; ++i) sample(i);
  } else {
    for (int i = 0; i <= samples; ++i) sample(i);
  }

  std::vector<int> valid;
  for (int i = 0; i <= samples; ++i) {
    if (failure[i].empty()) {
      valid.push_back(i);
    } else {
      std::ostringstream os;
      os << "branch " << branchId << ": action sample at E = " << br.eBottom + br.sigma * depth[i]
         << " skipped (" << failure[i] << ")";
      out.reports.push_back(os.str());
    }
  }
  if (valid.size() < 2 || valid.front() != 0) {
    out.reports.push_back("branch " + std::to_string(branchId) + ": too few action samples, no levels");
    return out;
  }
  std::vector<char> rising(valid.size(), 1);  // rising[k]: phi increases on [valid[k], valid[k+1]]
  for (std::size_t k = 0; k + 1 < valid.size(); ++k)
    if (!(phi[valid[k + 1]] > phi[valid[k]])) {
      rising[k] = 0;
      std::ostringstream os;
      os << "branch " << branchId << ": action not monotone between E = " << br.eBottom + br.sigma * depth[valid[k]]
         << " and E = " << br.eBottom + br.sigma * depth[valid[k + 1]];
      out.reports.push_back(os.str());
    }
  const int last = valid.back();
  out.actionLow = phi[0];
  out.actionHigh = phi[last];

  struct Target {
    int n;
    double value;
    int bracket;  // index into valid, or -1 for an endpoint / extension
    double depth;
  };
  std::vector<Target> targets;
  for (int n = 0;; ++n) {
    const double value = (2.0 * n + 1.0) * hbarPi;
    if (value > out.actionHigh + snap) break;
    Target t{n, value, -1, 0.0};
    if (value < out.actionLow - snap) {
      t.depth = (value - out.actionLow) / br.bottomPeriod;
    } else if (std::abs(value - out.actionLow) <= snap) {
      t.depth = 0.0;
    } else if (std::abs(value - out.actionHigh) <= snap) {
      t.depth = depth[last];
    } else {
      // First bracket with phi[lo] <= value < phi[hi].
      for (std::size_t k = 0; k + 1 < valid.size(); ++k)
        if (phi[valid[k]] <= value && value < phi[valid[k + 1]]) {
          t.bracket = static_cast<int>(k);
          break;
        }
      if (t.bracket < 0) {
        std::ostringstream os;
        os << "branch " << branchId << ": no bracket for n = " << n << ", skipped";
        out.reports.push_back(os.str());
        continue;
      }
    }
    targets.push_back(t);
  }

  std::vector<QuantizedLevel> levels(targets.size());
  std::vector<std::string> errors(targets.size());
  const double widthTol = options.rootTol * sys.span();
  auto solve = [&](std::size_t k) {
    const Target& t = targets[k];
    QuantizedLevel& lv = levels[k];
    lv.n = t.n;
    lv.method = LevelMethod::BohrSommerfeld;
    lv.branch = branchId;
    try {
      double d = t.depth;
      double residual = 0.0;
      if (t.bracket >= 0) {
        const int lo = valid[t.bracket], hi = valid[t.bracket + 1];
        const Root r = refine(sys, branchId, t.value, depth[lo], phi[lo] - t.value, depth[hi], phi[hi] - t.value,
                              widthTol, options.orbit);
        d = r.depth;
        residual = r.residual;
        if (hi == last && br.endKind != BranchEnd::Extremum) add_flag(lv, flags::kNearSeparatrix);
        if (!rising[t.bracket]) add_flag(lv, flags::kNonMonotone);
      } else {
        residual = branch_action(sys, branchId, d, nullptr, options.orbit) - t.value;
        if (d >= depth[last] && br.endKind != BranchEnd::Extremum) add_flag(lv, flags::kNearSeparatrix);
      }
      if (d < 0.0) add_flag(lv, flags::kBelowExtremum);
      lv.energy = br.eBottom + br.sigma * d;
      lv.residual = std::abs(residual);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (options.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < targets.size(); ++k) solve(k);
  } else {
    for (std::size_t k = 0; k < targets.size(); ++k) solve(k);
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (errors[k].empty()) {
      out.levels.push_back(levels[k]);
    } else {
      std::ostringstream os;
      os << "branch " << branchId << ": n = " << targets[k].n << " skipped (" << errors[k] << ")";
      out.reports.push_back(os.str());
    }
  }
  {
    const double next = (2.0 * (targets.empty() ? 0 : targets.back().n + 1) + 1.0) * hbarPi;
    if (br.endKind != BranchEnd::Extremum) {
      std::ostringstream os;
      os << "branch " << branchId << ": action reaches " << out.actionHigh / hbarPi
         << " pi hbar at the guard band; next target " << next / hbarPi << " pi hbar not reached";
      out.reports.push_back(os.str());
    }
  }
  std::stable_sort(out.levels.begin(), out.levels.end(),
                   [](const QuantizedLevel& a, const QuantizedLevel& b) { return a.energy < b.energy; });
  return out;
}

LevelTable quantize_all(const ClassicalSystem& sys, const QuantizationOptions& options) {
  LevelTable table;
  table.expected = sys.spin().dim();
  table.reports = sys.reports();
  struct Interval {
    double lo, hi;
  };
  std::vector<Interval> covered;
  for (const auto& br : sys.branches()) {
    BranchLevels bl = quantize(sys, br.id, options);
    table.levels.insert(table.levels.end(), bl.levels.begin(), bl.levels.end());
    table.reports.insert(table.reports.end(), bl.reports.begin(), bl.reports.end());
    const double e1 = br.eBottom, e2 = br.eBottom + br.sigma * br.maxDepth;
    covered.push_back({std::min(e1, e2), std::max(e1, e2)});
  }

  const int missing = table.expected - static_cast<int>(table.levels.size());
  if (missing < 0) {
    std::ostringstream os;
    os << "quantization: " << table.levels.size() << " levels exceed the " << table.expected << " states";
    table.reports.push_back(os.str());
  } else if (missing > 0) {
    // Uncovered windows of [E_min, E_max]: the separatrix guard bands.
    std::sort(covered.begin(), covered.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> gaps;
    double cursor = sys.energy_min();
    for (const auto& c : covered) {
      if (c.lo > cursor) gaps.push_back({cursor, c.lo});
      cursor = std::max(cursor, c.hi);
    }
    if (cursor < sys.energy_max()) gaps.push_back({cursor, sys.energy_max()});
    if (gaps.empty()) {
      std::ostringstream os;
      os << "quantization: " << missing << " level(s) not found and no uncovered energy window";
      table.reports.push_back(os.str());
    } else {
      // Largest-remainder split of the missing count by phase-space area.
      std::vector<double> weight(gaps.size());
      double total = 0.0;
      for (std::size_t g = 0; g < gaps.size(); ++g) total += weight[g] = sys.area_fraction(gaps[g].lo, gaps[g].hi);
      if (!(total > 0.0)) {
        for (auto& w : weight) w = 1.0;
        total = static_cast<double>(gaps.size());
      }
      std::vector<int> count(gaps.size());
      std::vector<std::pair<double, std::size_t>> remainder;
      int assigned = 0;
      for (std::size_t g = 0; g < gaps.size(); ++g) {
        const double share = missing * weight[g] / total;
        count[g] = static_cast<int>(std::floor(share));
        assigned += count[g];
        remainder.push_back({share - count[g], g});
      }
      std::stable_sort(remainder.begin(), remainder.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (int k = 0; k < missing - assigned; ++k) ++count[remainder[k].second];
      for (std::size_t g = 0; g < gaps.size(); ++g) {
        for (int k = 0; k < count[g]; ++k) {
          QuantizedLevel lv;
          lv.n = -1;
          lv.method = LevelMethod::BohrSommerfeld;
          lv.branch = -1;
          lv.energy = gaps[g].lo + (gaps[g].hi - gaps[g].lo) * (k + 0.5) / count[g];
          lv.residual = std::numeric_limits<double>::quiet_NaN();
          lv.flags.emplace_back(flags::kNearSeparatrix);
          table.levels.push_back(lv);
        }
        if (count[g] > 0) {
          std::ostringstream os;
          os << "quantization: " << count[g] << " level(s) placed inside the separatrix window [" << gaps[g].lo
             << ", " << gaps[g].hi << "]";
          table.reports.push_back(os.str());
        }
        table.gapLevels += count[g];
      }
    }
  }

  std::stable_sort(table.levels.begin(), table.levels.end(), [](const QuantizedLevel& a, const QuantizedLevel& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.branch != b.branch) return a.branch < b.branch;
    return a.n < b.n;
  });
  double scale = 0.0;
  for (const auto& lv : table.levels) scale = std::max(scale, std::abs(lv.energy));
  for (std::size_t i = 0; i < table.levels.size(); ++i) {
    table.levels[i].index = static_cast<int>(i);
    if (i + 1 < table.levels.size() && table.levels[i + 1].energy - table.levels[i].energy <= 1e-10 * scale) {
      add_flag(table.levels[i], flags::kDegenerate);
      add_flag(table.levels[i + 1], flags::kDegenerate);
    }
  }
  return table;
}

}  // namespace spinsc
