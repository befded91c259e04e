#pragma once

// SK-corrected Bohr-Sommerfeld quantization on the contour families of a
// ClassicalSystem: sigma (S + I_SK)(E_n) = (2n + 1) pi hbar per branch, levels
// merged across branches and ranked by energy.

#include <string>
#include <vector>

#include "spinsc/classical.hpp"
#include "spinsc/execution.hpp"
#include "spinsc/levels.hpp"

namespace spinsc {

struct QuantizationOptions {
  OrbitTolerances orbit{};
  int samplesPerState = 4;   // bracketing samples per branch = samplesPerState * (2j + 1)
  double rootTol = 1e-12;    // bracket width relative to max(|E|, span)
  Execution execution = Execution::Parallel;
};

/// Oriented action sigma (S + I_SK) on a branch at a reachable energy.
double action_total(const ClassicalSystem& sys, int branch, double energy, const OrbitTolerances& tol = {});

/// The same function of the depth d = sigma (E - E_bottom), including the
/// harmonic limit at d = 0, the linear extension for d < 0 (slope T_c) and the
/// closed top of a single-family sphere. `period` receives dS/dE there.
double branch_action(const ClassicalSystem& sys, int branch, double depth, double* period = nullptr,
                     const OrbitTolerances& tol = {});

struct BranchLevels {
  int branch = -1;
  std::vector<QuantizedLevel> levels;  // ascending energy
  std::vector<std::string> reports;
  double actionLow = 0.0, actionHigh = 0.0;
};

BranchLevels quantize(const ClassicalSystem& sys, int branch, const QuantizationOptions& options = {});

struct LevelTable {
  std::vector<QuantizedLevel> levels;  // ascending, index = rank
  std::vector<std::string> reports;
  int expected = 0;    // 2j + 1
  int gapLevels = 0;   // placed inside separatrix gaps
};

/// All branches, merged; levels missing from the count 2j + 1 are placed inside
/// the uncovered (separatrix) energy windows and flagged near-separatrix.
LevelTable quantize_all(const ClassicalSystem& sys, const QuantizationOptions& options = {});

}  // namespace spinsc
