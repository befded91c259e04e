#pragma once

#include <string>
#include <vector>

namespace spinsc {

enum class LevelMethod { Exact, BohrSommerfeld };

inline const char* to_string(LevelMethod m) {
  return m == LevelMethod::Exact ? "exact" : "bohr-sommerfeld";
}

/// One energy level. For Bohr-Sommerfeld levels `n` counts from the bottom of
/// the contour family `branch`; `index` is the rank in the merged ascending list.
struct QuantizedLevel {
  int index = -1;
  int n = 0;
  double energy = 0.0;
  LevelMethod method = LevelMethod::Exact;
  int branch = -1;
  double residual = 0.0;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const {
    for (const auto& x : flags)
      if (x == f) return true;
    return false;
  }
};

namespace flags {
inline constexpr const char* kDegenerate = "degenerate";
inline constexpr const char* kNearSeparatrix = "near-separatrix";
inline constexpr const char* kBelowExtremum = "below-classical-extremum";
inline constexpr const char* kNonMonotone = "non-monotone-action";
}  // namespace flags

}  // namespace spinsc
