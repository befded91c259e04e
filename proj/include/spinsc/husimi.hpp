#pragma once

// Husimi fields on the (q, p) disk: exact |<z|n>|^2 from eigenvectors, the
// semiclassical residue formula from orbit functionals, normalization with the
// measure dq dp / (2 pi hbar), and scale-free comparison metrics.

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinsc/classical.hpp"
#include "spinsc/execution.hpp"
#include "spinsc/levels.hpp"

namespace spinsc {

/// N x N cell-centred lattice over [-R, R]^2, R = 2 sqrt(hbar j). Cell (row, col)
/// sits at q = -R + (col + 1/2) h, p = -R + (row + 1/2) h, stored row-major.
class PhaseGrid {
 public:
  PhaseGrid() = default;
  /// Throws ConfigError for n < 2, non-positive hbar or zmax.
  PhaseGrid(int n, Spin spin, double hbar, double zmax = 1e6);

  int n() const { return n_; }
  std::size_t cells() const { return static_cast<std::size_t>(n_) * n_; }
  double hbar() const { return hbar_; }
  double hbar_j() const { return hbarJ_; }
  double radius() const { return radius_; }
  double step() const { return step_; }
  double zmax() const { return zmax_; }
  double q(int col) const { return -radius_ + (col + 0.5) * step_; }
  double p(int row) const { return -radius_ + (row + 0.5) * step_; }
  /// dq dp / (2 pi hbar).
  double measure() const { return measure_; }
  bool active(std::size_t cell) const { return active_[cell] != 0; }
  std::size_t active_count() const { return activeCount_; }
  /// South-chart coordinate of an active cell.
  cplx z(std::size_t cell) const { return z_[cell]; }

  bool same_as(const PhaseGrid& o) const;

 private:
  int n_ = 0;
  double hbar_ = 1.0, hbarJ_ = 1.0, radius_ = 2.0, step_ = 1.0, zmax_ = 1e6, measure_ = 1.0;
  std::vector<char> active_;
  std::vector<cplx> z_;
  std::size_t activeCount_ = 0;
};

enum class HusimiKind { Exact, Semiclassical };
const char* to_string(HusimiKind kind);

/// Raw values plus a normalization constant; value(i) = raw[i] / normConstant.
/// Keeping the raw data makes normalization bitwise idempotent.
struct HusimiField {
  PhaseGrid grid;
  std::vector<double> raw;  // 0 on masked cells
  HusimiKind kind = HusimiKind::Exact;
  int state = -1;
  double energy = 0.0;
  double normConstant = 1.0;
  std::size_t guardCells = 0;  // cells zeroed by the fixed-point guard
  bool shapeOnly = false;      // semiclassical prefactor 1/(T + dI/dE) unavailable

  double value(std::size_t cell) const { return raw[cell] / normConstant; }
  std::vector<double> values() const;
};

/// |<z|n>|^2 / <z|z> for the normalized state `state` (a column of eigenvectors).
HusimiField exact_husimi(const Eigen::VectorXcd& state, Spin spin, const PhaseGrid& grid,
                         Execution exec = Execution::Parallel);

/// Orbit-derived data entering the residue formula once per level.
struct LevelFunctionals {
  double period = 0.0;      // T(E_n)
  double dSkdE = 0.0;       // dI_SK/dE at E_n
  bool available = false;   // false: shape-only field
};

/// T and dI_SK/dE at the level energy on its branch. Levels without a branch
/// (separatrix window placements) return available = false.
LevelFunctionals level_functionals(const ClassicalSystem& sys, const QuantizedLevel& level,
                                   std::optional<double> dE = {}, const OrbitTolerances& tol = {});

/// Semiclassical residue field at every active cell. Cells where |zdot| falls
/// below 1e-8 * 4 hbar j / T are set to 0 and counted in guardCells.
HusimiField semiclassical_husimi(const ClassicalSystem& sys, const QuantizedLevel& level,
                                 const LevelFunctionals& functionals, const PhaseGrid& grid,
                                 Execution exec = Execution::Parallel);

/// normConstant = sum(raw * measure) in row-major order. Throws NumericalError
/// for an all-zero field.
HusimiField normalize_field(const HusimiField& field);

struct FieldMetrics {
  double l1 = 0.0;            // sum |a - b| * measure
  double l2Relative = 0.0;    // ||a - b||_2 / ||a||_2
  double overlap = 0.0;       // sum sqrt(a b) * measure
  double supDifference = 0.0;
  std::size_t supCell = 0;    // location of sup |a - b|
  std::size_t argmaxA = 0, argmaxB = 0;
  int argmaxDistance = 0;     // Chebyshev distance in cells
};

/// Metrics on two normalized value arrays over the same n x n lattice.
FieldMetrics compare_values(std::span<const double> a, std::span<const double> b, int n, double measure);

/// Both fields are normalized first. Throws ConfigError on grid mismatch.
FieldMetrics compare_fields(const HusimiField& a, const HusimiField& b);

}  // namespace spinsc
