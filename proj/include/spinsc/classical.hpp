#pragma once

// Real classical layer: the stereographic chart and its canonical (q, p)
// companion, Hamilton's flow, periodic orbits with their action and SK
// integral, the census of critical points and the contour families (branches)
// that the Bohr-Sommerfeld condition is solved on.

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spinsc/spin_algebra.hpp"
#include "spinsc/symbol.hpp"

namespace spinsc {

/// South: z with |j,-j> at z = 0. North: w = 1/z, evaluated with the flipped
/// Hamiltonian, so the north pole sits at w = 0.
enum class Chart { South, North };

inline const char* to_string(Chart c) { return c == Chart::South ? "south" : "north"; }

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

/// z = (q + ip) / sqrt(4 hbar j - q^2 - p^2). Throws ConfigError outside the open disk.
cplx chart_z(PhasePoint pt, double hbarJ);
/// Inverse map: q + ip = z sqrt(4 hbar j / (1 + |z|^2)).
PhasePoint chart_qp(cplx z, double hbarJ);

/// Unit vector on the sphere for a chart point.
struct SpherePoint {
  double x, y, z;
};
SpherePoint sphere_point(Chart chart, cplx coord);
/// Coordinate of the same physical point in the other chart (w = 1/z).
cplx other_chart(cplx coord);

struct OrbitTolerances {
  double rtol = 1e-12;
  double atol = 1e-14;
  double sectionTol = 1e-12;  // crossing time, relative to the elapsed time
  long maxSteps = 400000;
  double maxTime = std::numeric_limits<double>::infinity();
  double zmax = 1e6;          // orbits reaching |z| beyond this left the chart
  bool keepSamples = true;
};

struct OrbitSample {
  double t = 0.0;
  cplx z;
};

struct PeriodicOrbit {
  Chart chart = Chart::South;
  int branch = -1;
  std::vector<OrbitSample> samples;
  double period = 0.0;
  double energy = 0.0;          // symbol value at the start point
  double action = 0.0;          // S = i hbar j \oint (zbar dz - z dzbar)/(1 + |z|^2), flow orientation
  double skIntegral = 0.0;      // \int_0^T A dt
  double closureResidual = 0.0; // |z(T) - z(0)|
  double maxEnergyDrift = 0.0;  // max |E(z_k) - E(z_0)| over samples
  long steps = 0;
};

/// dz/dt = (1/(i hbar g)) dH/dzbar at a real point.
cplx hamilton_rhs(const SymbolEvaluator& eval, cplx z);

enum class CriticalKind { Minimum, Maximum, Saddle, Degenerate };
const char* to_string(CriticalKind k);

struct CriticalPoint {
  Chart chart = Chart::South;  // chart in which `coord` is given (|coord| <= 1 unless a pole)
  cplx coord;
  bool northPole = false;
  double energy = 0.0;
  CriticalKind kind = CriticalKind::Degenerate;
  double omega = 0.0;       // harmonic frequency at an extremum
  double skValue = 0.0;     // A at the point, in `chart`
};

enum class BranchEnd { Saddle, Extremum, GridMerge };

/// A one-parameter family of contours around an extremum of the symbol.
/// Energies are parametrised by the depth d = sigma (E - eBottom) >= 0, along
/// which the oriented action sigma (S + I_SK) grows monotonically.
struct Branch {
  int id = -1;
  int anchor = -1;          // index into critical_points()
  Chart chart = Chart::South;
  cplx anchorCoord;
  double sigma = 1.0;       // +1 around a minimum, -1 around a maximum
  double eBottom = 0.0;
  double eEnd = 0.0;        // critical energy where the family stops
  BranchEnd endKind = BranchEnd::Extremum;
  int endCritical = -1;
  double bottomPeriod = 0.0;  // harmonic period at the anchor
  double bottomSk = 0.0;      // limit of I_SK at the anchor (A * T_c)
  double bottomAction = 0.0;  // limit of sigma (S + I_SK) at the anchor
  double maxDepth = 0.0;      // usable depth range is [0, maxDepth]
  // Only for endKind == Extremum (two critical points on the sphere).
  double topPeriod = 0.0;
  double topSk = 0.0;
  double topAction = 0.0;
};

struct CensusOptions {
  int gradientGrid = 64;  // per chart, over its hemisphere
  int sweepGrid = 128;    // (q, p) lattice for the contour-tree sweep
};

/// Classical system built from a Hamiltonian: both chart evaluators, symbol
/// range, critical points and branch census. Immutable after construction.
class ClassicalSystem {
 public:
  explicit ClassicalSystem(const SpinOperatorSet& ops, const CensusOptions& options = {});

  const SymbolEvaluator& evaluator(Chart c) const { return c == Chart::South ? south_ : north_; }
  Spin spin() const { return south_.spin(); }
  double hbar() const { return south_.hbar(); }
  double hbar_j() const { return south_.hbar() * south_.j(); }

  double energy_min() const { return emin_; }
  double energy_max() const { return emax_; }
  double span() const { return emax_ - emin_; }
  /// Half-width of the refused window around every saddle energy.
  double guard_band() const { return 1e-3 * span(); }
  bool near_saddle(double energy) const;

  const std::vector<CriticalPoint>& critical_points() const { return critical_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch& branch(int id) const;
  const std::vector<std::string>& reports() const { return reports_; }
  /// Branches whose usable energy range contains `energy`.
  std::vector<int> branches_at(double energy) const;

  /// Fraction of the sphere's area where the symbol lies in [lo, hi), from the sweep grid.
  double area_fraction(double lo, double hi) const;

 private:
  void find_critical_points(const CensusOptions& options);
  void build_branches(const CensusOptions& options);

  SymbolEvaluator south_, north_;
  double emin_ = 0.0, emax_ = 0.0;
  std::vector<CriticalPoint> critical_;
  std::vector<Branch> branches_;
  std::vector<std::string> reports_;
  std::vector<double> sweepValues_;  // symbol on the unmasked sweep-grid cells
};

/// Integrates Hamilton's flow from `start` until the first return to the
/// section through `start` normal to the initial velocity; the crossing time is
/// refined by root finding on single Runge-Kutta steps.
PeriodicOrbit integrate_periodic_orbit(const ClassicalSystem& sys, Chart chart, cplx start,
                                       const OrbitTolerances& tol = {});

/// Locates the contour of `branch` at energy `energy` by bisection along a ray
/// from the branch anchor and integrates its orbit.
PeriodicOrbit orbit_at_energy(const ClassicalSystem& sys, int branch, double energy,
                              const OrbitTolerances& tol = {});

/// Start point on the contour (first crossing along the search ray).
cplx contour_start(const ClassicalSystem& sys, int branch, double energy);

struct OrbitFunctionals {
  double energy = 0.0;
  double period = 0.0;
  double dSkdE = 0.0;
  double d2SdE2 = 0.0;
  double stencil = 0.0;  // dE actually used
  bool oneSided = false;
};

/// T(E), dI_SK/dE and d^2S/dE^2 on a branch (central differences with step dE,
/// halved when the stencil leaves the branch or the action jumps).
OrbitFunctionals orbit_functionals(const ClassicalSystem& sys, int branch, double energy,
                                   std::optional<double> dE = {}, const OrbitTolerances& tol = {});

}  // namespace spinsc
