#include "spinsc/husimi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spinsc/detail/coherent_kernel.hpp"
#include "spinsc/errors.hpp"

namespace spinsc {

PhaseGrid::PhaseGrid(int n, Spin spin, double hbar, double zmax) : n_(n), hbar_(hbar), zmax_(zmax) {
  if (n < 2) throw ConfigError("grid: N must be at least 2");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("grid: hbar must be positive");
  if (!(zmax > 0.0)) throw ConfigError("grid: zmax must be positive");
  hbarJ_ = hbar * spin.value();
  radius_ = 2.0 * std::sqrt(hbarJ_);
  step_ = 2.0 * radius_ / n;
  measure_ = step_ * step_ / (2.0 * std::numbers::pi * hbar);
  active_.assign(cells(), 0);
  z_.assign(cells(), cplx(0.0));
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const double qq = q(col), pp = p(row);
      const double den = 4.0 * hbarJ_ - (qq * qq + pp * pp);
      if (!(den > 0.0)) continue;
      const cplx z = cplx(qq, pp) / std::sqrt(den);
      if (!(std::abs(z) <= zmax)) continue;
      const std::size_t cell = static_cast<std::size_t>(row) * n + col;
      active_[cell] = 1;
      z_[cell] = z;
      ++activeCount_;
    }
}

bool PhaseGrid::same_as(const PhaseGrid& o) const {
  return n_ == o.n_ && hbar_ == o.hbar_ && hbarJ_ == o.hbarJ_ && zmax_ == o.zmax_ && active_ == o.active_;
}

const char* to_string(HusimiKind kind) { return kind == HusimiKind::Exact ? "exact" : "semiclassical"; }

std::vector<double> HusimiField::values() const {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = value(i);
  return out;
}

namespace {

// Runs body(row) for every row, serially or split across the OpenMP team.
template <class Body>
void for_rows(int n, Execution exec, Body&& body) {
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int row = 0; row < n; ++row) body(row);
  } else {
    for (int row = 0; row < n; ++row) body(row);
  }
}

}  // namespace

HusimiField exact_husimi(const Eigen::VectorXcd& state, Spin spin, const PhaseGrid& grid, Execution exec) {
  if (state.size() != spin.dim()) throw ConfigError("exact_husimi: state dimension does not match 2j + 1");
  HusimiField f;
  f.grid = grid;
  f.kind = HusimiKind::Exact;
  f.raw.assign(grid.cells(), 0.0);
  const auto lb = detail::half_log_binomials(spin.twice());
  const int n = grid.n();
  for_rows(n, exec, [&](int row) {
    std::vector<cplx> v(static_cast<std::size_t>(spin.dim()));
    for (int col = 0; col < n; ++col) {
      const std::size_t cell = static_cast<std::size_t>(row) * n + col;
      if (!grid.active(cell)) continue;
      const auto w = detail::fill_coherent(lb, grid.z(cell), v.data());
      cplx amp = 0.0;
      for (int k = w.lo; k <= w.hi; ++k) amp += std::conj(v[k]) * state[k];
      f.raw[cell] = std::norm(amp);
    }
  });
  return f;
}

LevelFunctionals level_functionals(const ClassicalSystem& sys, const QuantizedLevel& level,
                                   std::optional<double> dE, const OrbitTolerances& tol) {
  LevelFunctionals out;
  if (level.branch < 0) return out;
  const OrbitFunctionals of = orbit_functionals(sys, level.branch, level.energy, dE, tol);
  out.period = of.period;
  out.dSkdE = of.dSkdE;
  out.available = true;
  return out;
}

HusimiField semiclassical_husimi(const ClassicalSystem& sys, const QuantizedLevel& level,
                                 const LevelFunctionals& functionals, const PhaseGrid& grid, Execution exec) {
  if (grid.hbar() != sys.hbar() || grid.hbar_j() != sys.hbar_j())
    throw ConfigError("semiclassical_husimi: grid and model disagree on hbar or j");
  double denominator = 1.0;
  double periodRef = 4.0 * std::numbers::pi * sys.hbar_j() / sys.span();
  if (functionals.available) {
    denominator = functionals.period + functionals.dSkdE;
    periodRef = functionals.period;
    if (!(denominator > 0.0) || !std::isfinite(denominator)) {
      std::ostringstream os;
      os << "semiclassical_husimi: T + dI/dE = " << denominator << " at E = " << level.energy << " is not positive";
      throw NumericalError(os.str());
    }
  }
  const double j = sys.spin().value();
  const double hbar = sys.hbar();
  const double speedFloor = 1e-8 * 4.0 * sys.hbar_j() / periodRef;
  const double prefactor = std::sqrt(std::numbers::pi) / j / denominator;

  HusimiField f;
  f.grid = grid;
  f.kind = HusimiKind::Semiclassical;
  f.state = level.index;
  f.energy = level.energy;
  f.shapeOnly = !functionals.available;
  f.raw.assign(grid.cells(), 0.0);
  const int n = grid.n();
  std::vector<std::size_t> guarded(static_cast<std::size_t>(n), 0);

  for_rows(n, exec, [&](int row) {
    for (int col = 0; col < n; ++col) {
      const std::size_t cell = static_cast<std::size_t>(row) * n + col;
      if (!grid.active(cell)) continue;
      const cplx z = grid.z(cell);
      // Evaluate in the chart with |c| <= 1. (1+|z|^2)/|zdot| and g |zdot|^2
      // only depend on the sphere speed 2|cdot|/(1+|c|^2).
      const bool north = std::norm(z) > 1.0;
      const cplx c = north ? other_chart(z) : z;
      const SymbolEvaluator& ev = sys.evaluator(north ? Chart::North : Chart::South);
      const SymbolValue s = ev.evaluate(c);
      const double sphereSpeed = 2.0 * std::abs(ev.velocity(s)) / (1.0 + std::norm(c));
      const double zdot = 0.5 * sphereSpeed * (1.0 + std::norm(z));
      if (!(zdot >= speedFloor)) {
        ++guarded[row];
        continue;
      }
      // A is chart dependent: its Laplacian part is a scalar, the first-derivative
      // part B transforms as B_south = -B_north / |w|^2 under w = 1/z.
      double a = s.a;
      if (north) {
        const double rc = std::norm(c);
        const double b = (1.0 + rc) / (2.0 * j) * (c * s.dHdz).real();
        a = (s.a - b) - b / rc;
      }
      const double x = level.energy - s.h + a;
      f.raw[cell] = prefactor * 2.0 / sphereSpeed * std::exp(-x * x / (hbar * hbar * j * sphereSpeed * sphereSpeed));
    }
  });
  for (auto g : guarded) f.guardCells += g;
  return f;
}

HusimiField normalize_field(const HusimiField& field) {
  double sum = 0.0;
  for (std::size_t i = 0; i < field.raw.size(); ++i) sum += field.raw[i];
  sum *= field.grid.measure();
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw NumericalError("normalize_field: field has no positive finite mass");
  HusimiField out = field;
  out.normConstant = sum;
  return out;
}

FieldMetrics compare_values(std::span<const double> a, std::span<const double> b, int n, double measure) {
  if (a.size() != b.size() || a.size() != static_cast<std::size_t>(n) * n)
    throw ConfigError("compare: fields have different sizes");
  FieldMetrics m;
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    m.l1 += d;
    diff2 += d * d;
    norm2 += a[i] * a[i];
    m.overlap += std::sqrt(a[i] * b[i]);
    if (d > m.supDifference) {
      m.supDifference = d;
      m.supCell = i;
    }
    if (a[i] > a[m.argmaxA]) m.argmaxA = i;
    if (b[i] > b[m.argmaxB]) m.argmaxB = i;
  }
  m.l1 *= measure;
  m.overlap *= measure;
  m.l2Relative = norm2 > 0.0 ? std::sqrt(diff2 / norm2) : std::sqrt(diff2);
  const int ra = static_cast<int>(m.argmaxA / n), ca = static_cast<int>(m.argmaxA % n);
  const int rb = static_cast<int>(m.argmaxB / n), cb = static_cast<int>(m.argmaxB % n);
  m.argmaxDistance = std::max(std::abs(ra - rb), std::abs(ca - cb));
  return m;
}

FieldMetrics compare_fields(const HusimiField& a, const HusimiField& b) {
  if (!a.grid.same_as(b.grid)) throw ConfigError("compare: fields live on different grids");
  const auto va = normalize_field(a).values();
  const auto vb = normalize_field(b).values();
  return compare_values(va, vb, a.grid.n(), a.grid.measure());
}

}  // namespace spinsc
