#include "spinsc/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "spinsc/errors.hpp"

namespace spinsc {

namespace odeint = boost::numeric::odeint;

cplx chart_z(PhasePoint pt, double hbarJ) {
  const double den = 4.0 * hbarJ - (pt.q * pt.q + pt.p * pt.p);
  if (!(den > 0.0) || !std::isfinite(den)) {
    std::ostringstream os;
    os << "phase point (" << pt.q << ", " << pt.p << ") lies outside the open disk q^2 + p^2 < " << 4.0 * hbarJ;
    throw ConfigError(os.str());
  }
  return cplx(pt.q, pt.p) / std::sqrt(den);
}

PhasePoint chart_qp(cplx z, double hbarJ) {
  const double s = std::sqrt(4.0 * hbarJ / (1.0 + std::norm(z)));
  return {z.real() * s, z.imag() * s};
}

SpherePoint sphere_point(Chart chart, cplx c) {
  const double r = std::norm(c);
  SpherePoint n{2.0 * c.real() / (1.0 + r), -2.0 * c.imag() / (1.0 + r), (r - 1.0) / (r + 1.0)};
  if (chart == Chart::North) {
    n.y = -n.y;
    n.z = -n.z;
  }
  return n;
}

cplx other_chart(cplx c) { return 1.0 / c; }

cplx hamilton_rhs(const SymbolEvaluator& eval, cplx z) { return eval.velocity(eval.evaluate(z)); }

namespace {

using State = std::array<double, 4>;  // Re z, Im z, S, I_SK

struct Flow {
  const SymbolEvaluator* ev;
  double twoHbarJ;
  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const cplx z(x[0], x[1]);
    const SymbolValue s = ev->evaluate(z);
    const cplx v = ev->velocity(s);
    dxdt[0] = v.real();
    dxdt[1] = v.imag();
    dxdt[2] = -twoHbarJ * (std::conj(z) * v).imag() / (1.0 + std::norm(z));
    dxdt[3] = s.a;
  }
};

using Stepper = odeint::runge_kutta_fehlberg78<State>;

// Step control on the phase point alone; S and I_SK are quadratures carried on
// the same nodes. The integrand A is a difference of O(j) terms, so its
// rounding noise would otherwise throttle the step size for large j.
class PointErrorChecker {
 public:
  PointErrorChecker(double atol = 1e-14, double rtol = 1e-12) : atol_(atol), rtol_(rtol) {}
  template <class Algebra>
  double error(Algebra& /*algebra*/, const State& x, const State& dxdt, State& err, double dt) const {
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double scale = atol_ + rtol_ * (std::abs(x[i]) + std::abs(dt * dxdt[i]));
      worst = std::max(worst, std::abs(err[i]) / scale);
    }
    return worst;
  }

 private:
  double atol_, rtol_;
};

using Controlled = odeint::controlled_runge_kutta<Stepper, PointErrorChecker>;

}  // namespace

PeriodicOrbit integrate_periodic_orbit(const ClassicalSystem& sys, Chart chart, cplx start, const OrbitTolerances& tol) {
  const SymbolEvaluator& ev = sys.evaluator(chart);
  const Flow flow{&ev, 2.0 * sys.hbar_j()};
  const SymbolValue s0 = ev.evaluate(start);
  const cplx v0 = ev.velocity(s0);
  const double r0 = 1.0 + std::norm(start);
  const double sphereSpeed = std::abs(v0) * 2.0 / r0;
  const double speedScale = sys.span() / sys.hbar();
  if (!(sphereSpeed > 1e-14 * speedScale)) {
    std::ostringstream os;
    os << "orbit: start point z = " << start << " is a fixed point of the flow (|dz/dt| = " << std::abs(v0) << ")";
    throw FixedPointError(os.str());
  }

  PeriodicOrbit orbit;
  orbit.chart = chart;
  orbit.energy = s0.h;

  Controlled controlled{PointErrorChecker(tol.atol, tol.rtol)};
  Stepper single;

  const cplx dir = v0 / std::abs(v0);
  auto along = [&](const State& x) { return ((cplx(x[0], x[1]) - start) * std::conj(dir)).real(); };
  auto across = [&](const State& x) { return std::abs(((cplx(x[0], x[1]) - start) * std::conj(dir)).imag()); };

  State x{start.real(), start.imag(), 0.0, 0.0};
  double t = 0.0;
  double dt = std::min(1e-2 / sphereSpeed, 1e-2 * sys.hbar_j() / std::max(sys.span(), 1e-300));
  double maxDist = 0.0;
  if (tol.keepSamples) orbit.samples.push_back({0.0, start});

  auto record = [&](double time, const State& s) {
    const cplx z(s[0], s[1]);
    orbit.maxEnergyDrift = std::max(orbit.maxEnergyDrift, std::abs(ev.energy(z) - orbit.energy));
    if (tol.keepSamples) orbit.samples.push_back({time, z});
  };

  for (;;) {
    if (orbit.steps >= tol.maxSteps || t > tol.maxTime) {
      std::ostringstream os;
      os << "orbit: no return to the start section after " << orbit.steps << " steps (integrated up to t = " << t
         << ", budget t <= " << tol.maxTime << ", " << tol.maxSteps << " steps)";
      throw NumericalError(os.str());
    }
    const State xPrev = x;
    const double tPrev = t;
    const double secPrev = along(xPrev);
    int rejects = 0;
    while (controlled.try_step(flow, x, t, dt) == odeint::fail) {
      if (++rejects > 200 || !(dt > 0.0)) throw NumericalError("orbit: step size control failed");
    }
    ++orbit.steps;
    const cplx z(x[0], x[1]);
    if (!(std::abs(z) <= tol.zmax)) {
      std::ostringstream os;
      os << "orbit: trajectory left the chart (|z| > " << tol.zmax << ") at t = " << t;
      throw NumericalError(os.str());
    }
    maxDist = std::max(maxDist, std::abs(z - start));
    const double sec = along(x);
    if (secPrev < 0.0 && sec >= 0.0 && across(x) <= 0.25 * maxDist) {
      // Refine the crossing time inside [tPrev, t] with single steps from xPrev (Illinois).
      const double h = t - tPrev;
      auto section_at = [&](double tau, State& out) {
        single.do_step(flow, xPrev, tPrev, out, tau);
        return along(out);
      };
      State xb;
      double a = 0.0, fa = secPrev;
      double b = h, fb = section_at(h, xb);
      const double timeTol = tol.sectionTol * t;
      for (int it = 0; it < 100 && fb != 0.0 && std::abs(b - a) > timeTol; ++it) {
        const double c = (fa * b - fb * a) / (fa - fb);
        State xc;
        const double fc = section_at(c, xc);
        if ((fc > 0.0) != (fb > 0.0)) {
          a = b;
          fa = fb;
        } else {
          fa *= 0.5;
        }
        b = c;
        fb = fc;
        xb = xc;
      }
      x = xb;
      t = tPrev + b;
      record(t, x);
      break;
    }
    record(t, x);
  }

  orbit.period = t;
  orbit.action = x[2];
  orbit.skIntegral = x[3];
  orbit.closureResidual = std::abs(cplx(x[0], x[1]) - start);
  return orbit;
}

cplx contour_start(const ClassicalSystem& sys, int branchId, double energy) {
  const Branch& b = sys.branch(branchId);
  const SymbolEvaluator& ev = sys.evaluator(b.chart);
  const double hbarJ = sys.hbar_j();
  const double radius = 2.0 * std::sqrt(hbarJ);
  const PhasePoint a = chart_qp(b.anchorCoord, hbarJ);
  const double ra = std::hypot(a.q, a.p);
  double dq = 1.0, dp = 0.0;
  if (ra > 1e-9 * radius) {
    dq = -a.q / ra;
    dp = -a.p / ra;
  }
  const double ad = a.q * dq + a.p * dp;
  const double sMax = (-ad + std::sqrt(ad * ad - (ra * ra - radius * radius))) * (1.0 - 1e-12);
  auto point = [&](double s) { return chart_z({a.q + s * dq, a.p + s * dp}, hbarJ); };
  auto f = [&](double s) { return b.sigma * (ev.energy(point(s)) - energy); };

  const double h = radius / 256.0;
  double lo = 0.0, hi = -1.0;
  for (double s = h;; s += h) {
    const double sc = std::min(s, sMax);
    if (f(sc) >= 0.0) {
      hi = sc;
      break;
    }
    lo = sc;
    if (sc >= sMax) break;
  }
  if (hi < 0.0) {
    std::ostringstream os;
    os << "orbit: energy " << energy << " is not met on the search ray of branch " << branchId;
    throw UnreachableEnergy(os.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) >= 0.0 ? hi : lo) = mid;
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? point(lo) : point(hi);
}

namespace {

void check_reachable(const ClassicalSystem& sys, const Branch& b, double energy) {
  std::ostringstream os;
  if (!std::isfinite(energy) || energy < sys.energy_min() || energy > sys.energy_max()) {
    os << "orbit: energy " << energy << " outside the classical range [" << sys.energy_min() << ", "
       << sys.energy_max() << "]";
    throw UnreachableEnergy(os.str());
  }
  const double d = b.sigma * (energy - b.eBottom);
  if (d <= 1e-12 * sys.span()) {
    os << "orbit: energy " << energy << " is at or beyond the critical energy " << b.eBottom << " of branch " << b.id;
    throw UnreachableEnergy(os.str());
  }
  if (sys.near_saddle(energy)) {
    os << "orbit: energy " << energy << " lies within the separatrix guard band (+-" << sys.guard_band() << ")";
    throw UnreachableEnergy(os.str());
  }
  const bool closedTop = b.endKind == BranchEnd::Extremum && b.maxDepth - d <= 1e-12 * sys.span();
  if (d > b.maxDepth || closedTop) {
    os << "orbit: energy " << energy << " is beyond the range of branch " << b.id << " (ends at " << b.eEnd << ")";
    throw UnreachableEnergy(os.str());
  }
}

}  // namespace

PeriodicOrbit orbit_at_energy(const ClassicalSystem& sys, int branchId, double energy, const OrbitTolerances& tol) {
  const Branch& b = sys.branch(branchId);
  check_reachable(sys, b, energy);
  const cplx start = contour_start(sys, branchId, energy);
  PeriodicOrbit orbit = integrate_periodic_orbit(sys, b.chart, start, tol);
  orbit.branch = branchId;
  if (std::abs(orbit.energy - energy) > 1e-10 * sys.span()) {
    std::ostringstream os;
    os << "orbit: contour search missed energy " << energy << " (found " << orbit.energy << ")";
    throw NumericalError(os.str());
  }
  return orbit;
}

OrbitFunctionals orbit_functionals(const ClassicalSystem& sys, int branchId, double energy, std::optional<double> dE,
                                   const OrbitTolerances& tol) {
  const Branch& b = sys.branch(branchId);
  OrbitTolerances quiet = tol;
  quiet.keepSamples = false;
  double step = dE.value_or(1e-4 * sys.span());
  if (!(step > 0.0)) throw ConfigError("orbit_functionals: dE must be positive");

  OrbitFunctionals out;
  out.energy = energy;
  const double d = b.sigma * (energy - b.eBottom);

  // Below the bottom of the well: the harmonic limit.
  if (d <= 1e-12 * sys.span()) {
    const PeriodicOrbit o1 = orbit_at_energy(sys, branchId, b.eBottom + b.sigma * step, quiet);
    const PeriodicOrbit o2 = orbit_at_energy(sys, branchId, b.eBottom + 2.0 * b.sigma * step, quiet);
    out.period = b.bottomPeriod;
    out.dSkdE = b.sigma * (-3.0 * b.bottomSk + 4.0 * o1.skIntegral - o2.skIntegral) / (2.0 * step);
    out.d2SdE2 = (0.0 - 2.0 * o1.action + o2.action) / (step * step);
    out.stencil = step;
    out.oneSided = true;
    return out;
  }

  // Closed top of a single-family sphere: the limit at the opposite extremum.
  if (b.endKind == BranchEnd::Extremum && d >= b.maxDepth - 1e-12 * sys.span()) {
    const double eTop = b.eBottom + b.sigma * b.maxDepth;
    const PeriodicOrbit o1 = orbit_at_energy(sys, branchId, eTop - b.sigma * step, quiet);
    const PeriodicOrbit o2 = orbit_at_energy(sys, branchId, eTop - 2.0 * b.sigma * step, quiet);
    out.period = b.topPeriod;
    out.dSkdE = -b.sigma * (-3.0 * b.topSk + 4.0 * o1.skIntegral - o2.skIntegral) / (2.0 * step);
    out.d2SdE2 = std::numeric_limits<double>::quiet_NaN();
    out.stencil = step;
    out.oneSided = true;
    return out;
  }

  const PeriodicOrbit mid = orbit_at_energy(sys, branchId, energy, quiet);
  out.period = mid.period;
  auto inside = [&](double e) {
    const double de = b.sigma * (e - b.eBottom);
    return de > 1e-12 * sys.span() && de <= b.maxDepth && !sys.near_saddle(e);
  };

  for (int attempt = 0; attempt < 30; ++attempt, step *= 0.5) {
    if (!inside(energy - step) || !inside(energy + step)) continue;
    const PeriodicOrbit lo = orbit_at_energy(sys, branchId, energy - step, quiet);
    const PeriodicOrbit hi = orbit_at_energy(sys, branchId, energy + step, quiet);
    const double expected = 2.0 * step * mid.period;
    if (std::abs((hi.action - lo.action) - expected) > 0.05 * expected) continue;  // branch change
    out.dSkdE = (hi.skIntegral - lo.skIntegral) / (2.0 * step);
    out.d2SdE2 = (hi.action - 2.0 * mid.action + lo.action) / (step * step);
    out.stencil = step;
    return out;
  }

  // One-sided stencil pointing into the branch.
  step = dE.value_or(1e-4 * sys.span());
  for (int attempt = 0; attempt < 30; ++attempt, step *= 0.5) {
    const double dir = inside(energy + b.sigma * step) && inside(energy + 2.0 * b.sigma * step) ? b.sigma : -b.sigma;
    const double e1 = energy + dir * step, e2 = energy + 2.0 * dir * step;
    if (!inside(e1) || !inside(e2)) continue;
    const PeriodicOrbit o1 = orbit_at_energy(sys, branchId, e1, quiet);
    const PeriodicOrbit o2 = orbit_at_energy(sys, branchId, e2, quiet);
    out.dSkdE = dir * (-3.0 * mid.skIntegral + 4.0 * o1.skIntegral - o2.skIntegral) / (2.0 * step);
    out.d2SdE2 = (mid.action - 2.0 * o1.action + o2.action) / (step * step);
    out.stencil = step;
    out.oneSided = true;
    return out;
  }
  std::ostringstream os;
  os << "orbit_functionals: no stencil around E = " << energy << " stays on branch " << branchId;
  throw UnreachableEnergy(os.str());
}

}  // namespace spinsc
