#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "spinsc/classical.hpp"
#include "spinsc/errors.hpp"

using namespace spinsc;

namespace {

const ClassicalSystem& lmg200() {
  static const SpinOperatorSet ops = build_operators(ModelSpec::lmg(Spin::from_twice(400), 1.0, 1000.0));
  static const ClassicalSystem sys(ops);
  return sys;
}

}  // namespace

TEST_CASE("canonical chart is an area-preserving map onto the open disk") {
  oracle::Gen gen(1);
  const double hbarJ = 1.3;
  for (int t = 0; t < 50; ++t) {
    const cplx z = std::polar(std::exp(gen.uniform(-4, 4)), gen.uniform(-3.2, 3.2));
    const PhasePoint pt = chart_qp(z, hbarJ);
    const double r = std::norm(z);
    // Enclosed disk area pi (q^2 + p^2) equals the spherical cap area 4 pi hbar j r / (1 + r).
    CHECK(std::numbers::pi * (pt.q * pt.q + pt.p * pt.p) == doctest::Approx(oracle::jz_action(1.0, hbarJ, r)).epsilon(1e-12));
    CHECK(std::abs(chart_z(pt, hbarJ) - z) <= 1e-9 * (1 + std::abs(z)));
  }
  CHECK_THROWS_AS(chart_z({2.3, 0.0}, 1.3), ConfigError);
  CHECK_THROWS_AS(chart_z({0.0, std::sqrt(4 * 1.3)}, 1.3), ConfigError);

  const cplx z(0.4, -1.7);
  const SpherePoint a = sphere_point(Chart::South, z);
  const SpherePoint b = sphere_point(Chart::North, other_chart(z));
  CHECK(a.x == doctest::Approx(b.x));
  CHECK(a.y == doctest::Approx(b.y));
  CHECK(a.z == doctest::Approx(b.z));
  CHECK(a.x * a.x + a.y * a.y + a.z * a.z == doctest::Approx(1.0));
}

TEST_CASE("Jz orbits are circles with T = 2 pi / omega and closed-form action") {
  const double omega = 1.0;
  const auto ops = build_operators(ModelSpec::jz_model(Spin::from_twice(40), omega));
  const ClassicalSystem sys(ops);
  oracle::Gen gen(2);
  for (int t = 0; t < 8; ++t) {
    const cplx z0 = std::polar(std::exp(gen.uniform(-2.5, 0.0)), gen.uniform(-3.2, 3.2));
    const PeriodicOrbit o = integrate_periodic_orbit(sys, Chart::South, z0);
    CHECK(o.period == doctest::Approx(2 * std::numbers::pi / omega).epsilon(1e-10));
    CHECK(o.closureResidual <= 1e-9 * std::abs(z0));
    CHECK(o.maxEnergyDrift <= 1e-9);
    for (const auto& s : o.samples) CHECK(std::abs(s.z) == doctest::Approx(std::abs(z0)).epsilon(1e-9));
    const double r = std::norm(z0);
    CHECK(o.action == doctest::Approx(oracle::jz_action(ops.hbar, 20.0, r)).epsilon(1e-9));
    CHECK(o.skIntegral == doctest::Approx(std::numbers::pi * ops.hbar).epsilon(1e-9));
    // z(t) = exp(-i omega t) z0.
    const auto& mid = o.samples[o.samples.size() / 2];
    CHECK(std::abs(mid.z - std::exp(cplx(0, -omega * mid.t)) * z0) <= 1e-8 * std::abs(z0));
  }
}

TEST_CASE("a start on a fixed point is refused") {
  const auto ops = build_operators(ModelSpec::jz_model(Spin::from_twice(10), 1.0));
  const ClassicalSystem sys(ops);
  CHECK_THROWS_AS(integrate_periodic_orbit(sys, Chart::South, cplx(0.0)), FixedPointError);
}

TEST_CASE("LMG census: critical energies, kinds and Morse count") {
  const ClassicalSystem& sys = lmg200();
  const oracle::Lmg lmg{sys.hbar(), 1.0, 1000.0, 200.0};
  int minima = 0, maxima = 0, saddles = 0;
  for (const auto& c : sys.critical_points()) {
    switch (c.kind) {
      case CriticalKind::Minimum:
        ++minima;
        CHECK(c.energy == doctest::Approx(lmg.e_min()).scale(lmg.k()).epsilon(1e-10));
        break;
      case CriticalKind::Maximum:
        ++maxima;
        CHECK(c.energy == doctest::Approx(lmg.e_max()).scale(lmg.k()).epsilon(1e-10));
        break;
      case CriticalKind::Saddle:
        ++saddles;
        CHECK((std::abs(c.energy - lmg.e_saddle_low()) <= 1e-9 * lmg.k() ||
               std::abs(c.energy - lmg.e_saddle_high()) <= 1e-9 * lmg.k()));
        break;
      default:
        FAIL("degenerate critical point");
    }
  }
  CHECK(minima == 2);
  CHECK(maxima == 2);
  CHECK(saddles == 2);
  CHECK(minima - saddles + maxima == 2);
  CHECK(sys.energy_min() == doctest::Approx(lmg.e_min()).scale(lmg.k()).epsilon(1e-8));
  CHECK(sys.energy_max() == doctest::Approx(lmg.e_max()).scale(lmg.k()).epsilon(1e-8));
  REQUIRE(sys.branches().size() == 4u);
  int up = 0;
  for (const auto& b : sys.branches()) {
    up += b.sigma > 0;
    CHECK(b.endKind != BranchEnd::Extremum);
    CHECK(b.maxDepth > 0.9 * lmg.k());
  }
  CHECK(up == 2);
}

TEST_CASE("two disjoint contours below the saddle: each branch gets its own orbit") {
  const ClassicalSystem& sys = lmg200();
  const double e = 0.5 * sys.energy_min();
  const auto ids = sys.branches_at(e);
  REQUIRE(ids.size() == 2u);
  OrbitTolerances tol;
  const PeriodicOrbit a = orbit_at_energy(sys, ids[0], e, tol);
  const PeriodicOrbit b = orbit_at_energy(sys, ids[1], e, tol);
  CHECK(a.branch == ids[0]);
  CHECK(b.branch == ids[1]);
  CHECK(a.energy == doctest::Approx(e).epsilon(1e-10));
  CHECK(a.period == doctest::Approx(b.period).epsilon(1e-8));
  // Mirror images: the contours do not intersect.
  const SpherePoint pa = sphere_point(a.chart, a.samples[0].z);
  const SpherePoint pb = sphere_point(b.chart, b.samples[0].z);
  CHECK(pa.y * pb.y < 0.0);
}

TEST_CASE("LMG orbits conserve energy and dS/dE = T") {
  const ClassicalSystem& sys = lmg200();
  OrbitTolerances tol;
  tol.keepSamples = false;
  for (const auto& br : sys.branches()) {
    const double e = br.eBottom + br.sigma * 0.5 * br.maxDepth;
    const PeriodicOrbit o = orbit_at_energy(sys, br.id, e, tol);
    CHECK(o.maxEnergyDrift <= 1e-9 * sys.span());
    const double h = 1e-4 * sys.span();
    const PeriodicOrbit lo = orbit_at_energy(sys, br.id, e - h, tol);
    const PeriodicOrbit hi = orbit_at_energy(sys, br.id, e + h, tol);
    CHECK((hi.action - lo.action) / (2 * h) == doctest::Approx(o.period).epsilon(1e-4));
  }
}

TEST_CASE("near the bottom of an LMG well d2S/dE2 is finite and Richardson-consistent") {
  const ClassicalSystem& sys = lmg200();
  const Branch& br = sys.branch(0);
  const double e = br.eBottom + br.sigma * 0.05 * br.maxDepth;
  const double dE = 1e-3 * sys.span();
  const OrbitFunctionals f1 = orbit_functionals(sys, br.id, e, dE);
  const OrbitFunctionals f2 = orbit_functionals(sys, br.id, e, dE / 2);
  CHECK(std::isfinite(f1.d2SdE2));
  CHECK(f2.d2SdE2 == doctest::Approx(f1.d2SdE2).epsilon(1e-2));
  OrbitTolerances tol;
  tol.keepSamples = false;
  const double tHi = orbit_at_energy(sys, br.id, e + dE, tol).period;
  const double tLo = orbit_at_energy(sys, br.id, e - dE, tol).period;
  CHECK(f2.d2SdE2 == doctest::Approx((tHi - tLo) / (2 * dE)).epsilon(1e-2));
  // Bottom limit: harmonic period.
  const OrbitFunctionals fb = orbit_functionals(sys, br.id, br.eBottom);
  CHECK(fb.oneSided);
  CHECK(fb.period == doctest::Approx(br.bottomPeriod));
}

TEST_CASE("unreachable energies are refused with a diagnostic") {
  const ClassicalSystem& sys = lmg200();
  const Branch& br = sys.branch(0);
  CHECK_THROWS_AS(orbit_at_energy(sys, br.id, sys.energy_max() + 1.0), UnreachableEnergy);
  CHECK_THROWS_AS(orbit_at_energy(sys, br.id, br.eEnd), UnreachableEnergy);
  CHECK(sys.near_saddle(br.eEnd + 0.5 * sys.guard_band()));
}

TEST_CASE("Jz single family: top limit of the closed sphere") {
  const auto ops = build_operators(ModelSpec::jz_model(Spin::from_twice(10), 1.0));
  const ClassicalSystem sys(ops);
  REQUIRE(sys.branches().size() == 1u);
  const Branch& br = sys.branches()[0];
  CHECK(br.endKind == BranchEnd::Extremum);
  CHECK(br.bottomPeriod == doctest::Approx(2 * std::numbers::pi));
  CHECK(br.topPeriod == doctest::Approx(2 * std::numbers::pi));
  const OrbitFunctionals top = orbit_functionals(sys, br.id, sys.energy_max());
  CHECK(top.period == doctest::Approx(2 * std::numbers::pi));
  CHECK(std::abs(top.dSkdE) <= 1e-8);
  const OrbitFunctionals mid = orbit_functionals(sys, br.id, 0.3);
  CHECK(mid.period == doctest::Approx(2 * std::numbers::pi).epsilon(1e-10));
  CHECK(std::abs(mid.dSkdE) <= 1e-7);
}
