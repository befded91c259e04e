#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "spinsc/classical.hpp"
#include "spinsc/errors.hpp"

namespace spinsc {

const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::Minimum: return "minimum";
    case CriticalKind::Maximum: return "maximum";
    case CriticalKind::Saddle: return "saddle";
    case CriticalKind::Degenerate: return "degenerate";
  }
  return "?";
}

namespace {

struct Newton {
  cplx z;
  bool converged = false;
};

// Newton on dH/dzbar = 0 treating z and zbar as independent:
// a dz + b dzbar = -F with a = H_{z zbar}, b = H_{zbar zbar} = conj(H_zz).
Newton newton_critical(const SymbolEvaluator& ev, cplx z, double span) {
  Newton out{z, false};
  for (int it = 0; it < 60; ++it) {
    const SymbolValue s = ev.evaluate(z);
    const SymbolHessian hs = ev.hessian(z);
    const cplx F = s.dHdzbar;
    const double r1 = 1.0 + std::norm(z);
    if (std::abs(F) * r1 <= 1e-13 * span) {
      out.z = z;
      out.converged = true;
      return out;
    }
    const double a = hs.d2Hdzdzbar;
    const cplx b = std::conj(hs.d2Hdz2);
    const double det = a * a - std::norm(b);
    if (det == 0.0 || !std::isfinite(det)) return out;
    cplx dz = (-F * a + b * std::conj(F)) / det;
    const double cap = 0.25 * (1.0 + std::abs(z));
    if (std::abs(dz) > cap) dz *= cap / std::abs(dz);
    z += dz;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1e3) return out;
    if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) {
      const SymbolValue s2 = ev.evaluate(z);
      out.z = z;
      out.converged = std::abs(s2.dHdzbar) * (1.0 + std::norm(z)) <= 1e-8 * span;
      return out;
    }
  }
  const SymbolValue s = ev.evaluate(z);
  out.z = z;
  out.converged = std::abs(s.dHdzbar) * (1.0 + std::norm(z)) <= 1e-8 * span;
  return out;
}

double distance(const SpherePoint& a, const SpherePoint& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
};

}  // namespace

ClassicalSystem::ClassicalSystem(const SpinOperatorSet& ops, const CensusOptions& options)
    : south_(ops), north_(south_.flipped()) {
  if (options.gradientGrid < 8 || options.sweepGrid < 16) throw ConfigError("census: grids too coarse");
  find_critical_points(options);
  build_branches(options);
}

const Branch& ClassicalSystem::branch(int id) const {
  if (id < 0 || id >= static_cast<int>(branches_.size()))
    throw ConfigError("branch id " + std::to_string(id) + " out of range");
  return branches_[id];
}

bool ClassicalSystem::near_saddle(double energy) const {
  for (const auto& c : critical_)
    if (c.kind == CriticalKind::Saddle && std::abs(energy - c.energy) < guard_band() * (1.0 - 1e-9)) return true;
  return false;
}

std::vector<int> ClassicalSystem::branches_at(double energy) const {
  std::vector<int> out;
  for (const auto& b : branches_) {
    const double d = b.sigma * (energy - b.eBottom);
    if (d > 0.0 && d <= b.maxDepth && !near_saddle(energy)) out.push_back(b.id);
  }
  return out;
}

double ClassicalSystem::area_fraction(double lo, double hi) const {
  if (sweepValues_.empty()) return 0.0;
  std::size_t count = 0;
  for (double v : sweepValues_)
    if (v >= lo && v < hi) ++count;
  return static_cast<double>(count) / static_cast<double>(sweepValues_.size());
}

void ClassicalSystem::find_critical_points(const CensusOptions& options) {
  const double hbarJ = hbar_j();
  const double radius = 2.0 * std::sqrt(hbarJ);

  // Symbol range from a coarse disk scan; refined below by the critical values.
  {
    const int m = options.sweepGrid;
    const double h = 2.0 * radius / m;
    sweepValues_.clear();
    sweepValues_.reserve(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        const PhasePoint pt{-radius + (k + 0.5) * h, -radius + (i + 0.5) * h};
        if (pt.q * pt.q + pt.p * pt.p >= radius * radius) continue;
        sweepValues_.push_back(south_.energy(chart_z(pt, hbarJ)));
      }
    const auto [mn, mx] = std::minmax_element(sweepValues_.begin(), sweepValues_.end());
    emin_ = std::min(*mn, north_.energy(0.0));
    emax_ = std::max(*mx, north_.energy(0.0));
  }
  const double scale = std::max(emax_ - emin_, 1e-300);

  struct Candidate {
    Chart chart;
    cplx coord;
  };
  std::vector<Candidate> found;
  const int g = options.gradientGrid;
  const double extent = 0.8 * radius;  // |z| up to ~1.33 in each chart
  const double h = 2.0 * extent / g;
  for (Chart chart : {Chart::South, Chart::North}) {
    const SymbolEvaluator& ev = evaluator(chart);
    std::vector<double> grad(static_cast<std::size_t>(g) * g, std::numeric_limits<double>::infinity());
    std::vector<cplx> zs(grad.size());
    for (int i = 0; i < g; ++i)
      for (int k = 0; k < g; ++k) {
        const PhasePoint pt{-extent + (k + 0.5) * h, -extent + (i + 0.5) * h};
        if (std::hypot(pt.q, pt.p) > extent) continue;
        const cplx z = chart_z(pt, hbarJ);
        const SymbolValue s = ev.evaluate(z);
        zs[i * g + k] = z;
        grad[i * g + k] = std::abs(s.dHdz) * (1.0 + std::norm(z));
      }
    for (int i = 0; i < g; ++i)
      for (int k = 0; k < g; ++k) {
        const double v = grad[i * g + k];
        if (!std::isfinite(v)) continue;
        bool localMin = true;
        for (int di = -1; di <= 1 && localMin; ++di)
          for (int dk = -1; dk <= 1; ++dk) {
            if (di == 0 && dk == 0) continue;
            const int ii = i + di, kk = k + dk;
            if (ii < 0 || kk < 0 || ii >= g || kk >= g) continue;
            const double u = grad[ii * g + kk];
            // Strict on one half of the neighbourhood, non-strict on the other, so plateaus yield one seed.
            if (u < v || (u == v && (di < 0 || (di == 0 && dk < 0)))) {
              localMin = false;
              break;
            }
          }
        if (!localMin) continue;
        const Newton nt = newton_critical(ev, zs[i * g + k], scale);
        if (!nt.converged) continue;
        found.push_back({chart, nt.z});
      }
  }

  // Canonical representation: the chart in which |coord| <= 1; poles snapped.
  critical_.clear();
  std::vector<SpherePoint> positions;
  for (const auto& c : found) {
    CriticalPoint cp;
    cp.chart = c.chart;
    cp.coord = c.coord;
    if (std::abs(cp.coord) > 1.0) {
      cp.chart = cp.chart == Chart::South ? Chart::North : Chart::South;
      cp.coord = other_chart(cp.coord);
    }
    if (std::abs(cp.coord) < 1e-9) {
      const Newton nt = newton_critical(evaluator(cp.chart), 0.0, scale);
      if (nt.converged && std::abs(nt.z) < 1e-9) cp.coord = 0.0;
    }
    cp.northPole = cp.chart == Chart::North && cp.coord == cplx(0.0);
    const SpherePoint sp = sphere_point(cp.chart, cp.coord);
    bool duplicate = false;
    for (const auto& q : positions)
      if (distance(sp, q) < 1e-6) duplicate = true;
    if (duplicate) continue;
    positions.push_back(sp);

    const SymbolEvaluator& ev = evaluator(cp.chart);
    const SymbolValue s = ev.evaluate(cp.coord);
    const SymbolHessian hs = ev.hessian(cp.coord);
    const double a = hs.d2Hdzdzbar;
    const double det = a * a - std::norm(hs.d2Hdz2);
    const double size = a * a + std::norm(hs.d2Hdz2);
    cp.energy = s.h;
    cp.skValue = s.a;
    if (std::abs(det) <= 1e-10 * size)
      cp.kind = CriticalKind::Degenerate;
    else if (det < 0.0)
      cp.kind = CriticalKind::Saddle;
    else
      cp.kind = a > 0.0 ? CriticalKind::Minimum : CriticalKind::Maximum;
    if (det > 0.0) {
      const double r1 = 1.0 + std::norm(cp.coord);
      cp.omega = 2.0 * std::sqrt(det) * r1 * r1 / (4.0 * hbarJ);
    }
    critical_.push_back(cp);
  }
  std::stable_sort(critical_.begin(), critical_.end(),
                   [](const CriticalPoint& x, const CriticalPoint& y) { return x.energy < y.energy; });

  int nmin = 0, nmax = 0, nsad = 0, ndeg = 0;
  for (const auto& c : critical_) {
    emin_ = std::min(emin_, c.energy);
    emax_ = std::max(emax_, c.energy);
    nmin += c.kind == CriticalKind::Minimum;
    nmax += c.kind == CriticalKind::Maximum;
    nsad += c.kind == CriticalKind::Saddle;
    ndeg += c.kind == CriticalKind::Degenerate;
  }
  if (ndeg > 0 || nmin - nsad + nmax != 2) {
    std::ostringstream os;
    os << "census: " << nmin << " minima, " << nsad << " saddles, " << nmax << " maxima, " << ndeg
       << " degenerate points (Morse count " << nmin - nsad + nmax << ", expected 2)";
    reports_.push_back(os.str());
  }
}

void ClassicalSystem::build_branches(const CensusOptions& options) {
  const double hbarJ = hbar_j();
  const double radius = 2.0 * std::sqrt(hbarJ);
  const int m = options.sweepGrid;
  const double h = 2.0 * radius / m;

  // Vertices: grid cells inside the disk, one vertex for the north pole, one per
  // critical point (the north-pole critical point reuses the pole vertex).
  std::vector<int> cellId(static_cast<std::size_t>(m) * m, -1);
  std::vector<double> value;
  std::vector<int> critOf;  // critical index or -1
  std::vector<std::vector<int>> adj;
  auto add_vertex = [&](double v, int crit) {
    value.push_back(v);
    critOf.push_back(crit);
    adj.emplace_back();
    return static_cast<int>(value.size()) - 1;
  };
  auto link = [&](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  {
    std::size_t next = 0;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) {
        const double q = -radius + (k + 0.5) * h, p = -radius + (i + 0.5) * h;
        if (q * q + p * p >= radius * radius) continue;
        cellId[i * m + k] = add_vertex(sweepValues_[next++], -1);
      }
  }
  int northPoleCrit = -1;
  for (std::size_t c = 0; c < critical_.size(); ++c)
    if (critical_[c].northPole) northPoleCrit = static_cast<int>(c);
  const int pole = add_vertex(north_.energy(0.0), northPoleCrit);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      const int v = cellId[i * m + k];
      if (v < 0) continue;
      bool rim = false;
      const int di[4] = {1, -1, 0, 0}, dk[4] = {0, 0, 1, -1};
      for (int e = 0; e < 4; ++e) {
        const int ii = i + di[e], kk = k + dk[e];
        const int u = (ii < 0 || kk < 0 || ii >= m || kk >= m) ? -1 : cellId[ii * m + kk];
        if (u < 0)
          rim = true;
        else if (u > v)
          link(v, u);
      }
      if (rim) link(v, pole);
    }
  for (std::size_t c = 0; c < critical_.size(); ++c) {
    if (static_cast<int>(c) == northPoleCrit) continue;
    const CriticalPoint& cp = critical_[c];
    const cplx z = cp.chart == Chart::South ? cp.coord : other_chart(cp.coord);
    const PhasePoint pt = chart_qp(z, hbarJ);
    const int v = add_vertex(cp.energy, static_cast<int>(c));
    const int kc = static_cast<int>(std::floor((pt.q + radius) / h)), ic = static_cast<int>(std::floor((pt.p + radius) / h));
    for (int i = ic - 2; i <= ic + 2; ++i)
      for (int k = kc - 2; k <= kc + 2; ++k) {
        if (i < 0 || k < 0 || i >= m || k >= m || cellId[i * m + k] < 0) continue;
        const double q = -radius + (k + 0.5) * h, p = -radius + (i + 0.5) * h;
        if (std::hypot(q - pt.q, p - pt.p) <= 1.5 * h) link(v, cellId[i * m + k]);
      }
    if (std::hypot(pt.q, pt.p) > radius - 1.5 * h) link(v, pole);
  }

  struct Family {
    int anchor;
    double sigma;
    double eEnd = 0.0;
    BranchEnd kind = BranchEnd::Extremum;
    int endCrit = -1;
    bool open = true;
  };
  std::vector<Family> families;

  const int nv = static_cast<int>(value.size());
  auto sweep = [&](double sigma) {
    const CriticalKind anchorKind = sigma > 0 ? CriticalKind::Minimum : CriticalKind::Maximum;
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double fa = sigma * value[a], fb = sigma * value[b];
      if (fa != fb) return fa < fb;
      return (critOf[a] >= 0) > (critOf[b] >= 0);
    });
    UnionFind uf(nv);
    std::vector<char> active(nv, 0);
    std::vector<int> familyOf(nv, -1);  // per root; -1 none, -2 dead
    for (int v : order) {
      std::vector<int> roots;
      for (int u : adj[v])
        if (active[u]) roots.push_back(uf.find(u));
      std::sort(roots.begin(), roots.end());
      roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
      const int crit = critOf[v];
      const CriticalKind kind = crit >= 0 ? critical_[crit].kind : CriticalKind::Degenerate;

      std::vector<int> open;
      bool dead = false;
      for (int r : roots) {
        if (familyOf[r] >= 0) open.push_back(familyOf[r]);
        if (familyOf[r] == -2) dead = true;
      }
      int result = -1;
      if (crit >= 0 && kind == anchorKind) {
        families.push_back({crit, sigma});
        open.push_back(static_cast<int>(families.size()) - 1);
      }
      if (crit >= 0 && kind == CriticalKind::Saddle && !open.empty()) {
        for (int f : open) {
          families[f].open = false;
          families[f].eEnd = critical_[crit].energy;
          families[f].kind = BranchEnd::Saddle;
          families[f].endCrit = crit;
        }
        result = -2;
      } else if (open.size() >= 2) {
        for (int f : open) {
          if (crit >= 0 && kind == anchorKind && f == open.back()) continue;
          families[f].open = false;
          families[f].eEnd = value[v];
          families[f].kind = BranchEnd::GridMerge;
        }
        result = -2;
      } else if (open.size() == 1) {
        result = open.front();
      } else {
        result = dead ? -2 : -1;
      }
      active[v] = 1;
      for (int r : roots) uf.parent[r] = v;
      familyOf[v] = result;
    }
    for (auto& f : families)
      if (f.open && f.sigma == sigma) {
        f.open = false;
        f.eEnd = sigma > 0 ? emax_ : emin_;
        f.kind = BranchEnd::Extremum;
        for (std::size_t c = 0; c < critical_.size(); ++c)
          if (critical_[c].energy == f.eEnd &&
              critical_[c].kind == (sigma > 0 ? CriticalKind::Maximum : CriticalKind::Minimum))
            f.endCrit = static_cast<int>(c);
      }
  };
  sweep(+1.0);
  sweep(-1.0);

  int nsad = 0;
  for (const auto& c : critical_) nsad += c.kind == CriticalKind::Saddle;

  // Grid merges are resolved to the nearest census saddle when one is close.
  for (auto& f : families) {
    if (f.kind != BranchEnd::GridMerge) continue;
    int best = -1;
    for (std::size_t c = 0; c < critical_.size(); ++c)
      if (critical_[c].kind == CriticalKind::Saddle &&
          (best < 0 || std::abs(critical_[c].energy - f.eEnd) < std::abs(critical_[best].energy - f.eEnd)))
        best = static_cast<int>(c);
    std::ostringstream os;
    os << "census: family of critical point " << f.anchor << " merged on the sweep grid at E = " << f.eEnd;
    if (best >= 0 && std::abs(critical_[best].energy - f.eEnd) <= 2e-2 * span()) {
      f.eEnd = critical_[best].energy;
      f.kind = BranchEnd::Saddle;
      f.endCrit = best;
      os << "; attached to saddle " << best;
    }
    reports_.push_back(os.str());
  }

  const double poleS = south_.energy(0.0), poleN = north_.energy(0.0);
  const double twoPi = 2.0 * std::numbers::pi;
  auto bottom_data = [&](int crit, double sigma, Chart& chart, cplx& coord, double& period, double& sk) {
    const CriticalPoint& cp = critical_[crit];
    // Use the chart whose excluded pole lies furthest uphill from the anchor.
    chart = sigma * (poleN - cp.energy) >= sigma * (poleS - cp.energy) ? Chart::South : Chart::North;
    coord = cp.chart == chart ? cp.coord : other_chart(cp.coord);
    period = twoPi / cp.omega;
    sk = evaluator(chart).evaluate(coord).a * period;
  };

  branches_.clear();
  for (const auto& f : families) {
    if (nsad == 0 && f.sigma < 0) continue;  // the single min-to-max family already covers the sphere
    Branch b;
    b.id = static_cast<int>(branches_.size());
    b.anchor = f.anchor;
    b.sigma = f.sigma;
    b.eBottom = critical_[f.anchor].energy;
    b.eEnd = f.eEnd;
    b.endKind = f.kind;
    b.endCritical = f.endCrit;
    bottom_data(f.anchor, f.sigma, b.chart, b.anchorCoord, b.bottomPeriod, b.bottomSk);
    b.bottomAction = b.sigma * b.bottomSk;
    const double dEnd = b.sigma * (b.eEnd - b.eBottom);
    b.maxDepth = b.endKind == BranchEnd::Extremum ? dEnd : dEnd - guard_band();
    const double poleEnergy = b.chart == Chart::South ? poleN : poleS;
    const bool poleIsEnd = b.endCritical >= 0 && critical_[b.endCritical].chart != b.chart &&
                           critical_[b.endCritical].coord == cplx(0.0);
    const double dPole = b.sigma * (poleEnergy - b.eBottom);
    if (!poleIsEnd && dPole - guard_band() < b.maxDepth) {
      b.maxDepth = dPole - guard_band();
      std::ostringstream os;
      os << "census: branch " << b.id << " truncated at the chart pole energy " << poleEnergy;
      reports_.push_back(os.str());
    }
    if (b.endKind == BranchEnd::Extremum && b.endCritical >= 0) {
      Chart topChart;
      cplx topCoord;
      double topSkOwn = 0.0;
      bottom_data(b.endCritical, -b.sigma, topChart, topCoord, b.topPeriod, topSkOwn);
      // Both sides of any contour together carry the whole sphere plus one quantum.
      const double sphere = 4.0 * std::numbers::pi * hbarJ;
      b.topAction = sphere + twoPi * hbar() - (-b.sigma) * topSkOwn;
      b.topSk = b.sigma * b.topAction - b.sigma * sphere;
    }
    if (b.maxDepth <= 0.0) {
      std::ostringstream os;
      os << "census: family of critical point " << f.anchor << " has no usable range";
      reports_.push_back(os.str());
      continue;
    }
    branches_.push_back(b);
  }
  // Ids follow the stored order.
  for (std::size_t i = 0; i < branches_.size(); ++i) branches_[i].id = static_cast<int>(i);
}

}  // namespace spinsc
