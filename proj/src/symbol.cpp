#include "spinsc/symbol.hpp"

#include <algorithm>
#include <cmath>

#include "spinsc/detail/coherent_kernel.hpp"

namespace spinsc {

namespace {

// Amplitudes below 1e-11 of the peak enter expectation values squared, i.e.
// below 1e-22 relative, and are skipped.
constexpr double kAmplitudeFloor = 1e-11;

struct Scratch {
  std::vector<cplx> v, w, wt, hv, ht, ww;
  void resize(std::size_t n) {
    if (v.size() != n) {
      for (auto* x : {&v, &w, &wt, &hv, &ht, &ww}) x->assign(n, 0.0);
    }
  }
};

Scratch& scratch(std::size_t n) {
  thread_local Scratch s;
  s.resize(n);
  return s;
}

cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b, int lo, int hi) {
  cplx acc = 0.0;
  for (int k = lo; k <= hi; ++k) acc += std::conj(a[k]) * b[k];
  return acc;
}

// Centered quantities at a real point. With v the unit coherent vector,
// k = <K+>, wt = (K+ - k) v and Ht = H - h, every derivative is a plain matrix
// element of centered operators:
//   H_z = <v|Ht|wt>,  H_{z zbar} = <wt|Ht|wt>,  H_zz = <Ht v|(K+ - k) wt>.
struct Centered {
  int lo, hi;  // working range, all vectors valid (zero-padded) on it
  double h;
  cplx k;
};

Centered prepare(const std::vector<double>& ratio, const std::vector<double>& ladder, const BandedMatrix& hm,
                 cplx z, Scratch& s, bool needWt) {
  const int twiceJ = static_cast<int>(ladder.size());
  const auto win = detail::fill_coherent_recurrence(ratio, z, s.v.data(), kAmplitudeFloor);
  const int pad = 2 + 2 * hm.band();
  Centered c;
  c.lo = std::max(0, win.lo - pad);
  c.hi = std::min(twiceJ, win.hi + pad);
  for (int k = c.lo; k < win.lo; ++k) s.v[k] = 0.0;
  for (int k = win.hi + 1; k <= c.hi; ++k) s.v[k] = 0.0;

  int olo, ohi;
  hm.apply(s.v.data(), c.lo, c.hi, s.hv.data(), olo, ohi);
  c.h = dot(s.v, s.hv, win.lo, win.hi).real();
  if (!needWt) return c;

  s.w[c.lo] = 0.0;
  for (int k = c.lo + 1; k <= c.hi; ++k) s.w[k] = ladder[k - 1] * s.v[k - 1];
  c.k = dot(s.v, s.w, c.lo, c.hi);
  for (int k = c.lo; k <= c.hi; ++k) s.wt[k] = s.w[k] - c.k * s.v[k];
  hm.apply(s.wt.data(), c.lo, c.hi, s.ht.data(), olo, ohi);
  for (int k = c.lo; k <= c.hi; ++k) s.ht[k] -= c.h * s.wt[k];
  return c;
}

}  // namespace

SymbolEvaluator::SymbolEvaluator(const SpinOperatorSet& ops)
    : spin_(ops.spin),
      hbar_(ops.hbar),
      h_(ops.hBanded),
      ratio_(detail::amplitude_ratios(ops.spin.twice())) {
  const int twiceJ = spin_.twice();
  ladder_.resize(twiceJ);
  for (int k = 0; k < twiceJ; ++k) ladder_[k] = std::sqrt(static_cast<double>((k + 1) * (twiceJ - k)));
}

SymbolEvaluator SymbolEvaluator::flipped() const {
  SymbolEvaluator f = *this;
  f.h_ = h_.reversed();
  return f;
}

double SymbolEvaluator::metric(double j, cplx z) {
  const double r1 = 1.0 + std::norm(z);
  return 2.0 * j / (r1 * r1);
}

double SymbolEvaluator::energy(cplx z) const {
  auto& s = scratch(static_cast<std::size_t>(spin_.dim()));
  return prepare(ratio_, ladder_, h_, z, s, false).h;
}

SymbolValue SymbolEvaluator::evaluate(cplx z) const {
  auto& s = scratch(static_cast<std::size_t>(spin_.dim()));
  const Centered c = prepare(ratio_, ladder_, h_, z, s, true);

  SymbolValue out;
  out.h = c.h;
  out.dHdz = dot(s.v, s.ht, c.lo, c.hi);
  out.dHdzbar = std::conj(out.dHdz);
  out.d2Hdzdzbar = dot(s.wt, s.ht, c.lo, c.hi).real();

  const double j = spin_.value();
  const double r1 = 1.0 + std::norm(z);
  out.g = 2.0 * j / (r1 * r1);
  // A = d/dzbar[(1/4g) dH/dz] + d/dz[(1/4g) dH/dzbar], with 1/(4g) = (1+z zbar)^2/(8j).
  const double quarterInvG = r1 * r1 / (8.0 * j);
  out.a = 2.0 * quarterInvG * out.d2Hdzdzbar + r1 / (4.0 * j) * 2.0 * (z * out.dHdz).real();
  return out;
}

SymbolHessian SymbolEvaluator::hessian(cplx z) const {
  auto& s = scratch(static_cast<std::size_t>(spin_.dim()));
  const Centered c = prepare(ratio_, ladder_, h_, z, s, true);
  s.ww[c.lo] = 0.0;
  for (int k = c.lo + 1; k <= c.hi; ++k) s.ww[k] = ladder_[k - 1] * s.wt[k - 1];
  for (int k = c.lo; k <= c.hi; ++k) {
    s.ww[k] -= c.k * s.wt[k];
    s.hv[k] -= c.h * s.v[k];
  }
  SymbolHessian out;
  out.d2Hdz2 = dot(s.hv, s.ww, c.lo, c.hi);
  out.d2Hdzdzbar = dot(s.wt, s.ht, c.lo, c.hi).real();
  return out;
}

cplx SymbolEvaluator::velocity(const SymbolValue& s) const {
  return s.dHdzbar / (cplx(0.0, 1.0) * hbar_ * s.g);
}

SymbolValue classical_symbol(const SpinOperatorSet& ops, cplx z) { return SymbolEvaluator(ops).evaluate(z); }

}  // namespace spinsc
