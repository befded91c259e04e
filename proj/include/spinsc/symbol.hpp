#pragma once

// Classical symbol H(z, zbar) = <z|H|z>/<z|z> and the quantities built on it,
// evaluated at real phase points (zbar = conj z). All derivatives come from
// inserting the dimensionless ladder operators into coherent-state matrix
// elements: d/dz |z> = K+ |z>, d/dzbar <z| = <z| K-, with K+- = J+-/hbar.

#include <complex>
#include <vector>

#include "spinsc/spin_algebra.hpp"

namespace spinsc {

struct SymbolValue {
  double h = 0.0;            // classical energy E(z)
  cplx dHdz;                 // dH/dz
  cplx dHdzbar;              // dH/dzbar (= conj(dHdz) at real points)
  double d2Hdzdzbar = 0.0;   // mixed second derivative
  double a = 0.0;            // Solari-Kochetov integrand A(z)
  double g = 0.0;            // metric factor 2j/(1+|z|^2)^2
};

struct SymbolHessian {
  cplx d2Hdz2;
  double d2Hdzdzbar = 0.0;
};

/// Holds the banded Hamiltonian and the log-binomial table for one spin; every
/// method is const and thread-safe (scratch space is thread_local).
class SymbolEvaluator {
 public:
  SymbolEvaluator() = default;
  explicit SymbolEvaluator(const SpinOperatorSet& ops);
  /// Same Hamiltonian seen from the opposite pole: basis order reversed, i.e.
  /// a rotation by pi about x. Its chart coordinate is w = 1/z.
  SymbolEvaluator flipped() const;

  Spin spin() const { return spin_; }
  double hbar() const { return hbar_; }
  double j() const { return spin_.value(); }

  double energy(cplx z) const;
  SymbolValue evaluate(cplx z) const;
  SymbolHessian hessian(cplx z) const;
  /// Hamilton's equation on a real point: i*hbar*zdot = (1/g) dH/dzbar.
  cplx velocity(const SymbolValue& s) const;

  static double metric(double j, cplx z);

 private:
  Spin spin_ = Spin::from_twice(1);
  double hbar_ = 1.0;
  BandedMatrix h_;
  std::vector<double> ratio_;   // coherent amplitude ratios, see detail::amplitude_ratios
  std::vector<double> ladder_;  // ladder_[k] = <k+1|K+|k> = sqrt((k+1)(2j-k))
};

/// Free-function form; builds an evaluator for a single call.
SymbolValue classical_symbol(const SpinOperatorSet& ops, cplx z);

}  // namespace spinsc
