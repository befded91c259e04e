#pragma once

// Exact quantum layer: spin-j operator matrices in the |j,m> basis, Hamiltonian
// assembly from operator monomials, block-wise eigendecomposition and the
// (non-normalized) spin coherent states |z> = exp(z J+/hbar)|j,-j>.

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spinsc/levels.hpp"

namespace spinsc {

using cplx = std::complex<double>;

/// Spin quantum number, stored as the integer 2j so half-integers are exact.
class Spin {
 public:
  static Spin from_twice(int twiceJ);
  /// Throws ConfigError unless 2j is a positive integer.
  static Spin from_value(double j);

  int twice() const { return twice_; }
  double value() const { return 0.5 * twice_; }
  int dim() const { return twice_ + 1; }

  friend bool operator==(Spin, Spin) = default;

 private:
  explicit Spin(int twiceJ) : twice_(twiceJ) {}
  int twice_ = 1;
};

enum class SpinOp { Jx, Jy, Jz, Jplus, Jminus };

std::string_view to_string(SpinOp op);
std::optional<SpinOp> parse_spin_op(std::string_view name);

/// coefficient * (product of operators, applied in the listed order left to right).
struct Term {
  double coefficient = 0.0;
  std::vector<SpinOp> monomial;

  friend bool operator==(const Term&, const Term&) = default;
};

/// Spin, hbar and the Hamiltonian as a sum of monomials in the physical
/// (hbar-carrying) operators. Single source of truth for quantum and classical layers.
struct ModelSpec {
  Spin spin = Spin::from_twice(1);
  double hbar = 2.0;  // hbar * j = 1 by default
  std::vector<Term> terms;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

  /// hbar defaults to 1/j.
  static double default_hbar(Spin spin) { return 1.0 / spin.value(); }

  /// H = hbar*omega*Jz in dimensionless-J notation, i.e. omega times the physical Jz.
  static ModelSpec jz_model(Spin spin, double omega, std::optional<double> hbar = {});

  /// Lipkin-Meshkov-Glick: hbar*omega*Jz + alpha*hbar^2*(Jx^2 - Jy^2) in
  /// dimensionless-J notation; `hbarAlpha` is the product hbar*alpha.
  static ModelSpec lmg(Spin spin, double omega, double hbarAlpha, std::optional<double> hbar = {});
};

/// Square complex matrix stored by diagonals; row i holds A(i, i+k) for |k| <= band.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  /// Keeps every diagonal that carries a non-zero entry.
  static BandedMatrix from_dense(const Eigen::MatrixXcd& dense);

  int size() const { return n_; }
  int band() const { return band_; }
  cplx at(int row, int offset) const { return data_[static_cast<std::size_t>(offset + band_) * n_ + row]; }

  /// y = A x where x is supported on [lo, hi]; y is written on the returned
  /// support [outLo, outHi] (clipped to the matrix) and left untouched elsewhere.
  void apply(const cplx* x, int lo, int hi, cplx* y, int& outLo, int& outHi) const;

  /// Reverses the basis order: B(i,k) = A(n-1-i, n-1-k).
  BandedMatrix reversed() const;

 private:
  void index_diagonals();

  int n_ = 0;
  int band_ = 0;
  std::vector<cplx> data_;
  std::vector<int> offsets_;      // diagonals with a non-zero entry
  bool real_ = false;             // every entry has zero imaginary part
  std::vector<double> realData_;  // copy of data_ when real_
};

struct SpinOperatorSet {
  Spin spin = Spin::from_twice(1);
  double hbar = 1.0;
  Eigen::MatrixXcd jx, jy, jz, jplus, jminus, h;
  BandedMatrix hBanded;

  int dim() const { return spin.dim(); }
};

/// Builds the spin matrices (basis index k = j + m, ascending m) and assembles H.
/// Throws ConfigError for an empty term list or a non-Hermitian result
/// (relative Frobenius asymmetry above 1e-12).
SpinOperatorSet build_operators(const ModelSpec& spec);

struct ExactSpectrum {
  std::vector<QuantizedLevel> levels;  // ascending energy, method Exact
  Eigen::MatrixXcd states;             // column n is the eigenvector of levels[n]
  double norm = 0.0;                   // spectral norm of H
};

/// Dense Hermitian solve, performed independently on each block of H that is
/// decoupled by exact zeros (e.g. the two m-parity sectors of the LMG model).
/// Levels closer than 1e-10*||H|| carry the "degenerate" flag.
ExactSpectrum eigendecompose(const SpinOperatorSet& ops);

/// Non-normalized coherent state. Components are stored normalized in `unit`
/// together with log<z|z>, so |z|^(2j) never has to be formed.
struct CoherentVector {
  cplx z;
  Eigen::VectorXcd unit;
  double logNorm2 = 0.0;

  double norm2() const;
  cplx component(int k) const;
};

CoherentVector coherent_vector(cplx z, Spin spin);

}  // namespace spinsc
