#include "spinsc/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "spinsc/detail/coherent_kernel.hpp"
#include "spinsc/errors.hpp"

namespace spinsc {

Spin Spin::from_twice(int twiceJ) {
  if (twiceJ < 1) throw ConfigError("spin: 2j must be a positive integer, got " + std::to_string(twiceJ));
  return Spin(twiceJ);
}

Spin Spin::from_value(double j) {
  const double twice = 2.0 * j;
  const double rounded = std::round(twice);
  if (!std::isfinite(j) || std::abs(twice - rounded) > 1e-12 || rounded < 1.0) {
    std::ostringstream os;
    os << "spin: j must be a positive half-integer, got " << j;
    throw ConfigError(os.str());
  }
  return Spin(static_cast<int>(rounded));
}

std::string_view to_string(SpinOp op) {
  switch (op) {
    case SpinOp::Jx: return "Jx";
    case SpinOp::Jy: return "Jy";
    case SpinOp::Jz: return "Jz";
    case SpinOp::Jplus: return "J+";
    case SpinOp::Jminus: return "J-";
  }
  return "?";
}

std::optional<SpinOp> parse_spin_op(std::string_view name) {
  if (name == "Jx") return SpinOp::Jx;
  if (name == "Jy") return SpinOp::Jy;
  if (name == "Jz") return SpinOp::Jz;
  if (name == "J+" || name == "Jp" || name == "Jplus") return SpinOp::Jplus;
  if (name == "J-" || name == "Jm" || name == "Jminus") return SpinOp::Jminus;
  return std::nullopt;
}

ModelSpec ModelSpec::jz_model(Spin spin, double omega, std::optional<double> hbar) {
  ModelSpec s;
  s.spin = spin;
  s.hbar = hbar.value_or(default_hbar(spin));
  s.terms = {{omega, {SpinOp::Jz}}};
  return s;
}

ModelSpec ModelSpec::lmg(Spin spin, double omega, double hbarAlpha, std::optional<double> hbar) {
  ModelSpec s;
  s.spin = spin;
  s.hbar = hbar.value_or(default_hbar(spin));
  const double alpha = hbarAlpha / s.hbar;
  s.terms = {{omega, {SpinOp::Jz}}, {alpha, {SpinOp::Jx, SpinOp::Jx}}, {-alpha, {SpinOp::Jy, SpinOp::Jy}}};
  return s;
}

// ---------------------------------------------------------------------------
// BandedMatrix

BandedMatrix BandedMatrix::from_dense(const Eigen::MatrixXcd& dense) {
  BandedMatrix b;
  b.n_ = static_cast<int>(dense.rows());
  int band = 0;
  for (int i = 0; i < b.n_; ++i)
    for (int k = 0; k < b.n_; ++k)
      if (dense(i, k) != cplx(0.0)) band = std::max(band, std::abs(i - k));
  b.band_ = band;
  b.data_.assign(static_cast<std::size_t>(2 * band + 1) * b.n_, cplx(0.0));
  for (int off = -band; off <= band; ++off)
    for (int i = 0; i < b.n_; ++i) {
      const int col = i + off;
      if (col >= 0 && col < b.n_) b.data_[static_cast<std::size_t>(off + band) * b.n_ + i] = dense(i, col);
    }
  b.index_diagonals();
  return b;
}

void BandedMatrix::index_diagonals() {
  offsets_.clear();
  real_ = true;
  for (int off = -band_; off <= band_; ++off) {
    bool nonzero = false;
    for (int i = 0; i < n_; ++i) {
      const cplx a = data_[static_cast<std::size_t>(off + band_) * n_ + i];
      if (a != cplx(0.0)) nonzero = true;
      if (a.imag() != 0.0) real_ = false;
    }
    if (nonzero) offsets_.push_back(off);
  }
  realData_.clear();
  if (real_) {
    realData_.resize(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) realData_[i] = data_[i].real();
  }
}

void BandedMatrix::apply(const cplx* x, int lo, int hi, cplx* y, int& outLo, int& outHi) const {
  outLo = std::max(0, lo - band_);
  outHi = std::min(n_ - 1, hi + band_);
  for (int i = outLo; i <= outHi; ++i) y[i] = 0.0;
  for (int off : offsets_) {
    const int iLo = std::max(outLo, lo - off);
    const int iHi = std::min(outHi, hi - off);
    const std::size_t base = static_cast<std::size_t>(off + band_) * n_;
    if (real_) {
      const double* d = realData_.data() + base;
      for (int i = iLo; i <= iHi; ++i) y[i] += d[i] * x[i + off];
    } else {
      const cplx* d = data_.data() + base;
      for (int i = iLo; i <= iHi; ++i) y[i] += d[i] * x[i + off];
    }
  }
}

BandedMatrix BandedMatrix::reversed() const {
  BandedMatrix r;
  r.n_ = n_;
  r.band_ = band_;
  r.data_.assign(data_.size(), cplx(0.0));
  // B(i, i+off) = A(n-1-i, n-1-i-off)
  for (int off = -band_; off <= band_; ++off)
    for (int i = 0; i < n_; ++i) {
      const int src = n_ - 1 - i;
      const int srcCol = src - off;
      if (srcCol >= 0 && srcCol < n_)
        r.data_[static_cast<std::size_t>(off + band_) * n_ + i] = data_[static_cast<std::size_t>(-off + band_) * n_ + src];
    }
  r.index_diagonals();
  return r;
}

// ---------------------------------------------------------------------------
// Operators

namespace {

using SparseC = Eigen::SparseMatrix<cplx>;

SparseC sparse_of(const Eigen::MatrixXcd& m) { return m.sparseView(); }

}  // namespace

SpinOperatorSet build_operators(const ModelSpec& spec) {
  if (!(spec.hbar > 0.0) || !std::isfinite(spec.hbar)) throw ConfigError("model: hbar must be positive and finite");
  if (spec.terms.empty()) throw ConfigError("model: the Hamiltonian term list is empty");

  SpinOperatorSet ops;
  ops.spin = spec.spin;
  ops.hbar = spec.hbar;
  const int n = spec.spin.dim();
  const int twiceJ = spec.spin.twice();
  const double hb = spec.hbar;

  ops.jz = Eigen::MatrixXcd::Zero(n, n);
  ops.jplus = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) ops.jz(k, k) = hb * (k - 0.5 * twiceJ);
  for (int k = 0; k + 1 < n; ++k) ops.jplus(k + 1, k) = hb * std::sqrt(static_cast<double>((k + 1) * (twiceJ - k)));
  ops.jminus = ops.jplus.adjoint();
  ops.jx = 0.5 * (ops.jplus + ops.jminus);
  ops.jy = (ops.jplus - ops.jminus) * cplx(0.0, -0.5);

  const SparseC sx = sparse_of(ops.jx), sy = sparse_of(ops.jy), sz = sparse_of(ops.jz), sp = sparse_of(ops.jplus),
                sm = sparse_of(ops.jminus);
  auto pick = [&](SpinOp op) -> const SparseC& {
    switch (op) {
      case SpinOp::Jx: return sx;
      case SpinOp::Jy: return sy;
      case SpinOp::Jz: return sz;
      case SpinOp::Jplus: return sp;
      case SpinOp::Jminus: return sm;
    }
    return sz;
  };

  SparseC h(n, n);
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const Term& term = spec.terms[t];
    if (!std::isfinite(term.coefficient))
      throw ConfigError("model: term " + std::to_string(t) + " has a non-finite coefficient");
    SparseC prod(n, n);
    prod.setIdentity();
    for (SpinOp op : term.monomial) prod = SparseC(prod * pick(op));
    h += term.coefficient * prod;
  }
  ops.h = Eigen::MatrixXcd(h);

  const double fro = ops.h.norm();
  const double asym = (ops.h - ops.h.adjoint()).norm();
  if (asym > 1e-12 * fro) {
    std::ostringstream os;
    os << "model: assembled Hamiltonian is not Hermitian (relative asymmetry " << asym / fro << ")";
    throw ConfigError(os.str());
  }
  ops.h = 0.5 * (ops.h + ops.h.adjoint()).eval();
  ops.hBanded = BandedMatrix::from_dense(ops.h);
  return ops;
}

// ---------------------------------------------------------------------------
// Eigendecomposition

ExactSpectrum eigendecompose(const SpinOperatorSet& ops) {
  const Eigen::MatrixXcd& h = ops.h;
  const int n = static_cast<int>(h.rows());

  // Blocks = connected components of the sparsity graph of H.
  std::vector<int> block(n, -1);
  std::vector<std::vector<int>> members;
  for (int s = 0; s < n; ++s) {
    if (block[s] >= 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    std::queue<int> todo;
    todo.push(s);
    block[s] = id;
    while (!todo.empty()) {
      const int i = todo.front();
      todo.pop();
      members[id].push_back(i);
      for (int k = 0; k < n; ++k)
        if (block[k] < 0 && h(i, k) != cplx(0.0)) {
          block[k] = id;
          todo.push(k);
        }
    }
    std::sort(members[id].begin(), members[id].end());
  }

  struct Entry {
    double e;
    int block;
    int local;
  };
  std::vector<Entry> entries;
  std::vector<Eigen::MatrixXcd> vectors(members.size());
  for (std::size_t b = 0; b < members.size(); ++b) {
    const auto& idx = members[b];
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXcd sub(m, m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) sub(a, c) = h(idx[a], idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sub);
    if (solver.info() != Eigen::Success) {
      throw NumericalError("eigendecompose: Hermitian QL iteration did not converge within its budget of " +
                           std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>::m_maxIterations) +
                           " sweeps per eigenvalue (block of size " + std::to_string(m) + ")");
    }
    vectors[b] = solver.eigenvectors();
    for (int a = 0; a < m; ++a) entries.push_back({solver.eigenvalues()(a), static_cast<int>(b), a});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.e < y.e; });

  ExactSpectrum out;
  out.states = Eigen::MatrixXcd::Zero(n, n);
  double norm = 0.0;
  for (const auto& en : entries) norm = std::max(norm, std::abs(en.e));
  out.norm = norm;
  out.levels.resize(n);
  for (int col = 0; col < n; ++col) {
    const Entry& en = entries[col];
    const auto& idx = members[en.block];
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (std::size_t a = 0; a < idx.size(); ++a) v(idx[a]) = vectors[en.block](static_cast<int>(a), en.local);
    // Fix the global phase: largest component real and positive.
    int big = 0;
    for (int k = 1; k < n; ++k)
      if (std::abs(v(k)) > std::abs(v(big))) big = k;
    v *= std::conj(v(big)) / std::abs(v(big));
    out.states.col(col) = v;
    QuantizedLevel& lv = out.levels[col];
    lv.index = col;
    lv.n = col;
    lv.energy = en.e;
    lv.method = LevelMethod::Exact;
    lv.branch = en.block;
    lv.residual = (ops.h * v - en.e * v).norm();
  }
  const double degTol = 1e-10 * norm;
  for (int col = 0; col + 1 < n; ++col)
    if (out.levels[col + 1].energy - out.levels[col].energy <= degTol) {
      if (!out.levels[col].has_flag(flags::kDegenerate)) out.levels[col].flags.push_back(flags::kDegenerate);
      out.levels[col + 1].flags.push_back(flags::kDegenerate);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Coherent states

double CoherentVector::norm2() const { return std::exp(logNorm2); }

cplx CoherentVector::component(int k) const { return unit(k) * std::exp(0.5 * logNorm2); }

CoherentVector coherent_vector(cplx z, Spin spin) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ConfigError("coherent_vector: z must be finite");
  const auto lb = detail::half_log_binomials(spin.twice());
  CoherentVector cv;
  cv.z = z;
  cv.unit = Eigen::VectorXcd::Zero(spin.dim());
  const auto w = detail::fill_coherent(lb, z, cv.unit.data());
  cv.logNorm2 = w.logNorm2;
  return cv;
}

}  // namespace spinsc
