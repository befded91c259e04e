#pragma once

// Shared log-space construction of coherent-state components. Used by the
// public coherent_vector(), the symbol evaluator and the Husimi kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace spinsc::detail {

/// lb[k] = 0.5 * ln C(2j, k), k = 0..2j.
inline std::vector<double> half_log_binomials(int twiceJ) {
  std::vector<double> lb(static_cast<std::size_t>(twiceJ) + 1, 0.0);
  for (int k = 0; k < twiceJ; ++k)
    lb[k + 1] = lb[k] + 0.5 * (std::log(static_cast<double>(twiceJ - k)) - std::log(static_cast<double>(k + 1)));
  return lb;
}

struct CoherentWindow {
  int lo = 0;
  int hi = 0;
  double logNorm2 = 0.0;
};

/// Writes the unit-normalized components of exp(z K+)|j,-j> into out[lo..hi].
/// Components whose log-magnitude lies more than `cut` below the largest one
/// are dropped (cut = +inf keeps everything). Entries outside [lo, hi] are not touched.
inline CoherentWindow fill_coherent(const std::vector<double>& lb, std::complex<double> z, std::complex<double>* out,
                                    double cut = std::numeric_limits<double>::infinity()) {
  const int twiceJ = static_cast<int>(lb.size()) - 1;
  const double mag = std::abs(z);
  CoherentWindow w;
  if (mag == 0.0) {
    out[0] = 1.0;
    w.lo = w.hi = 0;
    w.logNorm2 = 0.0;
    return w;
  }
  const double lz = std::log(mag);
  // l_k = lb_k + k ln|z| is concave in k, so the kept set is one contiguous run
  // around the peak, which sits near k = 2j r/(1+r).
  auto level = [&](int k) { return lb[k] + k * lz; };
  const double r = mag * mag;
  int kmax = static_cast<int>(std::lround(twiceJ * (r / (1.0 + r))));
  kmax = std::clamp(kmax, 0, twiceJ);
  double lmax = level(kmax);
  while (kmax < twiceJ && level(kmax + 1) > lmax) lmax = level(++kmax);
  while (kmax > 0 && level(kmax - 1) > lmax) lmax = level(--kmax);
  int lo = kmax, hi = kmax;
  while (lo > 0 && lb[lo - 1] + (lo - 1) * lz - lmax >= -cut) --lo;
  while (hi < twiceJ && lb[hi + 1] + (hi + 1) * lz - lmax >= -cut) ++hi;

  const std::complex<double> u = z / mag;
  std::complex<double> phase = 1.0;
  // u^lo by repeated squaring keeps the phase error independent of lo.
  {
    std::complex<double> base = u;
    int e = lo;
    while (e > 0) {
      if (e & 1) phase *= base;
      base *= base;
      e >>= 1;
    }
  }
  double s = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const double a = std::exp(lb[k] + k * lz - lmax);
    out[k] = a * phase;
    s += a * a;
    phase *= u;
  }
  const double inv = 1.0 / std::sqrt(s);
  for (int k = lo; k <= hi; ++k) out[k] *= inv;
  w.lo = lo;
  w.hi = hi;
  w.logNorm2 = 2.0 * lmax + std::log(s);
  return w;
}

/// ratio[k] = sqrt((2j-k)/(k+1)), the amplitude ratio of neighbouring components
/// at |z| = 1; the second half of the table holds the reciprocals.
inline std::vector<double> amplitude_ratios(int twiceJ) {
  std::vector<double> r(2 * static_cast<std::size_t>(twiceJ));
  for (int k = 0; k < twiceJ; ++k) {
    r[k] = std::sqrt(static_cast<double>(twiceJ - k) / static_cast<double>(k + 1));
    r[twiceJ + k] = 1.0 / r[k];
  }
  return r;
}

/// Same components as fill_coherent (up to rounding), built by the two-term
/// recurrence outward from the peak; amplitudes below `floor` times the peak are dropped.
/// Returns the window only (logNorm2 is not tracked).
inline CoherentWindow fill_coherent_recurrence(const std::vector<double>& ratio, std::complex<double> z,
                                               std::complex<double>* out, double floor) {
  const int twiceJ = static_cast<int>(ratio.size()) / 2;
  const double* inverse = ratio.data() + twiceJ;
  const double mag = std::abs(z);
  CoherentWindow w;
  if (mag == 0.0) {
    out[0] = 1.0;
    return w;
  }
  const double invMag = 1.0 / mag;
  const double r = mag * mag;
  int kmax = std::clamp(static_cast<int>(std::lround(twiceJ * (r / (1.0 + r)))), 0, twiceJ);
  while (kmax < twiceJ && ratio[kmax] * mag > 1.0) ++kmax;
  while (kmax > 0 && ratio[kmax - 1] * mag < 1.0) --kmax;

  // Magnitudes first (stored in the real parts), then phases.
  int hi = kmax, lo = kmax;
  out[kmax] = 1.0;
  for (double a = 1.0; hi < twiceJ;) {
    a *= ratio[hi] * mag;
    if (a < floor) break;
    out[++hi] = a;
  }
  for (double a = 1.0; lo > 0;) {
    a *= inverse[lo - 1] * invMag;
    if (a < floor) break;
    out[--lo] = a;
  }
  const std::complex<double> u = z / mag;
  std::complex<double> phase = 1.0;
  {
    std::complex<double> base = u;
    for (int e = lo; e > 0; e >>= 1) {
      if (e & 1) phase *= base;
      base *= base;
    }
  }
  double s = 0.0;
  for (int k = lo; k <= hi; ++k) s += out[k].real() * out[k].real();
  const double inv = 1.0 / std::sqrt(s);
  for (int k = lo; k <= hi; ++k) {
    out[k] = (out[k].real() * inv) * phase;
    phase *= u;
  }
  w.lo = lo;
  w.hi = hi;
  return w;
}

}  // namespace spinsc::detail
