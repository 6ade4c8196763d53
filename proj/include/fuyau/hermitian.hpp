#pragma once

// 2x2 Hermitian matrices and matrix-valued fields on the torus.
//
// A lower-index field A_{kbar j} (row kbar, column j) represents the real
// (1,1)-form i A_{kbar j} dz^j ^ dzbar^k. An upper-index tensor X^{p qbar} is
// stored with row p and column qbar, so the contraction X^{j kbar} A_{kbar j}
// is tr(X A). On the flat background both placements share one storage type.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "fuyau/grid.hpp"

namespace fuyau {

/// Hermitian 2x2 matrix [[a11, a12], [conj(a12), a22]].
struct Herm2 {
  double a11 = 0.0;
  double a22 = 0.0;
  cplx a12 = 0.0;

  cplx a21() const { return std::conj(a12); }
  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - std::norm(a12); }
  /// Cofactor matrix transpose; tr(adj(A) B) is the polarized determinant.
  Herm2 adjugate() const { return {a22, a11, -a12}; }
  double frobenius() const { return std::sqrt(a11 * a11 + a22 * a22 + 2.0 * std::norm(a12)); }

  /// Closed-form eigenvalues, ascending.
  std::pair<double, double> eigenvalues() const {
    const double half_tr = 0.5 * (a11 + a22);
    const double half_gap = std::hypot(0.5 * (a11 - a22), std::abs(a12));
    return {half_tr - half_gap, half_tr + half_gap};
  }

  static Herm2 identity() { return {1.0, 1.0, 0.0}; }

  friend Herm2 operator+(const Herm2& a, const Herm2& b) {
    return {a.a11 + b.a11, a.a22 + b.a22, a.a12 + b.a12};
  }
  friend Herm2 operator-(const Herm2& a, const Herm2& b) {
    return {a.a11 - b.a11, a.a22 - b.a22, a.a12 - b.a12};
  }
  friend Herm2 operator*(double s, const Herm2& a) { return {s * a.a11, s * a.a22, s * a.a12}; }
};

/// tr(X A) for Hermitian X, A; real.
inline double contract(const Herm2& x, const Herm2& a) {
  return x.a11 * a.a11 + x.a22 * a.a22 + 2.0 * (x.a12 * std::conj(a.a12)).real();
}

/// A ^ B divided by the background volume form.
inline double wedge_quotient(const Herm2& a, const Herm2& b) {
  return a.a11 * b.a22 + a.a22 * b.a11 - 2.0 * (a.a12 * std::conj(b.a12)).real();
}

using HermitianField = Field<Herm2>;

inline HermitianField constant_hermitian(const GridSpec& g, const Herm2& value) {
  return HermitianField(g, value);
}

/// f * A pointwise.
inline HermitianField scale(const RealField& f, const HermitianField& a) {
  return zip(f, a, [](double s, const Herm2& m) { return s * m; });
}

inline HermitianField adjugate(const HermitianField& a) {
  return map(a, [](const Herm2& m) { return m.adjugate(); });
}

inline RealField entry11(const HermitianField& a) {
  return map(a, [](const Herm2& m) { return m.a11; });
}
inline RealField entry22(const HermitianField& a) {
  return map(a, [](const Herm2& m) { return m.a22; });
}
inline ComplexField entry12(const HermitianField& a) {
  return map(a, [](const Herm2& m) { return m.a12; });
}

/// Smallest eigenvalue over all grid points.
inline double min_eigenvalue(const HermitianField& a) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& m : a) lo = std::min(lo, m.eigenvalues().first);
  return lo;
}

/// Global (min, max) of pointwise eigenvalues.
inline std::pair<double, double> eigenvalue_range(const HermitianField& a) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : a) {
    const auto [l, h] = m.eigenvalues();
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

/// sup over points of the Frobenius norm of A - B.
inline double sup_distance(const HermitianField& a, const HermitianField& b) {
  require_same_grid(a.grid, b.grid);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).frobenius());
  return d;
}

/// Tolerance on the real-symmetry defect of a spectrum passed to complex_hessian.
inline constexpr double kHermitianDefectTolerance = 1e-12;

/// H_{kbar j} = d_j d_kbar u from the spectrum of a real u. For real u the
/// diagonal is real and H_{1bar2} = conj(H_{2bar1}), so the Hessian is
/// Hermitian by construction; the input spectrum is checked for that symmetry.
inline HermitianField complex_hessian(const SpectralField& u_hat) {
  if (real_symmetry_defect(u_hat) > kHermitianDefectTolerance) {
    throw std::logic_error("complex Hessian needs the spectrum of a real field");
  }
  const GridSpec& g = u_hat.grid;
  const int n = g.n;
  auto entry_hat = [&](int k, int j) {
    return apply_multiplier(u_hat, [&](const auto& kv) {
      return dz_symbol(kv, j, n) * dzbar_symbol(kv, k, n);
    });
  };
  const auto [h11, h22] = from_spectral_pair(entry_hat(1, 1), entry_hat(2, 2));
  const ComplexField h12 = from_spectral(entry_hat(1, 2));

  HermitianField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Herm2{h11[i], h22[i], h12[i]};
  return out;
}

inline HermitianField complex_hessian(const RealField& u) {
  return complex_hessian(to_spectral(u));
}

/// Spectral resampling of each entry; see resample for scalar fields.
inline HermitianField resample(const HermitianField& h, const GridSpec& target) {
  auto entry = [&](auto&& get) {
    ComplexField f(h.grid);
    for (std::size_t i = 0; i < h.size(); ++i) f[i] = get(h[i]);
    return from_spectral(resample(to_spectral(f), target));
  };
  const ComplexField a11 = entry([](const Herm2& m) { return cplx(m.a11, 0.0); });
  const ComplexField a22 = entry([](const Herm2& m) { return cplx(m.a22, 0.0); });
  const ComplexField a12 = entry([](const Herm2& m) { return m.a12; });
  HermitianField out(target);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Herm2{a11[i].real(), a22[i].real(), a12[i]};
  return out;
}

}  // namespace fuyau
