#pragma once

// Real (1,1)- and (2,2)-forms on the flat torus: wedge quotients, the
// background determinant, i ddbar on scalars and on (1,1)-forms, and the
// expansion of -i ddbar(e^{-w} rho) into the terms (psi, b, rho_tilde).

#include <array>

#include "fuyau/hermitian.hpp"

namespace fuyau {

/// (A ^ B) / (omega_hat^2 / 2!)
inline RealField wedge_quotient(const HermitianField& a, const HermitianField& b) {
  return zip(a, b, [](const Herm2& x, const Herm2& y) { return wedge_quotient(x, y); });
}

/// Determinant relative to the background metric.
inline RealField sigma2_hat(const HermitianField& a) {
  return map(a, [](const Herm2& m) { return m.det(); });
}

/// Coefficient matrix u_{kbar j} of i ddbar u.
inline HermitianField i_ddbar_scalar(const RealField& u) { return complex_hessian(u); }

namespace detail {

/// Spectra of the three independent entries of a Hermitian field.
struct HermitianSpectra {
  SpectralField s11, s22, s12;
};

inline HermitianSpectra spectra(const HermitianField& s) {
  auto [s11, s22] = to_spectral_pair(entry11(s), entry22(s));
  return {std::move(s11), std::move(s22), to_spectral(entry12(s))};
}

}  // namespace detail

/// Density of i ddbar S against omega_hat^2/2 for S = i S_{kbar j} dz^j ^ dzbar^k:
///   d1 d1bar S_{2bar2} + d2 d2bar S_{1bar1} - d1 d2bar S_{1bar2} - d2 d1bar S_{2bar1}.
/// Assembled in spectral space, so the zero mode of the output vanishes.
inline RealField i_ddbar_form(const HermitianField& s) {
  const auto sp = detail::spectra(s);
  const GridSpec& g = s.grid;
  const int n = g.n;
  SpectralField out(g);
  for (std::size_t i = 0; i < out.coefficients.size(); ++i) {
    const auto m = g.unflat(i);
    const std::array<int, 4> k{g.wavenumber(m[0]), g.wavenumber(m[1]), g.wavenumber(m[2]),
                               g.wavenumber(m[3])};
    // S_{2bar1}(x) = conj(S_{1bar2}(x)), so its coefficient at k is conj(c12(-k)).
    const cplx c21 = std::conj(sp.s12.at(-k[0], -k[1], -k[2], -k[3]));
    const cplx d1 = dz_symbol(k, 1, n), d2 = dz_symbol(k, 2, n);
    const cplx e1 = dzbar_symbol(k, 1, n), e2 = dzbar_symbol(k, 2, n);
    out.coefficients[i] = d1 * e1 * sp.s22.coefficients[i] + d2 * e2 * sp.s11.coefficients[i] -
                          d1 * e2 * sp.s12.coefficients[i] - d2 * e1 * c21;
  }
  return from_spectral_real(out);
}

/// Pieces of -i ddbar(e^{-w} rho) / (omega_hat^2/2)
///   = e^{-w} ( -psi + Re{b^i w_i} + rho_tilde^{j kbar} w_{kbar j}
///              - rho_tilde^{p qbar} w_p conj(w_q) ).
/// rho_tilde is the adjugate of rho (upper indices, see hermitian.hpp).
struct RhoDecomposition {
  RealField psi_rho;
  std::array<ComplexField, 2> b_rho;
  HermitianField rho_tilde;
};

inline RhoDecomposition decompose_rho(const HermitianField& rho) {
  const auto sp = detail::spectra(rho);
  const GridSpec& g = rho.grid;
  // d_kbar of rho_{2bar1} is conj(d_k rho_{1bar2}).
  auto dbar = [](const SpectralField& c, int j) { return from_spectral(deriv_zbar(c, j)); };
  const ComplexField d1bar_r22 = dbar(sp.s22, 1);
  const ComplexField d2bar_r11 = dbar(sp.s11, 2);
  const ComplexField d2bar_r12 = dbar(sp.s12, 2);
  const ComplexField d1bar_r21 = conj(from_spectral(deriv_z(sp.s12, 1)));

  RhoDecomposition out;
  out.psi_rho = i_ddbar_form(rho);
  out.b_rho[0] = ComplexField(g);
  out.b_rho[1] = ComplexField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.b_rho[0][i] = 2.0 * (d1bar_r22[i] - d2bar_r12[i]);
    out.b_rho[1][i] = 2.0 * (d2bar_r11[i] - d1bar_r21[i]);
  }
  out.rho_tilde = adjugate(rho);
  return out;
}

/// Right-hand side of the reconstruction identity for a given w, i.e. the
/// value that -i_ddbar_form(e^{-w} rho) must equal.
inline RealField reconstruct_minus_ddbar(const RhoDecomposition& d, const RealField& w) {
  const auto w_hat = to_spectral(w);
  const ComplexField w1 = from_spectral(deriv_z(w_hat, 1));
  const ComplexField w2 = from_spectral(deriv_z(w_hat, 2));
  const HermitianField hw = complex_hessian(w_hat);
  RealField out(w.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cplx b_dot = d.b_rho[0][i] * w1[i] + d.b_rho[1][i] * w2[i];
    // gradient pairing: P_{kbar j} = w_j conj(w_k)
    const Herm2 grad{std::norm(w1[i]), std::norm(w2[i]), w2[i] * std::conj(w1[i])};
    out[i] = std::exp(-w[i]) * (-d.psi_rho[i] + b_dot.real() + contract(d.rho_tilde[i], hw[i]) -
                                contract(d.rho_tilde[i], grad));
  }
  return out;
}

/// mu_tilde = 2 mu / omega_hat^2, normalized to integrate to zero.
struct MuData {
  RealField mu_tilde;
};

inline MuData normalize_mu(const RealField& raw) {
  require_finite(raw, "mu");
  const double m = mean(raw);
  return MuData{map(raw, [m](double v) { return v - m; })};
}

}  // namespace fuyau
