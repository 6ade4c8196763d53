#pragma once

// Geometry of the conformal metric g = e^u g_hat on the flat torus.
//
// Torsion T_j = -d_j u, Chern-Ricci R_{kbar j} = -2 u_{kbar j}, Chern
// connection Gamma^l_{ik} = u_i delta^l_k. Norms are taken with respect to
// the evolving metric: every index contracts with g^{-1} = e^{-u} g_hat.

#include <algorithm>
#include <array>
#include <utility>

#include "fuyau/forms.hpp"

namespace fuyau {

struct GeometryReport {
  double sup_e_u = 0.0;
  double inf_e_u = 0.0;
  double sup_T2 = 0.0;         ///< sup |T|^2_g
  double sup_alpha_ric = 0.0;  ///< sup |alpha' Ric|_g
  double lambda_min_F = 0.0;   ///< extremes of the eigenvalues of F_hat over X
  double lambda_max_F = 0.0;
  double omega_prime_min_eig = 0.0;
  double sup_grad_T = 0.0;
  double sup_grad_ric = 0.0;
};

inline std::array<ComplexField, 2> torsion_one_form(const SpectralField& u_hat) {
  auto t1 = from_spectral(deriv_z(u_hat, 1));
  auto t2 = from_spectral(deriv_z(u_hat, 2));
  for (auto& v : t1) v = -v;
  for (auto& v : t2) v = -v;
  return {std::move(t1), std::move(t2)};
}
inline std::array<ComplexField, 2> torsion_one_form(const RealField& u) {
  return torsion_one_form(to_spectral(u));
}

/// |T|^2 = g^{m lbar} T_m conj(T_l) = e^{-u} (|T_1|^2 + |T_2|^2)
inline RealField torsion_norm_sq(const RealField& u) {
  const auto t = torsion_one_form(u);
  RealField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(-u[i]) * (std::norm(t[0][i]) + std::norm(t[1][i]));
  }
  return out;
}

/// |i d omega|^2 from the full torsion tensor T_{kbar m j} = d_m g_{kbar j} - d_j g_{kbar m},
/// summed over all index triples with three inverse-metric contractions.
inline RealField torsion_tensor_norm_sq(const RealField& u) {
  const auto u_hat = to_spectral(u);
  const std::array<ComplexField, 2> du{from_spectral(deriv_z(u_hat, 1)),
                                       from_spectral(deriv_z(u_hat, 2))};
  RealField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    // d_m g_{kbar j} = e^u u_m delta_{kj}
    const double eu = std::exp(u[i]);
    const std::array<cplx, 2> d{eu * du[0][i], eu * du[1][i]};
    double s = 0.0;
    for (int k = 0; k < 2; ++k) {
      for (int m = 0; m < 2; ++m) {
        for (int j = 0; j < 2; ++j) {
          const cplx t = (k == j ? d[m] : 0.0) - (k == m ? d[j] : 0.0);
          s += std::norm(t);
        }
      }
    }
    out[i] = std::exp(-3.0 * u[i]) * s;
  }
  return out;
}

inline HermitianField ricci_form(const HermitianField& hessian) {
  return map(hessian, [](const Herm2& h) { return -2.0 * h; });
}
inline HermitianField ricci_form(const RealField& u) { return ricci_form(complex_hessian(u)); }

/// R = g^{j kbar} R_{kbar j} = -2 e^{-u} (u_{1bar1} + u_{2bar2})
inline RealField scalar_curvature(const RealField& u) {
  const auto h = complex_hessian(u);
  return zip(u, h, [](double uu, const Herm2& m) { return -2.0 * std::exp(-uu) * m.trace(); });
}

/// |alpha' Ric|_g = |alpha'| e^{-u} |2 u_{kbar j}|_Frobenius
inline RealField alpha_ric_norm(const RealField& u, const HermitianField& hessian,
                                double alpha_prime) {
  return zip(u, hessian, [alpha_prime](double uu, const Herm2& m) {
    return std::abs(alpha_prime) * std::exp(-uu) * 2.0 * m.frobenius();
  });
}
inline RealField alpha_ric_norm(const RealField& u, double alpha_prime) {
  return alpha_ric_norm(u, complex_hessian(u), alpha_prime);
}

/// F_hat^{p qbar} = g_hat^{p qbar} + alpha' e^{-2u} rho_tilde^{p qbar} + alpha' e^{-u} adj(u_{kbar j})
inline HermitianField F_hat(const RealField& u, const HermitianField& hessian,
                            const HermitianField& rho_tilde, double alpha_prime) {
  HermitianField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = std::exp(-u[i]);
    out[i] = Herm2::identity() + (alpha_prime * s * s) * rho_tilde[i] +
             (alpha_prime * s) * hessian[i].adjugate();
  }
  return out;
}
inline HermitianField F_hat(const RealField& u, const HermitianField& rho_tilde,
                            double alpha_prime) {
  return F_hat(u, complex_hessian(u), rho_tilde, alpha_prime);
}

struct EllipticityBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool elliptic = true;  ///< false once lambda_min <= 0
};

inline EllipticityBounds ellipticity_bounds(const HermitianField& f_hat) {
  const auto [lo, hi] = eigenvalue_range(f_hat);
  return {lo, hi, lo > 0.0};
}

/// omega' = e^u g_hat + alpha' e^{-u} rho + alpha' i ddbar u
inline HermitianField omega_prime(const RealField& u, const HermitianField& hessian,
                                  const HermitianField& rho, double alpha_prime) {
  HermitianField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(u[i]) * Herm2::identity() + (alpha_prime * std::exp(-u[i])) * rho[i] +
             alpha_prime * hessian[i];
  }
  return out;
}
inline HermitianField omega_prime(const RealField& u, const HermitianField& rho,
                                  double alpha_prime) {
  return omega_prime(u, complex_hessian(u), rho, alpha_prime);
}

struct HigherNorms {
  double sup_grad_T = 0.0;
  double sup_grad_ric = 0.0;
};

/// sup |nabla T|_g and sup |nabla Ric|_g for the Chern connection of e^u g_hat.
///   nabla_i T_j = -u_{ij} + u_i u_j,  nabla_ibar T_j = -u_{j ibar}
///   nabla_i R_{kbar j} = -2 (u_{i j kbar} - u_i u_{kbar j}); the barred
///   derivatives contribute the same total by conjugation.
inline HigherNorms higher_norms(const RealField& u) {
  const GridSpec& g = u.grid;
  const int n = g.n;
  const auto u_hat = to_spectral(u);
  auto derivative = [&](auto&& symbol) { return from_spectral(apply_multiplier(u_hat, symbol)); };

  std::array<ComplexField, 2> du;
  std::array<std::array<ComplexField, 2>, 2> dd;      // u_{ij}
  std::array<std::array<ComplexField, 2>, 2> mixed;   // u_{kbar j}, [k][j]
  std::array<std::array<std::array<ComplexField, 2>, 2>, 2> third;  // u_{i j kbar}, [i][k][j]
  for (int i = 0; i < 2; ++i) {
    du[i] = derivative([&](const auto& k) { return dz_symbol(k, i + 1, n); });
    for (int j = 0; j < 2; ++j) {
      dd[i][j] = derivative(
          [&](const auto& k) { return dz_symbol(k, i + 1, n) * dz_symbol(k, j + 1, n); });
      mixed[i][j] = derivative(
          [&](const auto& k) { return dzbar_symbol(k, i + 1, n) * dz_symbol(k, j + 1, n); });
      for (int l = 0; l < 2; ++l) {
        third[i][j][l] = derivative([&](const auto& k) {
          return dz_symbol(k, i + 1, n) * dzbar_symbol(k, j + 1, n) * dz_symbol(k, l + 1, n);
        });
      }
    }
  }

  HigherNorms out;
  for (std::size_t p = 0; p < g.size(); ++p) {
    double t_sq = 0.0;
    double r_sq = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        t_sq += std::norm(-dd[i][j][p] + du[i][p] * du[j][p]);
        t_sq += std::norm(mixed[i][j][p]);
        for (int l = 0; l < 2; ++l) {
          // i: derivative direction, j: kbar index, l: j index
          r_sq += 2.0 * std::norm(-2.0 * (third[i][j][l][p] - du[i][p] * mixed[j][l][p]));
        }
      }
    }
    const double e = std::exp(-u[p]);
    out.sup_grad_T = std::max(out.sup_grad_T, std::sqrt(e * e * t_sq));
    out.sup_grad_ric = std::max(out.sup_grad_ric, std::sqrt(e * e * e * r_sq));
  }
  return out;
}

/// Residuals of the conformal torsion-curvature relations on a given u:
///   T_q = d_q log ||Omega||  with ||Omega|| = e^{-u},
///   R_{kbar j} = 2 d_kbar T_j  (the Chern derivative of a (1,0)-form in a barred
///   direction is the plain derivative on the flat background).
struct TorsionIdentityResiduals {
  double torsion = 0.0;
  double curvature = 0.0;
  double torsion_form = 0.0;  ///< sup | |i d omega|^2 - 2|T|^2 |
};

inline TorsionIdentityResiduals torsion_identity_residuals(const RealField& u) {
  const auto u_hat = to_spectral(u);
  const auto t = torsion_one_form(u_hat);
  const RealField log_omega = log(map(u, [](double x) { return std::exp(-x); }));
  const auto lo_hat = to_spectral(log_omega);

  TorsionIdentityResiduals r;
  for (int q = 1; q <= 2; ++q) {
    const auto d = from_spectral(deriv_z(lo_hat, q));
    for (std::size_t i = 0; i < d.size(); ++i) {
      r.torsion = std::max(r.torsion, std::abs(t[q - 1][i] - d[i]));
    }
  }

  const HermitianField ric = ricci_form(complex_hessian(u_hat));
  std::array<SpectralField, 2> t_hat{to_spectral(t[0]), to_spectral(t[1])};
  for (int k = 1; k <= 2; ++k) {
    for (int j = 1; j <= 2; ++j) {
      const auto d = from_spectral(deriv_zbar(t_hat[j - 1], k));
      for (std::size_t i = 0; i < d.size(); ++i) {
        const Herm2& m = ric[i];
        const cplx r_kj = (k == 1) ? (j == 1 ? cplx(m.a11) : m.a12) : (j == 1 ? m.a21() : cplx(m.a22));
        r.curvature = std::max(r.curvature, std::abs(r_kj - 2.0 * d[i]));
      }
    }
  }

  const RealField full = torsion_tensor_norm_sq(u);
  const RealField t2 = torsion_norm_sq(u);
  for (std::size_t i = 0; i < full.size(); ++i) {
    r.torsion_form = std::max(r.torsion_form, std::abs(full[i] - 2.0 * t2[i]));
  }
  return r;
}

}  // namespace fuyau
