#pragma once

// Convergence monitors: the J-functional of v = d_t e^u, decay-rate fits, the
// elliptic Fu-Yau residual certificate and per-step geometric reports.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fuyau/flow.hpp"

namespace fuyau {

class ConservationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pointwise identities that hold exactly for conformal metrics on a flat background.
struct IdentityChecks {
  double torsion = 0.0;       ///< T_q = d_q log ||Omega||
  double curvature = 0.0;     ///< R_{kbar j} = 2 nabla_kbar T_j
  double torsion_form = 0.0;  ///< |i d omega|^2 = 2 |T|^2
  double stokes = 0.0;        ///< |mean(i ddbar (e^u g_hat - a' e^{-u} rho))|
};

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  long step = 0;
  double conservation_error = 0.0;
  GeometryReport geometry;
  double J = 0.0;
  double sup_rhs = 0.0;
  std::optional<double> elliptic_residual;
  IdentityChecks identities;
};

struct JReport {
  double J = 0.0;
  double mean_v = 0.0;
};

/// J = mean(v^2), v = e^u rhs. The flow keeps mean(v) = 0; a violation larger
/// than 1e-9 M raises ConservationFault.
inline JReport j_functional(const RealField& u, const RealField& rhs_value, double M) {
  const RealField v = zip(u, rhs_value, [](double x, double r) { return std::exp(x) * r; });
  JReport r;
  r.mean_v = mean(v);
  r.J = mean(v * v);
  if (std::abs(r.mean_v) > 1e-9 * M) {
    throw ConservationFault("mean of d_t e^u is " + detail::format_number(r.mean_v) +
                            ", expected zero");
  }
  return r;
}

struct DecayFit {
  double eta = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of log J against t after dropping the first 20% of
/// samples; eta = -slope. An identically zero series has eta = +inf.
inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> J) {
  if (t.size() != J.size()) throw std::invalid_argument("fit_decay_rate: size mismatch");
  const std::size_t skip = t.size() / 5;
  std::vector<double> xs, ys;
  bool all_zero = true;
  for (std::size_t i = skip; i < t.size(); ++i) {
    if (J[i] != 0.0) all_zero = false;
    if (J[i] > 0.0) {
      xs.push_back(t[i]);
      ys.push_back(std::log(J[i]));
    }
  }
  if (all_zero && t.size() > skip) {
    return {std::numeric_limits<double>::infinity(), 1.0, t.size() - skip};
  }
  if (xs.size() < 10) {
    throw std::invalid_argument("fit_decay_rate needs at least 10 positive samples past the transient");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {-slope, r2, xs.size()};
}

inline DecayFit fit_decay_rate(const std::vector<DiagnosticsRecord>& records) {
  std::vector<double> t, J;
  for (const auto& r : records) {
    t.push_back(r.t);
    J.push_back(r.J);
  }
  return fit_decay_rate(t, J);
}

struct EllipticResidual {
  double sup_density = 0.0;         ///< sup |i ddbar(e^u g_hat - a' e^{-u} rho) + a' sigma2 + mu|
  double normalization_error = 0.0; ///< |mean(e^u) - M| / M
};

inline EllipticResidual elliptic_residual(const RealField& u, const FlowConfig& cfg) {
  EllipticResidual r;
  r.sup_density = sup_abs(dealiased(fu_yau_density(u, cfg)));
  r.normalization_error = std::abs(mean(exp(u)) - cfg.M) / cfg.M;
  return r;
}

inline GeometryReport geometry_report(const RealField& u, const FlowConfig& cfg) {
  GeometryReport g;
  const RealField eu = exp(u);
  g.sup_e_u = sup(eu);
  g.inf_e_u = inf(eu);
  g.sup_T2 = sup(torsion_norm_sq(u));
  const HermitianField h = complex_hessian(u);
  g.sup_alpha_ric = sup(alpha_ric_norm(u, h, cfg.alpha_prime));
  const auto bounds = ellipticity_bounds(F_hat(u, h, cfg.rho_parts.rho_tilde, cfg.alpha_prime));
  g.lambda_min_F = bounds.lambda_min;
  g.lambda_max_F = bounds.lambda_max;
  g.omega_prime_min_eig = min_eigenvalue(omega_prime(u, h, cfg.rho, cfg.alpha_prime));
  const auto hn = higher_norms(u);
  g.sup_grad_T = hn.sup_grad_T;
  g.sup_grad_ric = hn.sup_grad_ric;
  return g;
}

inline IdentityChecks identity_checks(const RealField& u, const FlowConfig& cfg) {
  const auto tr = torsion_identity_residuals(u);
  IdentityChecks c{tr.torsion, tr.curvature, tr.torsion_form, 0.0};
  HermitianField s = scale(exp(u), constant_hermitian(u.grid, Herm2::identity()));
  if (cfg.alpha_prime != 0.0) {
    const double a = cfg.alpha_prime;
    s = s + scale(map(u, [a](double x) { return -a * std::exp(-x); }), cfg.rho);
  }
  c.stokes = std::abs(mean(i_ddbar_form(s)));
  return c;
}

}  // namespace fuyau
