#pragma once

// The parabolic Fu-Yau flow for the conformal factor u of omega = e^u omega_hat:
//
//   d_t u = 1/2 ( Lap u + |Du|^2 + a' e^{-u} sigma2_hat(i ddbar u)
//                 - a' e^{-u} i ddbar(e^{-u} rho)/(omega_hat^2/2) + e^{-u} mu_tilde )
//
// with Lap u = g_hat^{j kbar} u_{j kbar} and |Du|^2 = g_hat^{j kbar} u_j u_kbar.
// Equivalently, for the conserved density w = e^u,
//
//   2 d_t w = i ddbar(w g_hat - a' rho / w) + a' sigma2_hat(i ddbar log w) + mu_tilde,
//
// which is linear in w when a' = 0. Time stepping is done on w.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuyau/forms.hpp"
#include "fuyau/geometry.hpp"
#include "fuyau/modes.hpp"

namespace fuyau {

enum class Integrator { rk4, imex };
enum class DtPolicy { fixed, adaptive };

inline const char* to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "imex"; }
inline const char* to_string(DtPolicy p) { return p == DtPolicy::fixed ? "fixed" : "adaptive"; }

/// rho, its decomposition and mu_tilde resampled to the padded grid on which
/// the nonlinear terms of a dealiased grid are formed.
struct PaddedData {
  GridSpec grid;
  HermitianField rho;
  RhoDecomposition rho_parts;
  RealField mu_tilde;
};

struct FlowConfig {
  GridSpec grid;
  double alpha_prime = 0.0;
  double M = 1.0;

  std::vector<RhoMode> rho_modes;
  std::vector<RealMode> mu_modes;
  /// Perturbation of e^{u_0} = M + sum of modes; requires nonconstant_start.
  std::vector<RealMode> initial_modes;
  bool nonconstant_start = false;

  Integrator integrator = Integrator::imex;
  DtPolicy dt_policy = DtPolicy::adaptive;
  double dt = 0.5;  ///< fixed step, or the cap on adaptive steps
  double safety = 0.5;
  double t_max = 400.0;
  long max_steps = 1'000'000;

  double eps_rhs = 1e-10;
  double eps_residual = 1e-9;
  double conservation_tol = 1e-9;
  /// Admissible band for the eigenvalues of F_hat; leaving it halts the run.
  double ellipticity_lower = 0.5;
  double ellipticity_upper = 2.0;

  int record_every = 10;
  std::string output_directory = "out";

  std::vector<std::string> warnings;

  // Derived data, filled by prepare().
  HermitianField rho;
  RhoDecomposition rho_parts;
  RealField mu_tilde;
  /// The same data on the padded grid; set when grid.dealias is on.
  std::shared_ptr<const PaddedData> padded;

  bool is_linear() const {
    return alpha_prime == 0.0 && std::all_of(mu_tilde.begin(), mu_tilde.end(),
                                             [](double v) { return v == 0.0; });
  }
};

namespace detail {

inline std::shared_ptr<const PaddedData> pad_data(const FlowConfig& cfg) {
  if (!cfg.grid.dealias) return nullptr;
  auto p = std::make_shared<PaddedData>();
  p->grid = build_grid(padded_size(cfg.grid.n));
  p->rho = resample(cfg.rho, p->grid);
  p->rho_parts = decompose_rho(p->rho);
  p->mu_tilde = resample(cfg.mu_tilde, p->grid);
  return p;
}

}  // namespace detail

/// Builds rho, its decomposition and the mean-zero mu_tilde from the mode lists.
inline void prepare(FlowConfig& cfg) {
  if (!(cfg.M > 0.0)) throw std::invalid_argument("M must be positive");
  cfg.warnings.clear();
  cfg.rho = rho_from_modes(cfg.grid, cfg.rho_modes);
  cfg.rho_parts = decompose_rho(cfg.rho);
  const RealField raw = field_from_modes(cfg.grid, cfg.mu_modes);
  const double zero_mode = mean(raw);
  if (std::abs(zero_mode) > 1e-14) {
    cfg.warnings.push_back("mu has a nonzero mean (" + detail::format_number(zero_mode) +
                           "); subtracted to satisfy the integrability condition");
  }
  cfg.mu_tilde = normalize_mu(raw).mu_tilde;
  cfg.padded = detail::pad_data(cfg);
}

/// Convenience for code that supplies rho and mu as fields rather than modes.
inline FlowConfig make_config(const GridSpec& g, double alpha_prime, double M,
                              const HermitianField& rho, const RealField& raw_mu) {
  FlowConfig cfg;
  cfg.grid = g;
  cfg.alpha_prime = alpha_prime;
  cfg.M = M;
  cfg.rho = rho;
  cfg.rho_parts = decompose_rho(rho);
  cfg.mu_tilde = normalize_mu(raw_mu).mu_tilde;
  cfg.padded = detail::pad_data(cfg);
  return cfg;
}

struct FlowState {
  RealField u;
  double t = 0.0;
  long step_count = 0;
  double dt_current = 0.0;
};

inline FlowState initial_state(const FlowConfig& cfg) {
  FlowState s;
  if (cfg.nonconstant_start && !cfg.initial_modes.empty()) {
    RealField pert = field_from_modes(cfg.grid, cfg.initial_modes);
    const double m = mean(pert);
    s.u = map(pert, [&](double p) { return std::log(cfg.M + p - m); });
  } else {
    s.u = RealField(cfg.grid, std::log(cfg.M));
  }
  require_finite(s.u, "initial data");
  s.dt_current = cfg.dt;
  return s;
}

// ---------------------------------------------------------------------------
// right-hand sides
//
// Each right-hand side is a pointwise kernel evaluated on the data of one grid.
// On a dealiased grid the kernel runs on the padded grid and the result is
// restricted back with the 2/3 rule applied.

namespace detail {

struct Terms {
  double alpha_prime;
  const HermitianField& rho;
  const RhoDecomposition& parts;
  const RealField& mu_tilde;
};

inline Terms terms(const FlowConfig& cfg) { return {cfg.alpha_prime, cfg.rho, cfg.rho_parts, cfg.mu_tilde}; }
inline Terms padded_terms(const FlowConfig& cfg) {
  return {cfg.alpha_prime, cfg.padded->rho, cfg.padded->rho_parts, cfg.padded->mu_tilde};
}

inline RealField restrict_dealiased(const RealField& fine, const GridSpec& coarse) {
  return from_spectral_real(truncate_two_thirds(resample(to_spectral(fine), coarse)));
}

inline RealField rhs_kernel(const RealField& u, const SpectralField& u_hat, const HermitianField& h,
                            const Terms& t) {
  const ComplexField u1 = from_spectral(deriv_z(u_hat, 1));
  const ComplexField u2 = from_spectral(deriv_z(u_hat, 2));
  const double a = t.alpha_prime;
  const auto& d = t.parts;

  RealField out(u.grid);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = std::exp(-u[i]);
    const double grad_sq = std::norm(u1[i]) + std::norm(u2[i]);
    double value = h[i].trace() + grad_sq + e * t.mu_tilde[i];
    if (a != 0.0) {
      const cplx b_dot = d.b_rho[0][i] * u1[i] + d.b_rho[1][i] * u2[i];
      const Herm2 grad{std::norm(u1[i]), std::norm(u2[i]), u2[i] * std::conj(u1[i])};
      const double rho_term = -d.psi_rho[i] + b_dot.real() + contract(d.rho_tilde[i], h[i]) -
                              contract(d.rho_tilde[i], grad);
      value += a * e * h[i].det() + a * e * e * rho_term;
    }
    out[i] = 0.5 * value;
  }
  return out;
}

inline RealField density_kernel(const RealField& u, const Terms& t) {
  const double a = t.alpha_prime;
  HermitianField s = scale(exp(u), constant_hermitian(u.grid, Herm2::identity()));
  if (a != 0.0) {
    const RealField weight = map(u, [a](double x) { return -a * std::exp(-x); });
    s = s + scale(weight, t.rho);
  }
  RealField density = i_ddbar_form(s) + t.mu_tilde;
  if (a != 0.0) density = density + a * sigma2_hat(i_ddbar_scalar(u));
  return density;
}

inline RealField nonlinear_volume_kernel(const RealField& w, const Terms& t) {
  RealField out = 0.5 * t.mu_tilde;
  const double a = t.alpha_prime;
  if (a != 0.0) {
    const RealField u = log(w);
    const RealField inv_w = map(w, [](double x) { return 1.0 / x; });
    const RealField quad = sigma2_hat(i_ddbar_scalar(u));
    const RealField rho_term = i_ddbar_form(scale(inv_w, t.rho));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.5 * a * (quad[i] - rho_term[i]);
  }
  return out;
}

/// Evaluates kernel(field on some grid, terms) on the grid that forms products for cfg.
template <class Kernel>
RealField evaluate(const RealField& f, const FlowConfig& cfg, Kernel&& kernel) {
  if (!cfg.padded) return dealiased(kernel(f, terms(cfg)));
  return restrict_dealiased(kernel(resample(f, cfg.padded->grid), padded_terms(cfg)), f.grid);
}

}  // namespace detail

/// Scalar assembly of d_t u, with the rho term expanded through (psi, b, rho_tilde).
/// `u_hat` and `h` are the spectral coefficients and complex Hessian of u; they
/// are reused directly unless the products are formed on the padded grid.
inline RealField rhs(const RealField& u, const SpectralField& u_hat, const HermitianField& h,
                     const FlowConfig& cfg) {
  require_finite(u, "u");
  RealField out;
  if (cfg.padded) {
    const auto fine_hat = resample(u_hat, cfg.padded->grid);
    const RealField fine = from_spectral_real(fine_hat);
    out = detail::restrict_dealiased(
        detail::rhs_kernel(fine, fine_hat, complex_hessian(fine_hat), detail::padded_terms(cfg)), u.grid);
  } else {
    out = dealiased(detail::rhs_kernel(u, u_hat, h, detail::terms(cfg)));
  }
  require_finite(out, "rhs");
  return out;
}

inline RealField rhs(const RealField& u, const FlowConfig& cfg) {
  const auto u_hat = to_spectral(u);
  return rhs(u, u_hat, cfg.padded ? HermitianField() : complex_hessian(u_hat), cfg);
}

/// Density i ddbar(e^u g_hat - a' e^{-u} rho) + a' sigma2_hat(i ddbar u) + mu_tilde,
/// assembled only from forms operations. Zero exactly on Fu-Yau solutions.
inline RealField fu_yau_density(const RealField& u, const FlowConfig& cfg) {
  return detail::evaluate(u, cfg, detail::density_kernel);
}

/// Geometric assembly: d_t u = e^{-u} (fu_yau_density) / 2.
inline RealField rhs_geometric(const RealField& u, const FlowConfig& cfg) {
  require_finite(u, "u");
  RealField out = detail::evaluate(u, cfg, [](const RealField& v, const detail::Terms& t) {
    return zip(v, detail::density_kernel(v, t), [](double x, double d) { return 0.5 * std::exp(-x) * d; });
  });
  require_finite(out, "rhs_geometric");
  return out;
}

// ---------------------------------------------------------------------------
// w = e^u form used by the integrators: d_t w = L w + N(w), L = Lap/2.

/// The part of d_t w treated explicitly by the exponential integrator.
inline RealField nonlinear_volume_rate(const RealField& w, const FlowConfig& cfg) {
  require_finite(w, "e^u");
  return detail::evaluate(w, cfg, detail::nonlinear_volume_kernel);
}

inline SpectralField half_laplacian(const SpectralField& c) {
  const int n = c.grid.n;
  return apply_multiplier(c, [n](const auto& k) { return 0.5 * trace_laplacian_symbol(k, n); });
}

/// d_t e^u in full.
inline RealField volume_rate(const RealField& w, const FlowConfig& cfg) {
  return from_spectral_real(half_laplacian(to_spectral(w))) + nonlinear_volume_rate(w, cfg);
}

// ---------------------------------------------------------------------------
// time steppers

namespace detail {

inline FlowState finish_step(const FlowState& s, const RealField& w, double dt) {
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) throw BlowUpError("e^u left (0, inf) during a step");
  }
  FlowState next;
  next.u = log(w);
  next.t = s.t + dt;
  next.step_count = s.step_count + 1;
  next.dt_current = dt;
  return next;
}

/// phi_1..phi_3 of z, phi_k(z) = sum_m z^m / (m + k)!.
struct Phi {
  double p1, p2, p3;
};
inline Phi phi_functions(double z) {
  if (std::abs(z) < 1.0) {
    Phi r{0.0, 0.0, 0.0};
    double term = 1.0;  // z^m / m!
    for (int m = 0; m < 30; ++m) {
      // z^m/(m+k)! = term * m! / (m+k)!
      r.p1 += term / (m + 1);
      r.p2 += term / ((m + 1.0) * (m + 2.0));
      r.p3 += term / ((m + 1.0) * (m + 2.0) * (m + 3.0));
      term *= z / (m + 1);
    }
    return r;
  }
  const double ez = std::exp(z);
  const double p1 = (ez - 1.0) / z;
  const double p2 = (ez - 1.0 - z) / (z * z);
  const double p3 = (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
  return {p1, p2, p3};
}

/// Cox-Matthews ETDRK4 weights for a real diagonal linear operator.
struct EtdWeights {
  std::vector<double> e, e_half, q, f1, f2, f3;
};

inline EtdWeights etd_weights(const GridSpec& g, double dt) {
  EtdWeights w;
  const std::size_t size = g.size();
  for (auto* v : {&w.e, &w.e_half, &w.q, &w.f1, &w.f2, &w.f3}) v->resize(size);
  // the weights depend on k only through the symbol, which takes few distinct values
  std::map<double, std::array<double, 6>> by_symbol;
  SpectralField ones(g);
  std::fill(ones.coefficients.begin(), ones.coefficients.end(), cplx(1.0, 0.0));
  const auto symbols = apply_multiplier(ones, [n = g.n](const auto& k) {
    return cplx(0.5 * trace_laplacian_symbol(k, n), 0.0);
  });
  for (std::size_t i = 0; i < size; ++i) {
    const double lam = symbols.coefficients[i].real();
    auto [it, fresh] = by_symbol.try_emplace(lam);
    if (fresh) {
      const double z = lam * dt;
      const Phi full = phi_functions(z);
      const Phi half = phi_functions(0.5 * z);
      it->second = {std::exp(z),
                    std::exp(0.5 * z),
                    0.5 * dt * half.p1,
                    dt * (full.p1 - 3.0 * full.p2 + 4.0 * full.p3),
                    dt * (full.p2 - 2.0 * full.p3),
                    dt * (-full.p2 + 4.0 * full.p3)};
    }
    const auto& v = it->second;
    w.e[i] = v[0];
    w.e_half[i] = v[1];
    w.q[i] = v[2];
    w.f1[i] = v[3];
    w.f2[i] = v[4];
    w.f3[i] = v[5];
  }
  return w;
}

}  // namespace detail

/// Classical RK4 on d_t e^u = volume_rate. dt may be negative.
inline FlowState step_rk4(const FlowState& s, const FlowConfig& cfg, double dt) {
  const RealField w = exp(s.u);
  const RealField k1 = volume_rate(w, cfg);
  const RealField k2 = volume_rate(w + (0.5 * dt) * k1, cfg);
  const RealField k3 = volume_rate(w + (0.5 * dt) * k2, cfg);
  const RealField k4 = volume_rate(w + dt * k3, cfg);
  RealField next(w.grid);
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = w[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return detail::finish_step(s, next, dt);
}

/// Exponential (integrating-factor type) step: the background Laplacian is
/// integrated exactly per Fourier mode, the rest by ETDRK4. Equilibria of the
/// flow are fixed points of the step for every dt.
inline FlowState step_imex(const FlowState& s, const FlowConfig& cfg, double dt) {
  const GridSpec& g = s.u.grid;
  const RealField w = exp(s.u);
  const auto v_hat = to_spectral(w);
  // fixed and capped adaptive runs reuse one dt for long stretches
  thread_local struct {
    int n = 0;
    double dt = 0.0;
    detail::EtdWeights weights;
  } cache;
  if (cache.n != g.n || cache.dt != dt) cache = {g.n, dt, detail::etd_weights(g, dt)};
  const auto& wt = cache.weights;
  const std::size_t size = g.size();

  if (cfg.is_linear()) {
    SpectralField out(g);
    for (std::size_t i = 0; i < size; ++i) out.coefficients[i] = wt.e[i] * v_hat.coefficients[i];
    return detail::finish_step(s, from_spectral_real(out), dt);
  }

  auto nonlinear_hat = [&](const RealField& x) { return to_spectral(nonlinear_volume_rate(x, cfg)); };
  const auto nv = nonlinear_hat(w);

  SpectralField a_hat(g), b_hat(g), c_hat(g), next(g);
  for (std::size_t i = 0; i < size; ++i) {
    a_hat.coefficients[i] = wt.e_half[i] * v_hat.coefficients[i] + wt.q[i] * nv.coefficients[i];
  }
  const auto na = nonlinear_hat(from_spectral_real(a_hat));
  for (std::size_t i = 0; i < size; ++i) {
    b_hat.coefficients[i] = wt.e_half[i] * v_hat.coefficients[i] + wt.q[i] * na.coefficients[i];
  }
  const auto nb = nonlinear_hat(from_spectral_real(b_hat));
  for (std::size_t i = 0; i < size; ++i) {
    c_hat.coefficients[i] = wt.e_half[i] * a_hat.coefficients[i] +
                            wt.q[i] * (2.0 * nb.coefficients[i] - nv.coefficients[i]);
  }
  const auto nc = nonlinear_hat(from_spectral_real(c_hat));
  for (std::size_t i = 0; i < size; ++i) {
    next.coefficients[i] = wt.e[i] * v_hat.coefficients[i] + wt.f1[i] * nv.coefficients[i] +
                           2.0 * wt.f2[i] * (na.coefficients[i] + nb.coefficients[i]) +
                           wt.f3[i] * nc.coefficients[i];
  }
  return detail::finish_step(s, from_spectral_real(next), dt);
}

inline FlowState step(const FlowState& s, const FlowConfig& cfg, double dt) {
  return cfg.integrator == Integrator::rk4 ? step_rk4(s, cfg, dt) : step_imex(s, cfg, dt);
}

// ---------------------------------------------------------------------------
// step size and conservation

/// Stability limit of RK4 on the negative real axis.
inline constexpr double kRk4StabilityRadius = 2.8;

/// Suggested step for the configured integrator, capped at cfg.dt.
///   rk4:  safety * 2.8 / (1/2 (n/2)^2 lambda_max(F_hat))
///   imex: only the explicit remainder limits the step: its stiffness is
///         1/2 (n/2)^2 max|lambda(F_hat) - 1| and its size sup|N| / inf e^u.
inline double suggest_dt(const FlowState& s, const FlowConfig& cfg) {
  const double half_nyquist_sq = 0.5 * (cfg.grid.n / 2.0) * (cfg.grid.n / 2.0);
  const auto bounds = ellipticity_bounds(F_hat(s.u, cfg.rho_parts.rho_tilde, cfg.alpha_prime));
  if (cfg.integrator == Integrator::rk4) {
    const double lam = half_nyquist_sq * std::max(bounds.lambda_max, 1.0);
    return std::min(cfg.dt, cfg.safety * kRk4StabilityRadius / lam);
  }
  const double deviation =
      std::max(std::abs(bounds.lambda_min - 1.0), std::abs(bounds.lambda_max - 1.0));
  double dt = cfg.dt;
  if (deviation > 0.0) {
    dt = std::min(dt, cfg.safety * kRk4StabilityRadius / (half_nyquist_sq * deviation));
  }
  const RealField w = exp(s.u);
  const double rate = sup_abs(nonlinear_volume_rate(w, cfg)) / inf(w);
  if (rate > 0.0) dt = std::min(dt, cfg.safety / rate);
  return dt;
}

/// |mean(e^u) - M| / M
inline double conservation_error(const FlowState& s, const FlowConfig& cfg) {
  return std::abs(mean(exp(s.u)) - cfg.M) / cfg.M;
}

}  // namespace fuyau
