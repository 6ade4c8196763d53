#pragma once

// Built-in oracle suite: each check compares an implementation against an
// independent reference (exact solutions, analytic derivatives, a second
// assembly path) and reports the measured error against its tolerance.

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fuyau/io.hpp"

namespace fuyau {

struct OracleResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return std::isfinite(error) && error <= tolerance; }
};

namespace detail {

inline FlowConfig heat_limit_config(int n, double M, double eps) {
  FlowConfig cfg;
  cfg.grid = build_grid(n);
  cfg.M = M;
  cfg.nonconstant_start = true;
  cfg.initial_modes = {{{1, 0, 0, 0}, eps, 0.0}};
  prepare(cfg);
  return cfg;
}

inline double cos_x1_coefficient(const RealField& f) { return 2.0 * to_spectral(f).at(1, 0, 0, 0).real(); }

}  // namespace detail

inline std::vector<OracleResult> run_selftest(const std::filesystem::path& scratch) {
  std::vector<OracleResult> out;
  auto check = [&](std::string name, double tolerance, const std::function<double()>& measure) {
    double err;
    try {
      err = measure();
    } catch (const std::exception&) {
      err = std::numeric_limits<double>::infinity();
    }
    out.push_back({std::move(name), err, tolerance});
  };
  std::mt19937 rng(20240611);
  const GridSpec g8 = build_grid(8);
  const GridSpec g16 = build_grid(16);
  const GridSpec g16d = build_grid(16, true);
  const GridSpec g24d = build_grid(24, true);

  check("spectral roundtrip", 1e-13, [&] {
    const auto f = random_smooth_field(g16, rng, 6, 4, 1.0);
    return sup_abs(real_part(from_spectral(to_spectral(f))) - f) / sup_abs(f);
  });

  check("derivative of cos x1", 1e-12, [&] {
    const auto f = generate(g8, [](double x1, double, double, double) { return std::cos(x1); });
    const auto expected = generate(g8, [](double x1, double, double, double) { return -0.5 * std::sin(x1); });
    const auto d = deriv_z(f, 1);
    return std::max(sup_abs(real_part(d) - expected), sup_abs(imag_part(d)));
  });

  check("derivative conjugation and commutativity", 1e-12, [&] {
    const auto re = random_smooth_field(g8, rng, 4, 3, 1.0);
    const auto im = random_smooth_field(g8, rng, 4, 3, 1.0);
    const auto f = zip(re, im, [](double a, double b) { return cplx(a, b); });
    double err = 0.0;
    const auto a = deriv_zbar(f, 2);
    const auto b = conj(deriv_z(conj(f), 2));
    const auto c = deriv_z(deriv_z(f, 1), 2);
    const auto d = deriv_z(deriv_z(f, 2), 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
      err = std::max({err, std::abs(a[i] - b[i]), std::abs(c[i] - d[i])});
    }
    return err;
  });

  check("mean of exp(cos x1) against 1-D quadrature", 1e-12, [&] {
    double q = 0.0;
    for (int m = 0; m < 64; ++m) q += std::exp(std::cos(2.0 * std::numbers::pi * m / 64));
    q /= 64;
    return std::abs(mean(generate(g16, [](double x1, double, double, double) { return std::exp(std::cos(x1)); })) - q);
  });

  check("complex Hessian of cos(x1 + x2)", 1e-13, [&] {
    const auto u = generate(g8, [](double x1, double, double x2, double) { return std::cos(x1 + x2); });
    const auto h = complex_hessian(u);
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double e = -0.25 * u[i];
      err = std::max({err, std::abs(h[i].a11 - e), std::abs(h[i].a22 - e), std::abs(h[i].a12 - e)});
    }
    return err;
  });

  check("i ddbar of f g_hat equals the trace form", 1e-12, [&] {
    const auto f = random_smooth_field(g8, rng, 4, 3, 1.0);
    const auto id = constant_hermitian(g8, Herm2::identity());
    return sup_abs(i_ddbar_form(scale(f, id)) - wedge_quotient(i_ddbar_scalar(f), id));
  });

  check("Stokes exactness of i ddbar", 1e-13, [&] {
    double err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      err = std::max(err, std::abs(mean(i_ddbar_form(random_hermitian_field(g8, rng, 5, 3, 2.0)))));
    }
    return err;
  });

  check("rho decomposition reconstruction", 1e-10, [&] {
    double err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const auto rho = random_hermitian_field(g24d, rng, 3, 2, 1.0);
      const auto w = random_smooth_field(g24d, rng, 3, 1, 0.2);
      const auto direct = -i_ddbar_form(scale(exp(-w), rho));
      err = std::max(err, sup_abs(dealiased(reconstruct_minus_ddbar(decompose_rho(rho), w)) - dealiased(direct)));
    }
    return err;
  });

  check("scalar and geometric flow assemblies agree", 1e-10, [&] {
    std::uniform_real_distribution<double> ad(-2.0, 2.0), md(1.0, 5.0);
    double err = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
      FlowConfig cfg;
      cfg.grid = g16d;
      cfg.alpha_prime = ad(rng);
      cfg.M = std::exp(md(rng));
      cfg.rho_modes = random_rho_modes(rng, 3, 2, 1.0);
      cfg.mu_modes = random_real_modes(rng, 3, 2, 1.0);
      prepare(cfg);
      const auto u = random_smooth_field(g16d, rng, 3, 1, 0.2) + std::log(cfg.M);
      err = std::max(err, sup_abs(rhs(u, cfg) - rhs_geometric(u, cfg)));
    }
    return err;
  });

  check("torsion and curvature identities", 1e-12, [&] {
    const auto u = random_smooth_field(g16, rng, 4, 3, 0.3) + std::log(1000.0);
    const auto r = torsion_identity_residuals(u);
    return std::max({r.torsion, r.curvature, r.torsion_form});
  });

  check("heat limit: exponential step is exact", 1e-12, [&] {
    const auto cfg = detail::heat_limit_config(8, 100.0, 0.1);
    const auto s0 = initial_state(cfg);
    const double dt = 3.0;
    const double ratio = detail::cos_x1_coefficient(exp(step_imex(s0, cfg, dt).u)) /
                         detail::cos_x1_coefficient(exp(s0.u));
    return std::abs(ratio - std::exp(-dt / 8.0));
  });

  check("heat limit: rk4 step matches e^{-dt/8}", 1e-12, [&] {
    const auto cfg = detail::heat_limit_config(8, 100.0, 0.1);
    const auto s0 = initial_state(cfg);
    const double dt = 1e-3;
    const double ratio = detail::cos_x1_coefficient(exp(step_rk4(s0, cfg, dt).u)) /
                         detail::cos_x1_coefficient(exp(s0.u));
    return std::abs(ratio - std::exp(-dt / 8.0));
  });

  check("heat limit: conservation over unit time", 1e-12, [&] {
    const auto cfg = detail::heat_limit_config(8, 100.0, 0.5);
    FlowState s = initial_state(cfg);
    for (int i = 0; i < 100; ++i) s = step_rk4(s, cfg, 1e-2);
    return conservation_error(s, cfg);
  });

  check("heat limit: J matches eps^2 e^{-t/4} / 128", 1e-3, [&] {
    const double eps = 0.1, M = 100.0;
    auto cfg = detail::heat_limit_config(16, M, eps);
    FlowState s = initial_state(cfg);
    for (int i = 0; i < 4; ++i) s = step_imex(s, cfg, 0.5);
    const double J = j_functional(s.u, rhs(s.u, cfg), M).J;
    const double exact = eps * eps * std::exp(-s.t / 4.0) / 128.0;
    return std::abs(J - exact) / exact;
  });

  check("decay fit of synthetic e^{-3t}", 1e-10, [&] {
    std::vector<double> t, J;
    for (int i = 0; i < 40; ++i) {
      t.push_back(0.1 * i);
      J.push_back(std::exp(-3.0 * 0.1 * i));
    }
    return std::abs(fit_decay_rate(t, J).eta - 3.0);
  });

  check("elliptic residual equals 2 e^u |rhs|", 1e-13, [&] {
    FlowConfig cfg;
    cfg.grid = g16;
    cfg.alpha_prime = 1.0;
    cfg.M = 1000.0;
    cfg.rho_modes = {{1, 2, {1, 0, 1, 0}, 1.0, 0.0}};
    cfg.mu_modes = {{{1, 0, 0, 0}, 1.0, 0.0}};
    prepare(cfg);
    const auto u = random_smooth_field(g16, rng, 3, 1, 0.01) + std::log(cfg.M);
    // the density cancels terms of size e^u, so roundoff is measured against that scale
    const double expected = sup_abs(2.0 * exp(u) * rhs(u, cfg));
    return std::abs(elliptic_residual(u, cfg).sup_density - expected) / sup(exp(u));
  });

  check("snapshot roundtrip is bit-exact", 0.0, [&] {
    FlowConfig cfg;
    cfg.grid = g8;
    cfg.M = 3.0;
    prepare(cfg);
    FlowState s;
    s.u = random_smooth_field(g8, rng, 5, 3, 1.0);
    s.t = 1.0 / 3.0;
    s.step_count = 7;
    s.dt_current = 0.1;
    const auto path = scratch / "selftest.snap";
    write_snapshot(s, cfg, path);
    const auto back = read_snapshot(path).state;
    std::filesystem::remove(path);
    double mismatches = back.t == s.t ? 0.0 : 1.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(back.u[i]) != std::bit_cast<std::uint64_t>(s.u[i])) mismatches += 1.0;
    }
    return mismatches;
  });

  return out;
}

}  // namespace fuyau
