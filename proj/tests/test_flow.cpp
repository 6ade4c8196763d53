#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fuyau/flow.hpp"
#include "fuyau/run.hpp"

using namespace fuyau;

namespace {

FlowConfig heat_config(int n, double M, double eps) {
  FlowConfig cfg;
  cfg.grid = build_grid(n);
  cfg.M = M;
  cfg.alpha_prime = 0.0;
  cfg.nonconstant_start = true;
  cfg.initial_modes = {{{1, 0, 0, 0}, eps, 0.0}};
  prepare(cfg);
  return cfg;
}

// Amplitude of cos(x1) in e^u.
double cos_x1_amplitude(const RealField& u) {
  return 2.0 * to_spectral(exp(u)).at(1, 0, 0, 0).real();
}

template <class Rng>
FlowConfig random_config(Rng& rng, double alpha_prime, bool dealias = true) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  FlowConfig cfg;
  cfg.grid = build_grid(16, dealias);
  cfg.alpha_prime = alpha_prime;
  cfg.M = std::exp(1.0 + 4.0 * ud(rng));
  cfg.rho_modes = random_rho_modes(rng, 3, 2, 1.0);
  cfg.mu_modes = random_real_modes(rng, 3, 2, 1.0);
  prepare(cfg);
  return cfg;
}

}  // namespace

TEST(Rhs, StationaryAtConstantWithoutData) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.alpha_prime = 1.0;
  cfg.M = 100.0;
  prepare(cfg);
  const RealField u(cfg.grid, std::log(cfg.M));
  EXPECT_LT(sup_abs(rhs(u, cfg)), 1e-15);
  EXPECT_LT(sup_abs(rhs_geometric(u, cfg)), 1e-15);
}

TEST(Rhs, OnlyMuSurvivesAtConstant) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.alpha_prime = 1.0;
  cfg.M = 100.0;
  cfg.mu_modes = {{{1, 0, 0, 0}, 1.0, 0.0}};
  prepare(cfg);
  const RealField u(cfg.grid, std::log(cfg.M));
  const auto r = rhs(u, cfg);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR(r[i], std::cos(cfg.grid.coordinate(cfg.grid.unflat(i)[0])) / (2.0 * cfg.M), 1e-15);
  }
}

TEST(Rhs, HeatLimitIsHeatEquationForVolume) {
  // d_t e^u = e^u rhs = (1/2) g_hat^{j kbar} (e^u)_{j kbar}
  const auto cfg = heat_config(16, 10.0, 0.2);
  const auto u = initial_state(cfg).u;
  const auto lhs = exp(u) * rhs(u, cfg);
  const auto expected = from_spectral_real(half_laplacian(to_spectral(exp(u))));
  EXPECT_LT(sup_abs(lhs - expected), 1e-13);
  EXPECT_LT(sup_abs(rhs(u, cfg) - rhs_geometric(u, cfg)), 1e-14);
}

TEST(Rhs, DualAssemblyAgreesOnRandomDraws) {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> ad(-2.0, 2.0);
  for (int draw = 0; draw < 20; ++draw) {
    const auto cfg = random_config(rng, ad(rng));
    const RealField u = random_smooth_field(cfg.grid, rng, 3, 1, 0.2) + std::log(cfg.M);
    EXPECT_LT(sup_abs(rhs(u, cfg) - rhs_geometric(u, cfg)), 1e-10) << "draw " << draw;
  }
}

TEST(Rhs, FuYauDensityIsTwiceVolumeRate) {
  // Pointwise identity, so compared without the output truncation.
  std::mt19937 rng(103);
  const auto cfg = random_config(rng, -1.0, false);
  const RealField u = random_smooth_field(cfg.grid, rng, 3, 1, 0.05) + std::log(cfg.M);
  const auto density = fu_yau_density(u, cfg);
  const auto from_rhs = 2.0 * exp(u) * rhs(u, cfg);
  EXPECT_LT(sup_abs(density - from_rhs), 1e-10);
  const auto w = exp(u);
  EXPECT_LT(sup_abs(volume_rate(w, cfg) - exp(u) * rhs(u, cfg)), 1e-10);
}

TEST(Step, HeatLimitRk4MatchesExactDecay) {
  const auto cfg = heat_config(8, 100.0, 0.1);
  const auto s0 = initial_state(cfg);
  const double a0 = cos_x1_amplitude(s0.u);
  for (double dt : {1e-3, 0.1, 0.2}) {
    const auto s1 = step_rk4(s0, cfg, dt);
    const double ratio = cos_x1_amplitude(s1.u) / a0;
    const double z = -dt / 8.0;
    // RK4 truncation of e^z: z^5/120 leading term.
    const double rk4 = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    EXPECT_NEAR(ratio, rk4, 1e-12);
    EXPECT_NEAR(ratio, std::exp(z), std::pow(dt / 8.0, 5) / 100.0 + 1e-12);
    EXPECT_DOUBLE_EQ(s1.t, dt);
    EXPECT_EQ(s1.step_count, 1);
  }
}

TEST(Step, HeatLimitImexIsExact) {
  const auto cfg = heat_config(8, 100.0, 0.1);
  const auto s0 = initial_state(cfg);
  const double a0 = cos_x1_amplitude(s0.u);
  for (double dt : {1e-3, 0.5, 4.0, 40.0}) {
    const double ratio = cos_x1_amplitude(step_imex(s0, cfg, dt).u) / a0;
    EXPECT_NEAR(ratio, std::exp(-dt / 8.0), 1e-12) << "dt " << dt;
  }
}

TEST(Step, ImexNonlinearPathAgreesWithRk4) {
  std::mt19937 rng(107);
  auto cfg = random_config(rng, 1.0);
  cfg.M = 50.0;
  prepare(cfg);
  const auto s0 = initial_state(cfg);
  FlowState a = s0, b = s0;
  const double dt = 0.01;
  for (int i = 0; i < 10; ++i) {
    a = step_rk4(a, cfg, dt);
    b = step_imex(b, cfg, dt);
  }
  EXPECT_LT(sup_abs(exp(a.u) - exp(b.u)), 1e-10 * cfg.M);
}

TEST(Step, ZeroRhsLeavesStateUnchanged) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.alpha_prime = 1.0;
  cfg.M = 10.0;
  prepare(cfg);
  const auto s0 = initial_state(cfg);
  for (auto integrator : {Integrator::rk4, Integrator::imex}) {
    cfg.integrator = integrator;
    const auto s1 = step(s0, cfg, 0.3);
    EXPECT_LT(sup_abs(s1.u - s0.u), 1e-15);
    EXPECT_DOUBLE_EQ(s1.t, 0.3);
  }
}

TEST(Step, Rk4TimeReversal) {
  std::mt19937 rng(109);
  auto cfg = random_config(rng, 0.5);
  cfg.nonconstant_start = true;
  cfg.initial_modes = random_real_modes(rng, 3, 1, 0.1 * cfg.M);
  prepare(cfg);
  const auto s0 = initial_state(cfg);
  double previous = INFINITY;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto back = step_rk4(step_rk4(s0, cfg, dt), cfg, -dt);
    const double err = sup_abs(back.u - s0.u);
    EXPECT_LT(err, 1e-9);
    if (std::isfinite(previous) && previous > 1e-14) {
      EXPECT_LT(err, previous / 16.0);
    }
    previous = err;
  }
}

TEST(Step, ImexPreservesEquilibria) {
  // A converged state is a fixed point of the exponential step for any dt.
  FlowConfig cfg = heat_config(8, 10.0, 0.0);
  const auto s0 = initial_state(cfg);
  const auto s1 = step_imex(s0, cfg, 100.0);
  EXPECT_LT(sup_abs(s1.u - s0.u), 1e-15);
}

TEST(Step, PhiFunctionsMatchClosedForms) {
  for (double z : {-1e-8, -0.3, 0.7, -0.999, -1.0, -5.0, -80.0}) {
    const auto p = detail::phi_functions(z);
    if (std::abs(z) > 1e-3) {
      EXPECT_NEAR(p.p1, std::expm1(z) / z, 1e-14);
      EXPECT_NEAR(p.p2, (std::expm1(z) - z) / (z * z), 1e-13);
      EXPECT_NEAR(p.p3, (std::expm1(z) - z - 0.5 * z * z) / (z * z * z), 1e-12);
    } else {
      EXPECT_NEAR(p.p1, 1.0 + z / 2.0, 1e-15);
      EXPECT_NEAR(p.p2, 0.5 + z / 6.0, 1e-15);
      EXPECT_NEAR(p.p3, 1.0 / 6.0 + z / 24.0, 1e-15);
    }
  }
}

TEST(SuggestDt, Rk4NearIdentity) {
  FlowConfig cfg;
  cfg.grid = build_grid(16);
  cfg.M = 1000.0;
  cfg.alpha_prime = 1.0;
  cfg.integrator = Integrator::rk4;
  cfg.safety = 0.5;
  cfg.dt = 1.0;
  prepare(cfg);
  EXPECT_NEAR(suggest_dt(initial_state(cfg), cfg), 0.5 * 2.8 / 32.0, 1e-15);
}

TEST(SuggestDt, ImexPureHeatIsCapped) {
  auto cfg = heat_config(16, 100.0, 1.0);
  cfg.dt = 0.75;
  EXPECT_DOUBLE_EQ(suggest_dt(initial_state(cfg), cfg), 0.75);
}

TEST(SuggestDt, Rk4StepIsStableOverManySteps) {
  auto cfg = heat_config(16, 100.0, 1.0);
  cfg.integrator = Integrator::rk4;
  cfg.dt = 10.0;
  cfg.initial_modes = {{{7, 0, 0, 0}, 1.0, 0.0}, {{7, 7, 7, 7}, 1.0, 0.0}};
  prepare(cfg);
  FlowState s = initial_state(cfg);
  const double dt = suggest_dt(s, cfg);
  for (int i = 0; i < 200; ++i) s = step_rk4(s, cfg, dt);
  EXPECT_LT(sup_abs(exp(s.u) - cfg.M), 1e-6);
}

TEST(Conservation, InitialAndHeatLimit) {
  auto cfg = heat_config(8, 100.0, 0.5);
  FlowState s = initial_state(cfg);
  EXPECT_LT(conservation_error(s, cfg), 1e-15);
  cfg.integrator = Integrator::rk4;
  for (int i = 0; i < 1000; ++i) s = step_rk4(s, cfg, 1e-3);
  EXPECT_NEAR(s.t, 1.0, 1e-12);
  EXPECT_LE(conservation_error(s, cfg), 1e-12);
}

TEST(Conservation, FullFlowOverUnitTime) {
  std::mt19937 rng(113);
  for (double a : {1.0, -1.0}) {
    auto cfg = random_config(rng, a);
    cfg.M = 1000.0;
    prepare(cfg);
    FlowState s = initial_state(cfg);
    for (int i = 0; i < 10; ++i) s = step_imex(s, cfg, 0.1);
    EXPECT_LE(conservation_error(s, cfg), 1e-9);
  }
}

TEST(Run, ImmediateConvergenceWithoutData) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.M = 10.0;
  prepare(cfg);
  const auto r = run(cfg);
  EXPECT_EQ(r.reason, ExitReason::converged);
  EXPECT_EQ(r.final_state.step_count, 0);
  ASSERT_TRUE(r.certificate.has_value());
  EXPECT_LT(r.certificate->sup_density, 1e-15);
}

TEST(Run, HeatLimitConvergesToLogM) {
  auto cfg = heat_config(8, 100.0, 1.0);
  cfg.dt = 4.0;
  cfg.t_max = 1000.0;
  const auto r = run(cfg);
  EXPECT_EQ(r.reason, ExitReason::converged) << r.message;
  EXPECT_LT(sup_abs(r.final_state.u - std::log(cfg.M)), 1e-10);
  EXPECT_LE(conservation_error(r.final_state, cfg), 1e-10);
}

TEST(Run, BlowUpIsReportedWithLastValidState) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.M = 1e-3;
  cfg.alpha_prime = -1.0;
  cfg.mu_modes = {{{1, 0, 0, 0}, 5.0, 0.0}};
  cfg.ellipticity_lower = -INFINITY;
  cfg.ellipticity_upper = INFINITY;
  cfg.t_max = 50.0;
  prepare(cfg);
  const auto r = run(cfg);
  EXPECT_TRUE(r.reason == ExitReason::blow_up || r.reason == ExitReason::ellipticity_loss) << to_string(r.reason);
  EXPECT_TRUE(all_finite(r.final_state.u));
}

TEST(Run, SmallMLosesEllipticity) {
  FlowConfig cfg;
  cfg.grid = build_grid(8);
  cfg.M = 1.0;
  cfg.alpha_prime = 1.0;
  cfg.rho_modes = {{1, 1, {0, 0, 0, 0}, 3.0, 0.0}};
  prepare(cfg);
  const auto r = run(cfg);
  EXPECT_EQ(r.reason, ExitReason::ellipticity_loss);
  ASSERT_FALSE(r.records.empty());
}
