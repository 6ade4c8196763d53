#pragma once

// The flow driver: step, monitor, record, and decide when to stop.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fuyau/diagnostics.hpp"

namespace fuyau {

enum class ExitReason { converged, t_max_reached, blow_up, ellipticity_loss };

inline const char* to_string(ExitReason r) {
  switch (r) {
    case ExitReason::converged: return "converged";
    case ExitReason::t_max_reached: return "t_max reached";
    case ExitReason::blow_up: return "blow-up";
    case ExitReason::ellipticity_loss: return "ellipticity loss";
  }
  return "unknown";
}

/// Overflow guard for e^u.
inline constexpr double kMaxAbsU = 700.0;
/// A step whose change in mean(e^u) exceeds this fraction of M is retried at dt/2.
inline constexpr double kStepDriftTolerance = 1e-11;

struct RunResult {
  FlowState final_state;  ///< last valid state
  std::vector<DiagnosticsRecord> records;
  ExitReason reason = ExitReason::t_max_reached;
  std::string message;
  std::optional<EllipticResidual> certificate;
  double sup_rhs = 0.0;
  bool outside_theorem_hypotheses = false;
};

struct RunHooks {
  /// Called with every record as soon as it is taken.
  std::function<void(const DiagnosticsRecord&, const FlowState&)> on_record;
};

namespace detail {

struct AdmissibilityCheck {
  bool ok = true;
  std::string why;
};

inline AdmissibilityCheck check_admissible(const FlowState& s) {
  double max_abs = 0.0;
  for (double v : s.u) {
    if (!std::isfinite(v)) return {false, "non-finite u"};
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (max_abs > kMaxAbsU) return {false, "sup|u| exceeded the overflow guard"};
  return {};
}

inline AdmissibilityCheck check_elliptic(const FlowState& s, const HermitianField& h,
                                         const FlowConfig& cfg) {
  const auto b = ellipticity_bounds(F_hat(s.u, h, cfg.rho_parts.rho_tilde, cfg.alpha_prime));
  if (b.lambda_min < cfg.ellipticity_lower || b.lambda_max > cfg.ellipticity_upper) {
    return {false, "eigenvalues of F_hat left [" + detail::format_number(cfg.ellipticity_lower) + ", " +
                       detail::format_number(cfg.ellipticity_upper) + "]: (" +
                       detail::format_number(b.lambda_min) + ", " + detail::format_number(b.lambda_max) + ")"};
  }
  const double wp = min_eigenvalue(omega_prime(s.u, h, cfg.rho, cfg.alpha_prime));
  if (!(wp > 0.0)) return {false, "omega' lost positivity (min eigenvalue " + detail::format_number(wp) + ")"};
  return {};
}

}  // namespace detail

inline DiagnosticsRecord make_record(const FlowState& s, const FlowConfig& cfg,
                                     const RealField& rhs_value) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.dt = s.dt_current;
  r.step = s.step_count;
  r.conservation_error = conservation_error(s, cfg);
  r.geometry = geometry_report(s.u, cfg);
  r.J = j_functional(s.u, rhs_value, cfg.M).J;
  r.sup_rhs = sup_abs(rhs_value);
  r.identities = identity_checks(s.u, cfg);
  return r;
}

/// Runs the flow from `start` (or from u_0 = log M) until convergence, t_max,
/// blow-up or loss of ellipticity.
inline RunResult run(const FlowConfig& cfg, std::optional<FlowState> start = std::nullopt,
                     const RunHooks& hooks = {}) {
  RunResult result;
  result.outside_theorem_hypotheses = cfg.nonconstant_start && !cfg.initial_modes.empty();
  FlowState state = start ? *start : initial_state(cfg);
  double dt = state.dt_current > 0.0 ? state.dt_current : cfg.dt;
  long steps_since_record = 0;

  auto record = [&](const RealField& r) {
    result.records.push_back(make_record(state, cfg, r));
    if (hooks.on_record) hooks.on_record(result.records.back(), state);
    steps_since_record = 0;
  };
  auto finish = [&](ExitReason reason, std::string message) {
    result.final_state = state;
    result.reason = reason;
    result.message = std::move(message);
    return result;
  };

  try {
    while (true) {
      const auto u_hat = to_spectral(state.u);
      const HermitianField h = complex_hessian(u_hat);
      const RealField r = rhs(state.u, u_hat, h, cfg);
      if (auto ell = detail::check_elliptic(state, h, cfg); !ell.ok) {
        record(r);
        return finish(ExitReason::ellipticity_loss, ell.why);
      }
      result.sup_rhs = sup_abs(r);
      const bool due = state.step_count == 0 || steps_since_record >= cfg.record_every;

      if (result.sup_rhs < cfg.eps_rhs) {
        const auto cert = elliptic_residual(state.u, cfg);
        if (cert.sup_density <= cfg.eps_residual && cert.normalization_error <= cfg.conservation_tol) {
          record(r);
          result.records.back().elliptic_residual = cert.sup_density;
          result.certificate = cert;
          return finish(ExitReason::converged, "sup|rhs| below tolerance and residual certified");
        }
      }
      if (due) record(r);
      if (state.t >= cfg.t_max - 1e-12 || state.step_count >= cfg.max_steps) {
        if (!due) record(r);
        return finish(ExitReason::t_max_reached, "stopped at t = " + detail::format_number(state.t));
      }

      if (cfg.dt_policy == DtPolicy::adaptive) dt = std::min(suggest_dt(state, cfg), dt * 2.0);
      dt = std::min(dt, cfg.t_max - state.t);

      const double mass_before = mean(exp(state.u));
      FlowState next;
      for (int attempt = 0;; ++attempt) {
        next = step(state, cfg, dt);
        const double drift = std::abs(mean(exp(next.u)) - mass_before);
        if (drift <= kStepDriftTolerance * cfg.M) break;
        if (attempt >= 20) throw BlowUpError("conservation drift persists after repeated dt halving");
        dt *= 0.5;
      }
      if (auto adm = detail::check_admissible(next); !adm.ok) {
        return finish(ExitReason::blow_up, adm.why);
      }
      state = std::move(next);
      ++steps_since_record;
    }
  } catch (const BlowUpError& e) {
    return finish(ExitReason::blow_up, e.what());
  } catch (const ConservationFault& e) {
    return finish(ExitReason::blow_up, e.what());
  }
}

}  // namespace fuyau
