#pragma once

// Cross-M scaling sweeps. The estimates being probed are one-sided:
//   1/(C1 M) <= e^{-u} <= C2/M,  |T|^2 <= C3/M,  |a' Ric| <= C5/M^{1/2}.
// A sweep measures the sup over each run, fits power laws in M, and checks the
// bounds with constants fitted from the data.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <vector>

#include "fuyau/run.hpp"

namespace fuyau {

struct SweepRun {
  double M = 0.0;
  ExitReason reason = ExitReason::t_max_reached;
  std::optional<DiagnosticsRecord> final_record;
  double max_T2 = 0.0;         ///< sup over the run of sup|T|^2
  double max_alpha_ric = 0.0;  ///< sup over the run of sup|a' Ric|
  double max_e_u_over_M = 0.0;
  double max_M_e_minus_u = 0.0;
  double min_lambda_F = std::numeric_limits<double>::infinity();
  double max_lambda_F = 0.0;
  std::optional<DecayFit> decay;
  double elliptic_residual = std::numeric_limits<double>::quiet_NaN();

  bool converged() const { return reason == ExitReason::converged; }
};

struct PowerFit {
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double r_squared = 0.0;
  bool conclusive = false;  ///< enough points and R^2 >= 0.9
};

/// Bound confirmation for measured(M) <= C M^{rate}: constants c(M) = measured M^{-rate};
/// the reference constant is c at the smallest converged M, and the bound is
/// stable when no larger M needs more than `band` times that constant.
struct BoundCheck {
  double rate = 0.0;
  std::vector<double> constants;
  double reference = 0.0;
  double growth = 0.0;  ///< max_M c(M) / reference
  bool stable = false;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  PowerFit torsion_fit;  ///< log sup|T|^2 against log M
  PowerFit ricci_fit;    ///< log sup|a' Ric| against log M
  BoundCheck torsion_bound;
  BoundCheck ricci_bound;
  double c0_constant = 0.0;  ///< one c with sup e^u/M in [1/c, c] and M sup e^{-u} <= c
  std::optional<double> empirical_M0;
  bool conclusive = false;
};

inline constexpr double kSweepBand = 4.0;
inline constexpr double kMinFitRSquared = 0.9;

inline SweepRun summarize_run(double M, const RunResult& r) {
  SweepRun s;
  s.M = M;
  s.reason = r.reason;
  if (!r.records.empty()) s.final_record = r.records.back();
  for (const auto& rec : r.records) {
    s.max_T2 = std::max(s.max_T2, rec.geometry.sup_T2);
    s.max_alpha_ric = std::max(s.max_alpha_ric, rec.geometry.sup_alpha_ric);
    s.max_e_u_over_M = std::max(s.max_e_u_over_M, rec.geometry.sup_e_u / M);
    s.max_M_e_minus_u = std::max(s.max_M_e_minus_u, M / rec.geometry.inf_e_u);
    s.min_lambda_F = std::min(s.min_lambda_F, rec.geometry.lambda_min_F);
    s.max_lambda_F = std::max(s.max_lambda_F, rec.geometry.lambda_max_F);
  }
  if (r.certificate) s.elliptic_residual = r.certificate->sup_density;
  try {
    s.decay = fit_decay_rate(r.records);
  } catch (const std::invalid_argument&) {
  }
  return s;
}

inline PowerFit fit_power_law(const std::vector<double>& Ms, const std::vector<double>& values) {
  PowerFit f;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    if (values[i] > 0.0) {
      xs.push_back(std::log(Ms[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 2) return f;
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
  f.exponent = sxy / sxx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.conclusive = xs.size() >= 2 && f.r_squared >= kMinFitRSquared;
  return f;
}

inline BoundCheck check_bound(const std::vector<double>& Ms, const std::vector<double>& values,
                              double rate) {
  BoundCheck b;
  b.rate = rate;
  for (std::size_t i = 0; i < Ms.size(); ++i) b.constants.push_back(values[i] * std::pow(Ms[i], -rate));
  if (b.constants.empty()) return b;
  b.reference = b.constants.front();
  const double worst = *std::max_element(b.constants.begin(), b.constants.end());
  b.growth = b.reference > 0.0 ? worst / b.reference : (worst == 0.0 ? 1.0 : INFINITY);
  b.stable = b.growth <= kSweepBand;
  return b;
}

/// Runs base with each M (ascending) and analyses the converged runs.
/// Runs execute concurrently when parallel is set.
inline SweepResult m_sweep(const FlowConfig& base, std::vector<double> Ms, bool parallel = false) {
  if (Ms.size() < 3) throw std::invalid_argument("a sweep needs at least 3 values of M");
  std::sort(Ms.begin(), Ms.end());

  auto one = [&base](double M) {
    FlowConfig cfg = base;
    cfg.M = M;
    return summarize_run(M, run(cfg));
  };

  SweepResult out;
  if (parallel) {
    std::vector<std::future<SweepRun>> futures;
    for (double M : Ms) futures.push_back(std::async(std::launch::async, one, M));
    for (auto& f : futures) out.runs.push_back(f.get());
  } else {
    for (double M : Ms) out.runs.push_back(one(M));
  }

  std::vector<double> cM, cT, cR;
  for (const auto& r : out.runs) {
    if (!r.converged()) continue;
    if (!out.empirical_M0) out.empirical_M0 = r.M;
    cM.push_back(r.M);
    cT.push_back(r.max_T2);
    cR.push_back(r.max_alpha_ric);
    out.c0_constant = std::max({out.c0_constant, r.max_e_u_over_M, r.max_M_e_minus_u});
    if (r.final_record) {
      const double lo = r.final_record->geometry.sup_e_u / r.M;
      if (lo > 0.0) out.c0_constant = std::max(out.c0_constant, 1.0 / lo);
    }
  }
  // Empirical M0: smallest M above which every run converged.
  for (auto it = out.runs.rbegin(); it != out.runs.rend(); ++it) {
    if (!it->converged()) break;
    out.empirical_M0 = it->M;
  }
  if (cM.size() < 2) return out;

  out.torsion_fit = fit_power_law(cM, cT);
  out.ricci_fit = fit_power_law(cM, cR);
  out.torsion_bound = check_bound(cM, cT, -1.0);
  out.ricci_bound = check_bound(cM, cR, -0.5);
  out.conclusive = true;
  return out;
}

}  // namespace fuyau
