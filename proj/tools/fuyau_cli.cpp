// fuyau: run, verify and sweep the Fu-Yau flow on the flat 2-torus.
//
//   fuyau run <config> [--output DIR] [--resume SNAPSHOT] [--snapshot-every N]
//   fuyau verify <snapshot> <config>
//   fuyau sweep <config> --M a,b,c [--parallel]
//   fuyau selftest
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 blow-up,
// 4 ellipticity loss, 5 verify failed, 6 t_max reached without convergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fuyau/fuyau.hpp"

namespace fs = std::filesystem;
using namespace fuyau;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBlowUp = 3,
  kEllipticityLoss = 4,
  kVerifyFailed = 5,
  kTimeLimit = 6,
};

int exit_code_for(ExitReason r) {
  switch (r) {
    case ExitReason::converged: return kOk;
    case ExitReason::t_max_reached: return kTimeLimit;
    case ExitReason::blow_up: return kBlowUp;
    case ExitReason::ellipticity_loss: return kEllipticityLoss;
  }
  return kFailure;
}

void print_geometry(std::ostream& os, const GeometryReport& g) {
  os << "  sup e^u            " << g.sup_e_u << '\n'
     << "  inf e^u            " << g.inf_e_u << '\n'
     << "  sup |T|^2          " << g.sup_T2 << '\n'
     << "  sup |a' Ric|       " << g.sup_alpha_ric << '\n'
     << "  lambda(F_hat)      [" << g.lambda_min_F << ", " << g.lambda_max_F << "]\n"
     << "  min eig omega'     " << g.omega_prime_min_eig << '\n'
     << "  sup |nabla T|      " << g.sup_grad_T << '\n'
     << "  sup |nabla Ric|    " << g.sup_grad_ric << '\n';
}

void print_config_summary(const FlowConfig& cfg) {
  std::cout << "grid n=" << cfg.grid.n << (cfg.grid.dealias ? " (dealiased)" : "")
            << "  alpha'=" << cfg.alpha_prime << "  M=" << cfg.M
            << "  integrator=" << to_string(cfg.integrator) << "  dt=" << cfg.dt << " ("
            << to_string(cfg.dt_policy) << ")  t_max=" << cfg.t_max << '\n';
  if (cfg.nonconstant_start && !cfg.initial_modes.empty()) {
    std::cout << "note: non-constant initial data; outside theorem hypotheses\n";
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& output_override,
            const std::string& resume_path, long snapshot_every) {
  FlowConfig cfg = parse_config(config_path);
  if (!output_override.empty()) cfg.output_directory = output_override;
  print_config_summary(cfg);
  const fs::path dir = cfg.output_directory;

  std::optional<FlowState> start;
  if (!resume_path.empty()) {
    auto snap = read_snapshot(resume_path, cfg.grid.dealias);
    if (snap.header.n != cfg.grid.n) throw ConfigError("snapshot grid n does not match the config");
    if (snap.header.M != cfg.M || snap.header.alpha_prime != cfg.alpha_prime) {
      std::cerr << "warning: snapshot M/alpha' differ from the config; the config wins\n";
    }
    start = std::move(snap.state);
    std::cout << "resuming at t=" << start->t << " step " << start->step_count << '\n';
  }

  RecordWriter writer(dir);
  RunHooks hooks;
  hooks.on_record = [&](const DiagnosticsRecord& r, const FlowState& s) {
    writer.write(r);
    if (snapshot_every > 0 && s.step_count > 0 && s.step_count % snapshot_every == 0) {
      write_snapshot(s, cfg, dir / "latest.snap");
    }
    std::cout << std::setprecision(6) << "t=" << r.t << "  dt=" << r.dt << "  sup|rhs|=" << r.sup_rhs
              << "  J=" << r.J << "  cons=" << r.conservation_error << '\n';
  };
  const RunResult result = run(cfg, start, hooks);

  const fs::path final_path = dir / (result.reason == ExitReason::converged ? "final.snap" : "last_valid.snap");
  write_snapshot(result.final_state, cfg, final_path);

  nlohmann::ordered_json summary;
  summary["exit_reason"] = to_string(result.reason);
  summary["message"] = result.message;
  summary["t"] = result.final_state.t;
  summary["steps"] = result.final_state.step_count;
  summary["sup_rhs"] = result.sup_rhs;
  summary["outside_theorem_hypotheses"] = result.outside_theorem_hypotheses;
  if (result.certificate) {
    summary["elliptic_residual"] = result.certificate->sup_density;
    summary["normalization_error"] = result.certificate->normalization_error;
  }
  try {
    const auto fit = fit_decay_rate(result.records);
    summary["eta"] = std::isfinite(fit.eta) ? nlohmann::ordered_json(fit.eta) : nlohmann::ordered_json("inf");
    summary["eta_r_squared"] = fit.r_squared;
  } catch (const std::invalid_argument&) {
    summary["eta"] = nullptr;
  }
  summary["snapshot"] = final_path.string();
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';

  std::cout << "exit: " << to_string(result.reason) << " (" << result.message << ")\n";
  if (result.certificate) {
    std::cout << "elliptic residual " << result.certificate->sup_density << ", normalization error "
              << result.certificate->normalization_error << '\n';
  }
  std::cout << "snapshot: " << final_path.string() << '\n';
  return exit_code_for(result.reason);
}

int cmd_verify(const std::string& snapshot_path, const std::string& config_path) {
  const FlowConfig cfg = parse_config(config_path);
  const auto snap = read_snapshot(snapshot_path, cfg.grid.dealias);
  if (snap.header.n != cfg.grid.n) throw ConfigError("snapshot grid n does not match the config");
  const auto& u = snap.state.u;

  const auto cert = elliptic_residual(u, cfg);
  const double cons = conservation_error(snap.state, cfg);
  const auto geo = geometry_report(u, cfg);
  const bool ok = cert.sup_density <= cfg.eps_residual && cons <= cfg.conservation_tol;

  std::cout << std::setprecision(6) << "snapshot t=" << snap.state.t << " step " << snap.state.step_count << '\n'
            << "  elliptic residual  " << cert.sup_density << "  (tolerance " << cfg.eps_residual << ")\n"
            << "  conservation error " << cons << "  (tolerance " << cfg.conservation_tol << ")\n";
  print_geometry(std::cout, geo);
  std::cout << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kVerifyFailed;
}

int cmd_sweep(const std::string& config_path, const std::string& m_list, bool parallel,
              const std::string& output_override) {
  FlowConfig base = parse_config(config_path);
  if (!output_override.empty()) base.output_directory = output_override;
  print_config_summary(base);
  const auto Ms = parse_list(m_list);
  const SweepResult s = m_sweep(base, Ms, parallel);

  nlohmann::ordered_json report;
  report["runs"] = nlohmann::ordered_json::array();
  std::cout << std::setprecision(6);
  for (const auto& r : s.runs) {
    std::cout << "M=" << r.M << "  " << to_string(r.reason) << "  max|T|^2=" << r.max_T2
              << "  max|a'Ric|=" << r.max_alpha_ric << "  max e^u/M=" << r.max_e_u_over_M
              << "  max M e^-u=" << r.max_M_e_minus_u << "  lambda(F)=[" << r.min_lambda_F << ", "
              << r.max_lambda_F << "]";
    if (r.decay) std::cout << "  eta=" << r.decay->eta << " (R^2 " << r.decay->r_squared << ")";
    std::cout << '\n';
    nlohmann::ordered_json j;
    j["M"] = r.M;
    j["exit_reason"] = to_string(r.reason);
    j["max_T2"] = r.max_T2;
    j["max_alpha_ric"] = r.max_alpha_ric;
    j["max_e_u_over_M"] = r.max_e_u_over_M;
    j["max_M_e_minus_u"] = r.max_M_e_minus_u;
    j["lambda_F"] = {r.min_lambda_F, r.max_lambda_F};
    if (r.decay) j["eta"] = {{"value", r.decay->eta}, {"r_squared", r.decay->r_squared}};
    if (std::isfinite(r.elliptic_residual)) j["elliptic_residual"] = r.elliptic_residual;
    report["runs"].push_back(j);
  }
  auto fit_json = [](const PowerFit& f) {
    return nlohmann::ordered_json{{"exponent", f.exponent}, {"r_squared", f.r_squared}, {"conclusive", f.conclusive}};
  };
  auto bound_json = [](const BoundCheck& b) {
    return nlohmann::ordered_json{{"rate", b.rate}, {"constants", b.constants}, {"growth", b.growth}, {"stable", b.stable}};
  };
  report["conclusive"] = s.conclusive;
  report["torsion_fit"] = fit_json(s.torsion_fit);
  report["ricci_fit"] = fit_json(s.ricci_fit);
  report["torsion_bound"] = bound_json(s.torsion_bound);
  report["ricci_bound"] = bound_json(s.ricci_bound);
  report["c0_constant"] = s.c0_constant;
  report["empirical_M0"] = s.empirical_M0 ? nlohmann::ordered_json(*s.empirical_M0) : nlohmann::ordered_json();

  fs::create_directories(base.output_directory);
  std::ofstream(fs::path(base.output_directory) / "sweep.json") << report.dump(2) << '\n';

  if (!s.conclusive) {
    std::cout << "sweep inconclusive: fewer than 2 converged runs\n";
    return kFailure;
  }
  std::cout << "|T|^2 ~ M^" << s.torsion_fit.exponent << " (R^2 " << s.torsion_fit.r_squared
            << (s.torsion_fit.conclusive ? "" : ", inconclusive") << ")\n"
            << "|a'Ric| ~ M^" << s.ricci_fit.exponent << " (R^2 " << s.ricci_fit.r_squared
            << (s.ricci_fit.conclusive ? "" : ", inconclusive") << ")\n"
            << "|T|^2 M growth " << s.torsion_bound.growth << ", |a'Ric| M^1/2 growth "
            << s.ricci_bound.growth << " (band " << kSweepBand << ")\n"
            << "C0 constant " << s.c0_constant << '\n';
  if (s.empirical_M0) std::cout << "empirical M0 " << *s.empirical_M0 << '\n';
  return s.torsion_bound.stable && s.ricci_bound.stable ? kOk : kFailure;
}

int cmd_selftest() {
  const fs::path scratch = fs::temp_directory_path();
  const auto results = run_selftest(scratch);
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed();
    std::cout << (r.passed() ? "PASS  " : "FAIL  ") << std::left << std::setw(48) << r.name
              << std::scientific << std::setprecision(2) << r.error << " <= " << r.tolerance
              << std::defaultfloat << '\n';
  }
  std::cout << (all ? "all oracles passed" : "oracle failures") << '\n';
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fu-Yau flow on the flat complex 2-torus"};
  app.require_subcommand(1);

  std::string config, snapshot, resume, output, m_list;
  long snapshot_every = 0;
  bool parallel = false;

  auto* run_cmd = app.add_subcommand("run", "evolve the flow from a config");
  run_cmd->add_option("config", config, "config file")->required();
  run_cmd->add_option("--output,-o", output, "output directory (overrides the config)");
  run_cmd->add_option("--resume", resume, "resume from a snapshot");
  run_cmd->add_option("--snapshot-every", snapshot_every, "write latest.snap every N steps");

  auto* verify_cmd = app.add_subcommand("verify", "certify a snapshot as a Fu-Yau solution");
  verify_cmd->add_option("snapshot", snapshot, "snapshot file")->required();
  verify_cmd->add_option("config", config, "config file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "run a config across several M");
  sweep_cmd->add_option("config", config, "config file")->required();
  sweep_cmd->add_option("--M", m_list, "comma-separated values of M")->required();
  sweep_cmd->add_flag("--parallel", parallel, "run the values of M concurrently");
  sweep_cmd->add_option("--output,-o", output, "output directory (overrides the config)");

  auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(config, output, resume, snapshot_every);
    if (*verify_cmd) return cmd_verify(snapshot, config);
    if (*sweep_cmd) return cmd_sweep(config, m_list, parallel, output);
    if (*selftest_cmd) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SnapshotError& e) {
    std::cerr << "snapshot error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
