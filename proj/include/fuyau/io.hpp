#pragma once

// Config files (YAML), snapshots and diagnostic record streams.
//
// Snapshot layout:
//   FUYAU-SNAPSHOT\n
//   <one-line JSON header>\n
//   END_HEADER\n
//   n^4 little-endian IEEE-754 doubles, lexicographic (x1, y1, x2, y2) order
// The header carries format_version, n, t, M, alpha_prime, step_count,
// dt_current, value_count and the CRC-32 of the data block.

#include <yaml-cpp/yaml.h>
#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuyau/run.hpp"

namespace fuyau {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// config

namespace detail {

inline std::string where(const std::string& path, const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return path;
  return path + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ConfigError(where(path_, node) + ": " + message);
  }

  void require_map(const YAML::Node& node, const std::string& name) const {
    if (!node.IsMap()) fail(node, "'" + name + "' must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& section,
                  std::initializer_list<const char*> allowed) const {
    std::set<std::string> seen;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!seen.insert(key).second) {
        fail(kv.first, "duplicate key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
      }
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) {
        fail(kv.first, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
      }
    }
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& name) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name + "' has the wrong type");
    }
  }

  template <class T>
  void optional(const YAML::Node& section, const char* key, T& out) const {
    if (const auto v = section[key]) out = get<T>(v, key);
  }

  template <class T>
  T required(const YAML::Node& section, const YAML::Node& parent, const char* key,
             const std::string& section_name) const {
    if (!section || !section[key]) {
      fail(section ? section : parent, "missing required key '" + section_name + "." + key + "'");
    }
    return get<T>(section[key], key);
  }

  Wavevector wavevector(const YAML::Node& node) const {
    if (!node.IsSequence() || node.size() != 4) fail(node, "'k' must be a list of 4 integers");
    Wavevector k{};
    for (std::size_t i = 0; i < 4; ++i) k[i] = get<int>(node[i], "k");
    return k;
  }

  std::vector<RhoMode> rho_modes(const YAML::Node& list) const {
    if (!list.IsSequence()) fail(list, "'rho_modes' must be a list");
    std::vector<RhoMode> out;
    for (const auto& e : list) {
      require_map(e, "rho_modes entry");
      check_keys(e, "data.rho_modes", {"p", "q", "k", "re", "im"});
      RhoMode m;
      if (!e["p"] || !e["q"] || !e["k"]) fail(e, "rho mode entries need p, q and k");
      m.p = get<int>(e["p"], "p");
      m.q = get<int>(e["q"], "q");
      if ((m.p != 1 && m.p != 2) || (m.q != 1 && m.q != 2)) fail(e, "p and q must be 1 or 2");
      m.k = wavevector(e["k"]);
      optional(e, "re", m.re);
      optional(e, "im", m.im);
      out.push_back(m);
    }
    return out;
  }

  std::vector<RealMode> real_modes(const YAML::Node& list, const std::string& name) const {
    if (!list.IsSequence()) fail(list, "'" + name + "' must be a list");
    std::vector<RealMode> out;
    for (const auto& e : list) {
      require_map(e, name + " entry");
      check_keys(e, name, {"k", "amplitude", "phase"});
      if (!e["k"] || !e["amplitude"]) fail(e, name + " entries need k and amplitude");
      RealMode m;
      m.k = wavevector(e["k"]);
      m.amplitude = get<double>(e["amplitude"], "amplitude");
      optional(e, "phase", m.phase);
      out.push_back(m);
    }
    return out;
  }

 private:
  std::string path_;
};

inline Integrator parse_integrator(const std::string& s, const ConfigReader& r, const YAML::Node& n) {
  if (s == "rk4") return Integrator::rk4;
  if (s == "imex") return Integrator::imex;
  r.fail(n, "integrator must be 'rk4' or 'imex', got '" + s + "'");
}

inline DtPolicy parse_dt_policy(const std::string& s, const ConfigReader& r, const YAML::Node& n) {
  if (s == "fixed") return DtPolicy::fixed;
  if (s == "adaptive") return DtPolicy::adaptive;
  r.fail(n, "dt_policy must be 'fixed' or 'adaptive', got '" + s + "'");
}

}  // namespace detail

/// Parses a YAML document with sections grid, flow, data, initial, tolerances
/// and output. Only grid.n, flow.alpha_prime and flow.M are required.
inline FlowConfig parse_config_text(const std::string& text, const std::string& path = "<config>") {
  detail::ConfigReader r(path);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(path + ": top level must be a mapping");
  r.check_keys(root, "", {"grid", "flow", "data", "initial", "tolerances", "output"});
  for (const auto& kv : root) r.require_map(kv.second, kv.first.as<std::string>());

  FlowConfig cfg;
  const auto grid = root["grid"];
  if (grid) r.check_keys(grid, "grid", {"n", "dealias"});
  const auto n_node = grid ? grid["n"] : YAML::Node();
  const int n = r.required<int>(grid, root, "n", "grid");
  bool dealias = false;
  if (grid) r.optional(grid, "dealias", dealias);
  try {
    cfg.grid = build_grid(n, dealias);
  } catch (const std::invalid_argument& e) {
    r.fail(n_node, e.what());
  }

  const auto flow = root["flow"];
  if (flow) {
    r.check_keys(flow, "flow", {"alpha_prime", "M", "t_max", "integrator", "dt", "dt_policy",
                                "safety", "max_steps"});
  }
  cfg.alpha_prime = r.required<double>(flow, root, "alpha_prime", "flow");
  cfg.M = r.required<double>(flow, root, "M", "flow");
  if (!(cfg.M > 0.0)) r.fail(flow["M"], "M must be positive");
  r.optional(flow, "t_max", cfg.t_max);
  r.optional(flow, "dt", cfg.dt);
  r.optional(flow, "safety", cfg.safety);
  r.optional(flow, "max_steps", cfg.max_steps);
  if (const auto v = flow["integrator"]) cfg.integrator = detail::parse_integrator(r.get<std::string>(v, "integrator"), r, v);
  if (const auto v = flow["dt_policy"]) cfg.dt_policy = detail::parse_dt_policy(r.get<std::string>(v, "dt_policy"), r, v);
  if (!(cfg.dt > 0.0)) r.fail(flow["dt"], "dt must be positive");
  if (!(cfg.safety > 0.0)) r.fail(flow["safety"], "safety must be positive");
  if (!(cfg.t_max >= 0.0)) r.fail(flow["t_max"], "t_max must be non-negative");

  if (const auto data = root["data"]) {
    r.check_keys(data, "data", {"rho_modes", "mu_modes"});
    if (const auto v = data["rho_modes"]) cfg.rho_modes = r.rho_modes(v);
    if (const auto v = data["mu_modes"]) cfg.mu_modes = r.real_modes(v, "mu_modes");
  }

  if (const auto init = root["initial"]) {
    r.check_keys(init, "initial", {"nonconstant", "exp_u_modes"});
    r.optional(init, "nonconstant", cfg.nonconstant_start);
    if (const auto v = init["exp_u_modes"]) {
      cfg.initial_modes = r.real_modes(v, "exp_u_modes");
      if (!cfg.nonconstant_start && !cfg.initial_modes.empty()) {
        r.fail(v, "exp_u_modes requires initial.nonconstant: true");
      }
    }
  }

  if (const auto tol = root["tolerances"]) {
    r.check_keys(tol, "tolerances", {"eps_rhs", "eps_residual", "conservation_tol",
                                     "ellipticity_lower", "ellipticity_upper"});
    r.optional(tol, "eps_rhs", cfg.eps_rhs);
    r.optional(tol, "eps_residual", cfg.eps_residual);
    r.optional(tol, "conservation_tol", cfg.conservation_tol);
    r.optional(tol, "ellipticity_lower", cfg.ellipticity_lower);
    r.optional(tol, "ellipticity_upper", cfg.ellipticity_upper);
  }

  if (const auto out = root["output"]) {
    r.check_keys(out, "output", {"directory", "record_every"});
    r.optional(out, "directory", cfg.output_directory);
    r.optional(out, "record_every", cfg.record_every);
    if (cfg.record_every < 1) r.fail(out["record_every"], "record_every must be at least 1");
  }

  prepare(cfg);
  return cfg;
}

inline FlowConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// snapshots

inline constexpr int kSnapshotVersion = 1;
inline constexpr const char* kSnapshotMagic = "FUYAU-SNAPSHOT";
inline constexpr const char* kSnapshotHeaderEnd = "END_HEADER";

struct SnapshotHeader {
  int format_version = kSnapshotVersion;
  int n = 0;
  double t = 0.0;
  double M = 0.0;
  double alpha_prime = 0.0;
  long step_count = 0;
  double dt_current = 0.0;
  std::uint64_t value_count = 0;
  std::uint32_t checksum = 0;
};

namespace detail {

inline std::vector<unsigned char> little_endian_bytes(const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

inline std::vector<double> doubles_from_little_endian(const std::vector<unsigned char>& bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

inline std::uint32_t crc32_of(const std::vector<unsigned char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline void write_snapshot(const FlowState& state, const FlowConfig& cfg,
                           const std::filesystem::path& path) {
  const auto bytes = detail::little_endian_bytes(state.u.values);
  nlohmann::ordered_json h;
  h["format_version"] = kSnapshotVersion;
  h["n"] = state.u.grid.n;
  h["t"] = state.t;
  h["M"] = cfg.M;
  h["alpha_prime"] = cfg.alpha_prime;
  h["step_count"] = state.step_count;
  h["dt_current"] = state.dt_current;
  h["value_count"] = state.u.size();
  h["checksum"] = detail::crc32_of(bytes);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw SnapshotError(tmp.string() + ": cannot open for writing");
    out << kSnapshotMagic << '\n' << h.dump() << '\n' << kSnapshotHeaderEnd << '\n';
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw SnapshotError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

struct Snapshot {
  SnapshotHeader header;
  FlowState state;
};

inline Snapshot read_snapshot(const std::filesystem::path& path, bool dealias = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError(path.string() + ": cannot open snapshot");
  std::string magic, header_line, end;
  std::getline(in, magic);
  if (magic != kSnapshotMagic) throw SnapshotError(path.string() + ": not a snapshot file");
  std::getline(in, header_line);
  std::getline(in, end);
  if (end != kSnapshotHeaderEnd) throw SnapshotError(path.string() + ": malformed header");

  Snapshot s;
  try {
    const auto h = nlohmann::json::parse(header_line);
    s.header.format_version = h.at("format_version").get<int>();
    if (s.header.format_version != kSnapshotVersion) {
      throw SnapshotError(path.string() + ": unsupported format version " +
                          std::to_string(s.header.format_version) + " (expected " +
                          std::to_string(kSnapshotVersion) + ")");
    }
    s.header.n = h.at("n").get<int>();
    s.header.t = h.at("t").get<double>();
    s.header.M = h.at("M").get<double>();
    s.header.alpha_prime = h.at("alpha_prime").get<double>();
    s.header.step_count = h.at("step_count").get<long>();
    s.header.dt_current = h.at("dt_current").get<double>();
    s.header.value_count = h.at("value_count").get<std::uint64_t>();
    s.header.checksum = h.at("checksum").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError(path.string() + ": bad header: " + e.what());
  }

  const GridSpec g = build_grid(s.header.n, dealias);
  if (s.header.value_count != g.size()) throw SnapshotError(path.string() + ": value_count does not match n");
  std::vector<unsigned char> bytes(g.size() * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  in.peek();
  const bool trailing = !in.eof();
  if (trailing || bytes.size() != g.size() * 8 || detail::crc32_of(bytes) != s.header.checksum) {
    throw SnapshotError(path.string() + ": checksum mismatch (data block is " +
                        std::to_string(bytes.size()) + (trailing ? "+" : "") + " bytes, expected " +
                        std::to_string(g.size() * 8) + ")");
  }
  s.state.u = RealField(g, 0.0);
  s.state.u.values = detail::doubles_from_little_endian(bytes);
  s.state.t = s.header.t;
  s.state.step_count = s.header.step_count;
  s.state.dt_current = s.header.dt_current;
  return s;
}

// ---------------------------------------------------------------------------
// records

inline nlohmann::ordered_json to_json(const DiagnosticsRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["dt"] = r.dt;
  j["step"] = r.step;
  j["conservation_error"] = r.conservation_error;
  j["J"] = r.J;
  j["sup_rhs"] = r.sup_rhs;
  j["elliptic_residual"] = r.elliptic_residual ? nlohmann::ordered_json(*r.elliptic_residual) : nlohmann::ordered_json();
  const auto& g = r.geometry;
  j["geometry"] = {{"sup_e_u", g.sup_e_u},
                   {"inf_e_u", g.inf_e_u},
                   {"sup_T2", g.sup_T2},
                   {"sup_alpha_ric", g.sup_alpha_ric},
                   {"lambda_min_F", g.lambda_min_F},
                   {"lambda_max_F", g.lambda_max_F},
                   {"omega_prime_min_eig", g.omega_prime_min_eig},
                   {"sup_grad_T", g.sup_grad_T},
                   {"sup_grad_ric", g.sup_grad_ric}};
  j["identities"] = {{"torsion", r.identities.torsion},
                     {"curvature", r.identities.curvature},
                     {"torsion_form", r.identities.torsion_form},
                     {"stokes", r.identities.stokes}};
  return j;
}

inline constexpr const char* kRecordCsvHeader =
    "t,J,conservation_error,sup_T2,sup_alpha_ric,lambda_min_F,sup_e_u,inf_e_u,sup_rhs";

inline std::string csv_row(const DiagnosticsRecord& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.t << ',' << r.J << ',' << r.conservation_error << ','
     << r.geometry.sup_T2 << ',' << r.geometry.sup_alpha_ric << ',' << r.geometry.lambda_min_F << ','
     << r.geometry.sup_e_u << ',' << r.geometry.inf_e_u << ',' << r.sup_rhs;
  return os.str();
}

/// Streams records to records.jsonl and records.csv as they arrive.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    jsonl_.open(directory / "records.jsonl");
    csv_.open(directory / "records.csv");
    if (!jsonl_ || !csv_) throw std::runtime_error(directory.string() + ": cannot create record files");
    csv_ << kRecordCsvHeader << '\n';
    csv_.flush();
  }

  void write(const DiagnosticsRecord& r) {
    jsonl_ << to_json(r).dump() << '\n';
    csv_ << csv_row(r) << '\n';
    jsonl_.flush();
    csv_.flush();
    if (!jsonl_ || !csv_) throw std::runtime_error("writing records failed");
  }

 private:
  std::ofstream jsonl_;
  std::ofstream csv_;
};

inline void emit_records(const std::vector<DiagnosticsRecord>& series,
                         const std::filesystem::path& directory) {
  RecordWriter w(directory);
  for (const auto& r : series) w.write(r);
}

}  // namespace fuyau
