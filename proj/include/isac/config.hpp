#pragma once

#include "isac/ao.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace isac {

using KeyValueMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

inline Scalar to_scalar(const KeyValueMap& kv, const std::string& key, Scalar fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const Scalar v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + it->second + "'");
  }
}

inline long to_long(const KeyValueMap& kv, const std::string& key, long fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + it->second + "'");
  }
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "nt", "ns", "ncp", "element_spacing", "grid_lo_deg", "grid_hi_deg", "grid_step_deg",
      "mainlobe_lo_deg", "mainlobe_hi_deg", "target_angle_deg", "p0", "epsilon", "eta",
      "lambda_g", "lambda_s", "delta_sl_rel", "gamma_u", "sigma2", "constellation",
      "psk_half_angle", "num_symbols", "channel_seed", "symbol_seed", "waveform_seed",
      "num_blocks", "ao_max_iters", "ao_min_iters", "ao_spread_tol", "consistency_slack",
      "filter_loading", "repair_tol", "repair_max_passes", "sca_max_iters", "sca_f_tol",
      "adpm_max_iters", "adpm_tol", "adpm_rho_init", "adpm_gamma", "adpm_rho_max"};
  return keys;
}

}  // namespace detail

/// Flat `key = value` text: one pair per line, '#' comments, blank lines
/// ignored.  Unknown keys are rejected so typos fail loudly.
inline KeyValueMap parse_config_text(const std::string& text) {
  KeyValueMap kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!detail::known_keys().count(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (kv.count(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
  }
  return kv;
}

inline KeyValueMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline Constellation constellation_from_name(const std::string& name, Scalar psk_half_angle) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  auto order_of = [&](std::size_t prefix_len) {
    try {
      return std::stoi(n.substr(prefix_len));
    } catch (const std::exception&) {
      throw ConfigError("config: bad constellation '" + name + "'");
    }
  };
  std::optional<Scalar> half =
      psk_half_angle > 0.0 ? std::optional<Scalar>(psk_half_angle) : std::nullopt;
  if (n == "bpsk") return Constellation::psk(2, half);
  if (n == "qpsk") return Constellation::psk(4, half);
  if (n.rfind("psk", 0) == 0) return Constellation::psk(order_of(3), half);
  if (n.rfind("qam", 0) == 0) return Constellation::qam(order_of(3));
  throw ConfigError("config: bad constellation '" + name + "'");
}

/// Scenario assembly: defaults are the desk scenario; any key overrides.
inline Scenario scenario_from_config(const KeyValueMap& kv) {
  Scenario sc = desk_scenario();
  sc.nt = detail::to_long(kv, "nt", sc.nt);
  sc.ns = detail::to_long(kv, "ns", sc.ns);
  sc.ncp = detail::to_long(kv, "ncp", sc.ncp);
  sc.element_spacing = detail::to_scalar(kv, "element_spacing", sc.element_spacing);
  const Scalar lo = detail::to_scalar(kv, "grid_lo_deg", -90.0);
  const Scalar hi = detail::to_scalar(kv, "grid_hi_deg", 90.0);
  const Scalar step = detail::to_scalar(kv, "grid_step_deg", 1.0);
  sc.angle_grid_deg = uniform_angle_grid(lo, hi, step);
  const Scalar ml_lo = detail::to_scalar(kv, "mainlobe_lo_deg", sc.mainlobe.front().lo_deg);
  const Scalar ml_hi = detail::to_scalar(kv, "mainlobe_hi_deg", sc.mainlobe.front().hi_deg);
  sc.mainlobe = {{ml_lo, ml_hi}};
  sc.target_angle_deg = detail::to_scalar(kv, "target_angle_deg", sc.target_angle_deg);
  sc.p0 = detail::to_scalar(kv, "p0", sc.p0);
  sc.epsilon = detail::to_scalar(kv, "epsilon", sc.epsilon);
  sc.eta = detail::to_scalar(kv, "eta", sc.eta);
  sc.lambda_g = detail::to_scalar(kv, "lambda_g", sc.lambda_g);
  sc.lambda_s = detail::to_scalar(kv, "lambda_s", sc.lambda_s);
  sc.delta_sl_rel = detail::to_scalar(kv, "delta_sl_rel", sc.delta_sl_rel);
  sc.gamma_u = detail::to_scalar(kv, "gamma_u", sc.gamma_u);
  sc.sigma2 = detail::to_scalar(kv, "sigma2", sc.sigma2);
  sc.num_symbols = detail::to_long(kv, "num_symbols", sc.num_symbols);
  sc.channel_seed = static_cast<std::uint64_t>(detail::to_long(kv, "channel_seed",
                                                               static_cast<long>(sc.channel_seed)));
  sc.symbol_seed = static_cast<std::uint64_t>(detail::to_long(kv, "symbol_seed",
                                                              static_cast<long>(sc.symbol_seed)));
  sc.waveform_seed = static_cast<std::uint64_t>(detail::to_long(kv, "waveform_seed",
                                                                static_cast<long>(sc.waveform_seed)));
  auto it = kv.find("constellation");
  const Scalar half = detail::to_scalar(kv, "psk_half_angle", 0.0);
  if (it != kv.end()) {
    sc.constellation = constellation_from_name(it->second, half);
  } else if (half > 0.0 && sc.constellation.kind == ConstellationKind::Psk) {
    sc.constellation = Constellation::psk(sc.constellation.order, half);
  }
  sc.channels = random_channels(sc.num_symbols, sc.nt * sc.ns, sc.channel_seed);
  sc.validate();
  return sc;
}

inline AoConfig ao_config_from(const KeyValueMap& kv) {
  AoConfig cfg;
  cfg.max_iters = static_cast<int>(detail::to_long(kv, "ao_max_iters", cfg.max_iters));
  cfg.min_iters = static_cast<int>(detail::to_long(kv, "ao_min_iters", cfg.min_iters));
  cfg.spread_tol = detail::to_scalar(kv, "ao_spread_tol", cfg.spread_tol);
  cfg.consistency_slack = detail::to_scalar(kv, "consistency_slack", cfg.consistency_slack);
  cfg.filter_loading = detail::to_scalar(kv, "filter_loading", cfg.filter_loading);
  cfg.repair_tol = detail::to_scalar(kv, "repair_tol", cfg.repair_tol);
  cfg.repair_max_passes =
      static_cast<int>(detail::to_long(kv, "repair_max_passes", cfg.repair_max_passes));
  cfg.sca.max_iters = static_cast<int>(detail::to_long(kv, "sca_max_iters", cfg.sca.max_iters));
  cfg.sca.f_tol = detail::to_scalar(kv, "sca_f_tol", cfg.sca.f_tol);
  cfg.sca.consistency_slack = cfg.consistency_slack;
  cfg.sca.adpm.max_iters =
      static_cast<int>(detail::to_long(kv, "adpm_max_iters", cfg.sca.adpm.max_iters));
  cfg.sca.adpm.tol = detail::to_scalar(kv, "adpm_tol", cfg.sca.adpm.tol);
  cfg.sca.adpm.rho_init = detail::to_scalar(kv, "adpm_rho_init", cfg.sca.adpm.rho_init);
  cfg.sca.adpm.gamma = detail::to_scalar(kv, "adpm_gamma", cfg.sca.adpm.gamma);
  cfg.sca.adpm.rho_max = detail::to_scalar(kv, "adpm_rho_max", cfg.sca.adpm.rho_max);
  if (cfg.max_iters < 1 || cfg.sca.max_iters < 1 || cfg.sca.adpm.max_iters < 1) {
    throw ConfigError("config: iteration caps must be positive");
  }
  if (!(cfg.sca.adpm.tol > 0.0) || !(cfg.sca.f_tol > 0.0) || !(cfg.spread_tol > 0.0)) {
    throw ConfigError("config: tolerances must be positive");
  }
  return cfg;
}

inline int num_blocks_from(const KeyValueMap& kv, int fallback = 1) {
  const long b = detail::to_long(kv, "num_blocks", fallback);
  if (b < 1) throw ConfigError("config: num_blocks must be >= 1");
  return static_cast<int>(b);
}

inline std::string constellation_name(const Constellation& con) {
  const std::string base = con.kind == ConstellationKind::Psk ? "psk" : "qam";
  return base + std::to_string(con.order);
}

/// Echo of the effective configuration; parse(render(x)) == x.
inline KeyValueMap scenario_to_config_map(const Scenario& sc, int num_blocks) {
  KeyValueMap kv;
  auto put = [&](const std::string& k, Scalar v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    kv[k] = os.str();
  };
  kv["nt"] = std::to_string(sc.nt);
  kv["ns"] = std::to_string(sc.ns);
  kv["ncp"] = std::to_string(sc.ncp);
  put("element_spacing", sc.element_spacing);
  put("grid_lo_deg", sc.angle_grid_deg[0]);
  put("grid_hi_deg", sc.angle_grid_deg[sc.angle_grid_deg.size() - 1]);
  put("grid_step_deg", sc.angle_grid_deg.size() > 1
                           ? sc.angle_grid_deg[1] - sc.angle_grid_deg[0]
                           : 1.0);
  put("mainlobe_lo_deg", sc.mainlobe.front().lo_deg);
  put("mainlobe_hi_deg", sc.mainlobe.front().hi_deg);
  put("target_angle_deg", sc.target_angle_deg);
  put("p0", sc.p0);
  put("epsilon", sc.epsilon);
  put("eta", sc.eta);
  put("lambda_g", sc.lambda_g);
  put("lambda_s", sc.lambda_s);
  put("delta_sl_rel", sc.delta_sl_rel);
  put("gamma_u", sc.gamma_u);
  put("sigma2", sc.sigma2);
  kv["constellation"] = constellation_name(sc.constellation);
  if (sc.constellation.kind == ConstellationKind::Psk) {
    put("psk_half_angle", sc.constellation.psk_half_angle);
  }
  kv["num_symbols"] = std::to_string(sc.num_symbols);
  kv["channel_seed"] = std::to_string(sc.channel_seed);
  kv["symbol_seed"] = std::to_string(sc.symbol_seed);
  kv["waveform_seed"] = std::to_string(sc.waveform_seed);
  kv["num_blocks"] = std::to_string(num_blocks);
  return kv;
}

inline std::string render_config(const KeyValueMap& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace isac
