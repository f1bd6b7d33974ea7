#pragma once

#include "isac/ao.hpp"
#include "isac/config.hpp"
#include "isac/eval.hpp"
#include "isac/types.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace isac {

using Json = nlohmann::ordered_json;

/// Complex vectors travel as interleaved [re0, im0, re1, im1, ...].
inline Json complex_array(const CVec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v[i].real());
    arr.push_back(v[i].imag());
  }
  return arr;
}

inline Json complex_array(const std::vector<Complex>& v) {
  Json arr = Json::array();
  for (const Complex& z : v) {
    arr.push_back(z.real());
    arr.push_back(z.imag());
  }
  return arr;
}

inline CVec parse_complex_vector(const Json& arr, const std::string& what) {
  if (!arr.is_array() || arr.size() % 2 != 0) {
    throw ConfigError("design file: '" + what + "' must be an even-length number array");
  }
  CVec v(static_cast<Eigen::Index>(arr.size() / 2));
  for (std::size_t i = 0; i + 1 < arr.size(); i += 2) {
    if (!arr[i].is_number() || !arr[i + 1].is_number()) {
      throw ConfigError("design file: '" + what + "' holds a non-numeric entry");
    }
    v[static_cast<Eigen::Index>(i / 2)] = Complex(arr[i].get<Scalar>(), arr[i + 1].get<Scalar>());
  }
  return v;
}

inline std::vector<Complex> parse_complex_list(const Json& arr, const std::string& what) {
  const CVec v = parse_complex_vector(arr, what);
  return {v.data(), v.data() + v.size()};
}

inline Json feasibility_to_json(const FeasibilityReport& rep) {
  Json j;
  j["min_ci_margin"] = rep.min_ci_margin;
  j["min_power"] = rep.min_power;
  j["max_power"] = rep.max_power;
  j["power_floor"] = rep.power_floor;
  j["power_cap"] = rep.power_cap;
  j["zero_lag"] = Json::array({rep.zero_lag.real(), rep.zero_lag.imag()});
  j["frac_residual"] = rep.frac_residual;
  j["adpm_max_residual"] = rep.adpm_max_residual;
  j["feasible"] = rep.feasible();
  return j;
}

inline Json design_block_to_json(const DesignResult& res) {
  Json j;
  j["block_index"] = res.ctx.index;
  j["t"] = res.t;
  j["s"] = complex_array(res.s);
  j["g"] = complex_array(res.g);
  j["s_initial"] = complex_array(res.s_initial);
  j["s_pre"] = complex_array(res.ctx.s_pre);
  j["s_post"] = complex_array(res.ctx.s_post);
  j["symbols"] = complex_array(res.symbols);
  j["g_obj_trace"] = res.g_obj_trace;
  Json runs = Json::array();
  for (const ScaState& st : res.sca_runs) {
    Json r;
    r["f_trace"] = st.f_trace;
    Json its = Json::array();
    for (const ScaIterate& it : st.iterates) {
      Json e;
      e["f"] = it.f;
      e["frac_residual"] = it.frac_residual;
      e["power_floor_violation"] = it.power_floor_violation;
      e["power_cap_violation"] = it.power_cap_violation;
      e["adpm_residual"] = it.adpm_residual;
      e["adpm_iters"] = it.adpm_iters;
      its.push_back(std::move(e));
    }
    r["iterates"] = std::move(its);
    runs.push_back(std::move(r));
  }
  j["sca_runs"] = std::move(runs);
  j["feasibility"] = feasibility_to_json(res.feasibility);
  j["initial_imsr_db"] = res.initial_imsr_db;
  j["final_imsr_db"] = res.final_imsr_db;
  j["lambda_max"] = res.lambda_max;
  j["iterations"] = res.iterations;
  return j;
}

inline Json designs_to_json(const std::vector<DesignResult>& results,
                            const KeyValueMap& config_echo) {
  Json j;
  j["schema"] = "isac-design/1";
  Json cfg;
  for (const auto& [k, v] : config_echo) cfg[k] = v;
  j["config"] = std::move(cfg);
  Json blocks = Json::array();
  for (const DesignResult& r : results) blocks.push_back(design_block_to_json(r));
  j["blocks"] = std::move(blocks);
  return j;
}

struct LoadedDesign {
  int block_index{1};
  CVec s, g, s_initial;
  Scalar t{0.0};
  BlockContext ctx;
  std::vector<Complex> symbols;
};

struct LoadedDesignFile {
  KeyValueMap config_echo;
  std::vector<LoadedDesign> blocks;
};

inline LoadedDesignFile designs_from_json(const Json& j) {
  if (!j.is_object() || j.value("schema", "") != std::string("isac-design/1")) {
    throw ConfigError("design file: missing or unsupported schema tag");
  }
  LoadedDesignFile out;
  if (!j.contains("config") || !j["config"].is_object()) {
    throw ConfigError("design file: missing config echo");
  }
  for (const auto& [k, v] : j["config"].items()) {
    if (!v.is_string()) throw ConfigError("design file: config echo values must be strings");
    out.config_echo[k] = v.get<std::string>();
  }
  if (!j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty()) {
    throw ConfigError("design file: missing blocks");
  }
  for (const Json& b : j["blocks"]) {
    LoadedDesign d;
    if (!b.contains("block_index") || !b.contains("t") || !b.contains("s") || !b.contains("g")) {
      throw ConfigError("design file: block is missing required fields");
    }
    d.block_index = b["block_index"].get<int>();
    d.t = b["t"].get<Scalar>();
    d.s = parse_complex_vector(b["s"], "s");
    d.g = parse_complex_vector(b["g"], "g");
    d.s_initial = b.contains("s_initial") ? parse_complex_vector(b["s_initial"], "s_initial") : d.s;
    d.ctx.index = d.block_index;
    d.ctx.s_pre = b.contains("s_pre") ? parse_complex_vector(b["s_pre"], "s_pre") : d.s_initial;
    d.ctx.s_post = b.contains("s_post") ? parse_complex_vector(b["s_post"], "s_post") : d.s_initial;
    if (b.contains("symbols")) d.symbols = parse_complex_list(b["symbols"], "symbols");
    out.blocks.push_back(std::move(d));
  }
  return out;
}

inline Json report_to_json(const EvaluationReport& rep) {
  Json j;
  j["schema"] = "isac-report/1";
  j["imsr_db"] = rep.imsr_db;
  j["imsr_grid_db"] = rep.imsr_grid_db;
  j["peak_sidelobe_db"] = rep.profile.peak_sidelobe_db;
  Json papr = Json::array();
  for (Eigen::Index a = 0; a < rep.papr_db_per_antenna.size(); ++a) {
    papr.push_back(rep.papr_db_per_antenna[a]);
  }
  j["papr_db_per_antenna"] = std::move(papr);
  j["ci_margins"] = rep.ci_margins;
  j["feasibility"] = feasibility_to_json(rep.feasibility);
  Json ser = Json::array();
  for (const SerPoint& p : rep.ser) {
    Json e;
    e["snr_offset_db"] = p.snr_offset_db;
    e["ser"] = p.ser;
    e["half_width"] = p.half_width;
    e["trials"] = p.trials;
    ser.push_back(std::move(e));
  }
  j["ser"] = std::move(ser);
  return j;
}

namespace detail {

inline std::string format_scalar(Scalar v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline std::string beampattern_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "angle_deg,power_db\n";
  for (std::size_t i = 0; i < rep.grid_angles_deg.size(); ++i) {
    os << detail::format_scalar(rep.grid_angles_deg[i]) << ","
       << detail::format_scalar(rep.beampattern_db[static_cast<Eigen::Index>(i)]) << "\n";
  }
  return os.str();
}

inline std::string range_profile_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "lag,source,magnitude_db\n";
  auto emit = [&](const std::vector<int>& lags, const CVec& vals, const char* source) {
    for (std::size_t i = 0; i < lags.size(); ++i) {
      os << lags[i] << "," << source << ","
         << detail::format_scalar(safe_db20(std::abs(vals[static_cast<Eigen::Index>(i)]))) << "\n";
    }
  };
  emit(rep.profile.own_lags, rep.profile.own, "own");
  emit(rep.profile.pre_lags, rep.profile.pre, "pre");
  emit(rep.profile.post_lags, rep.profile.post, "post");
  return os.str();
}

inline std::string ser_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "snr_offset_db,ser,half_width,trials\n";
  for (const SerPoint& p : rep.ser) {
    os << detail::format_scalar(p.snr_offset_db) << "," << detail::format_scalar(p.ser) << ","
       << detail::format_scalar(p.half_width) << "," << p.trials << "\n";
  }
  return os.str();
}

inline std::string ao_trace_csv(const std::vector<DesignResult>& results) {
  std::ostringstream os;
  os << "block,iteration,g_obj\n";
  for (const DesignResult& r : results) {
    for (std::size_t i = 0; i < r.g_obj_trace.size(); ++i) {
      os << r.ctx.index << "," << i << "," << detail::format_scalar(r.g_obj_trace[i]) << "\n";
    }
  }
  return os.str();
}

inline std::string sca_trace_csv(const std::vector<DesignResult>& results) {
  std::ostringstream os;
  os << "block,ao_iteration,sca_iteration,f,frac_residual,power_floor_violation,"
        "power_cap_violation,adpm_residual,adpm_iters\n";
  for (const DesignResult& r : results) {
    for (std::size_t a = 0; a < r.sca_runs.size(); ++a) {
      const ScaState& st = r.sca_runs[a];
      for (std::size_t k = 0; k < st.iterates.size(); ++k) {
        const ScaIterate& it = st.iterates[k];
        os << r.ctx.index << "," << a + 1 << "," << k << "," << detail::format_scalar(it.f) << ","
           << detail::format_scalar(it.frac_residual) << ","
           << detail::format_scalar(it.power_floor_violation) << ","
           << detail::format_scalar(it.power_cap_violation) << ","
           << detail::format_scalar(it.adpm_residual) << "," << it.adpm_iters << "\n";
      }
    }
  }
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Json load_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON in '") + path + "': " + e.what());
  }
}

}  // namespace isac
