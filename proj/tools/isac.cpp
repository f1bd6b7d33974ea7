// Command-line front end: design, evaluate, validate, sweep.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 infeasible
// instance, 3 solver-consistency failure (a guarded invariant tripped).

#include "isac/ao.hpp"
#include "isac/config.hpp"
#include "isac/diagnostics.hpp"
#include "isac/eval.hpp"
#include "isac/oracle.hpp"
#include "isac/result_io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace isac;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// ISAC_LOG_LEVEL is the only environment knob: quiet|info|debug.
LogLevel log_level() {
  static const LogLevel level = [] {
    const char* raw = std::getenv("ISAC_LOG_LEVEL");
    if (!raw) return LogLevel::Info;
    std::string v(raw);
    for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "quiet" || v == "error" || v == "0") return LogLevel::Quiet;
    if (v == "debug" || v == "2") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << msg << "\n";
}

std::string format_scalar_cli(Scalar v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<Scalar> parse_scalar_list(const std::string& text, const std::string& what) {
  std::vector<Scalar> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad " + what + " list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + " list is empty");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// ---------------------------------------------------------------------------
// Diagnostics sink: one JSON object per event, machine-readable.

std::unique_ptr<std::ofstream> g_diag_stream;

void install_diag_sink(const std::string& path) {
  g_diag_stream = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*g_diag_stream) throw ConfigError("cannot open diagnostics file '" + path + "'");
  diag::sink() = [](std::string_view component, const diag::Fields& fields) {
    Json j;
    j["component"] = std::string(component);
    for (const auto& [k, v] : fields) j[k] = v;
    *g_diag_stream << j.dump() << "\n";
  };
}

void close_diag_sink() {
  diag::sink() = nullptr;
  if (g_diag_stream) {
    g_diag_stream->flush();
    g_diag_stream.reset();
  }
}

// ---------------------------------------------------------------------------
// design

struct DesignOptions {
  std::string config_path;
  std::string out_dir{"out"};
  int blocks{0};  // 0: take from config
  std::string diagnostics_path;
  Scalar consistency_slack{std::numeric_limits<Scalar>::quiet_NaN()};
};

int cmd_design(const DesignOptions& opt) {
  KeyValueMap kv = parse_config_file(opt.config_path);
  if (opt.blocks > 0) kv["num_blocks"] = std::to_string(opt.blocks);
  if (!std::isnan(opt.consistency_slack)) {
    kv["consistency_slack"] = format_scalar_cli(opt.consistency_slack);
  }
  const Scenario sc = scenario_from_config(kv);
  const AoConfig cfg = ao_config_from(kv);
  const int num_blocks = num_blocks_from(kv, 1);

  log_info("design: building model (" + std::to_string(sc.nt) + " antennas, " +
           std::to_string(sc.ns) + " subcarriers, cp " + std::to_string(sc.ncp) + ", " +
           std::to_string(num_blocks) + " block(s))");
  const ProblemModel model = build_model(sc);

  if (!opt.diagnostics_path.empty()) install_diag_sink(opt.diagnostics_path);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<DesignResult> results = interleaved_schedule(model, num_blocks, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  close_diag_sink();

  KeyValueMap echo = scenario_to_config_map(sc, num_blocks);
  for (const auto& [k, v] : kv) {
    if (!echo.count(k)) echo[k] = v;  // carry solver keys alongside the scenario
  }

  ensure_dir(opt.out_dir);
  write_text_file(join_path(opt.out_dir, "design.json"), designs_to_json(results, echo).dump(2) + "\n");
  write_text_file(join_path(opt.out_dir, "ao_trace.csv"), ao_trace_csv(results));
  write_text_file(join_path(opt.out_dir, "sca_trace.csv"), sca_trace_csv(results));

  for (const DesignResult& r : results) {
    std::ostringstream os;
    os.precision(4);
    os << "design: block " << r.ctx.index << ": imsr " << r.final_imsr_db << " dB (initial "
       << r.initial_imsr_db << " dB), " << r.iterations << " outer iterations, feasible "
       << (r.feasibility.feasible() ? "yes" : "NO");
    log_info(os.str());
  }
  std::ostringstream os;
  os.precision(4);
  os << "design: wrote " << join_path(opt.out_dir, "design.json") << " in " << secs << " s";
  log_info(os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  std::string design_path;
  std::string out_dir{"out"};
  std::string snr_list;
  long trials{0};
  int threads{1};
};

int cmd_evaluate(const EvaluateOptions& opt) {
  const Json dj = load_json_file(opt.design_path);
  const LoadedDesignFile file = designs_from_json(dj);
  const Scenario sc = scenario_from_config(file.config_echo);
  const ProblemModel model = build_model(sc);

  SerOptions ser;
  ser.trials = opt.trials;
  ser.threads = std::max(1, opt.threads);
  if (!opt.snr_list.empty()) ser.snr_offsets_db = parse_scalar_list(opt.snr_list, "snr");

  ensure_dir(opt.out_dir);
  bool all_feasible = true;
  for (const LoadedDesign& d : file.blocks) {
    const std::vector<Complex> symbols =
        d.symbols.empty() ? draw_symbols(sc, d.block_index) : d.symbols;
    const std::vector<CIInstance> ci = make_ci_instances(sc, symbols);
    const EvaluationReport rep =
        evaluate_design(model, ci, d.s, d.t, d.g, d.ctx, ser, &symbols);
    all_feasible = all_feasible && rep.feasibility.feasible();

    const std::string tag = "_block" + std::to_string(d.block_index);
    write_text_file(join_path(opt.out_dir, "report" + tag + ".json"),
                    report_to_json(rep).dump(2) + "\n");
    write_text_file(join_path(opt.out_dir, "beampattern" + tag + ".csv"), beampattern_csv(rep));
    write_text_file(join_path(opt.out_dir, "profile" + tag + ".csv"), range_profile_csv(rep));
    if (!rep.ser.empty()) {
      write_text_file(join_path(opt.out_dir, "ser" + tag + ".csv"), ser_csv(rep));
    }

    std::ostringstream os;
    os.precision(4);
    os << "evaluate: block " << d.block_index << ": imsr " << rep.imsr_db << " dB, psl "
       << rep.profile.peak_sidelobe_db << " dB, papr "
       << rep.papr_db_per_antenna.maxCoeff() << " dB, feasible "
       << (rep.feasibility.feasible() ? "yes" : "NO");
    log_info(os.str());
  }
  log_info(std::string("evaluate: feasibility ") + (all_feasible ? "confirmed" : "VIOLATED"));
  return 0;
}

// ---------------------------------------------------------------------------
// validate: oracle suites with a pass/fail table.

struct ValidateOptions {
  std::string filter;
  std::uint64_t seed{20260801};
  int instances{100};
  Scalar tol_scale{1.0};
};

struct SuiteResult {
  std::string name;
  int instances{0};
  int failures{0};
  Scalar max_err{0.0};
  Scalar tol{0.0};
  double seconds{0.0};
};

// Relative distance between a closed-form point and an oracle point, scaled
// by the closed form's own distance to the projection center.
Scalar rel_point_err(const CVec& cf, const CVec& other, const CVec& center) {
  return (cf - other).norm() / std::max(Scalar(1), (cf - center).norm());
}

SuiteResult suite_qc_kkt(const ValidateOptions& opt) {
  SuiteResult res{"qc-kkt", opt.instances, 0, 0.0, 1e-6 * opt.tol_scale, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(opt.seed, 1));
  std::uniform_int_distribution<int> dim_pick(2, 8);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  for (int i = 0; i < opt.instances; ++i) {
    oracle::GridLambdaResult ref;
    RotatedQcInstance inst = oracle::random_qc_instance(rng, dim_pick(rng));
    const Scalar flavor = unif(rng);
    if (flavor < 0.4) {
      inst.a[0] = 0.0;  // epigraph-style axis with no curvature
    } else if (flavor < 0.55) {
      inst.a.setZero();  // pure halfspace instance
    }
    try {
      ref = oracle::grid_lambda_oracle(inst);
    } catch (const DivergenceError&) {
      ++res.failures;
      continue;
    }
    const RotatedQcSolution sol = solve_rotated_qc(inst);
    const Scalar err = rel_point_err(sol.x, ref.x, inst.center);
    res.max_err = std::max(res.max_err, err);
    if (err > res.tol) ++res.failures;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SuiteResult suite_lambda_monotone(const ValidateOptions& opt) {
  SuiteResult res{"lambda-monotone", opt.instances, 0, 0.0, 1e-10 * opt.tol_scale, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(opt.seed, 2));
  std::uniform_int_distribution<int> dim_pick(2, 8);
  for (int i = 0; i < opt.instances; ++i) {
    const RotatedQcInstance inst = oracle::random_qc_instance(rng, dim_pick(rng));
    Scalar prev = oracle::detail::constraint_at(inst.a, inst.beta, inst.center, 0.0);
    Scalar worst = 0.0;
    for (int j = 0; j < 50; ++j) {
      const Scalar lam = 1e-6 * std::pow(1e10, Scalar(j) / 49.0);
      const Scalar cur = oracle::detail::constraint_at(inst.a, inst.beta, inst.center, lam);
      worst = std::max(worst, (cur - prev) / std::max(Scalar(1), std::abs(prev)));
      prev = cur;
    }
    res.max_err = std::max(res.max_err, worst);
    if (worst > res.tol) ++res.failures;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SuiteResult suite_ci_projections(const ValidateOptions& opt) {
  SuiteResult res{"ci-projections", opt.instances, 0, 0.0, 1e-6 * opt.tol_scale, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(opt.seed, 3));
  const std::vector<Constellation> cons = {Constellation::psk(2), Constellation::psk(4),
                                           Constellation::psk(8), Constellation::qam(16),
                                           Constellation::qam(64)};
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  for (int i = 0; i < opt.instances; ++i) {
    const Constellation& con = cons[static_cast<std::size_t>(i) % cons.size()];
    const CIInstance inst = oracle::random_ci_instance(rng, con, 4);
    const Scalar spread = (0.2 + 4.0 * unif(rng)) * std::max(Scalar(1), inst.threshold_radius());
    const Complex w = inst.scaled_target() + Complex(n01(rng), n01(rng)) * spread;
    const Complex img_cf = project_image(inst, w).image;
    const Complex img_or = oracle::projection_oracle_2d(inst, w);
    const Scalar err =
        std::abs(img_cf - img_or) / std::max(Scalar(1), std::abs(img_cf - w));
    res.max_err = std::max(res.max_err, err);
    if (err > res.tol) ++res.failures;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SuiteResult suite_scalar_box(const ValidateOptions& opt) {
  SuiteResult res{"scalar-box", opt.instances, 0, 0.0, 1e-6 * opt.tol_scale, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(opt.seed, 4));
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  for (int i = 0; i < opt.instances; ++i) {
    const Complex c(2.0 * n01(rng), 2.0 * n01(rng));
    Complex w(n01(rng), n01(rng));
    if (std::abs(w) < 0.3) w += Complex(0.5, 0.0);
    const Scalar u = 0.3 + 3.0 * unif(rng);
    const Scalar tau = (-0.5 + 1.48 * unif(rng)) * std::abs(w) * std::sqrt(u);
    const Complex x_cf = solve_halfspace_disk(c, w, tau, u).s;

    const Complex wc = w;
    std::vector<std::function<CVec(const CVec&)>> projectors;
    projectors.emplace_back([wc, tau](const CVec& y) {
      CVec out = y;
      const Scalar slack = tau - (std::conj(wc) * y[0]).real();
      if (slack > 0.0) out[0] += slack / std::norm(wc) * wc;
      return out;
    });
    projectors.emplace_back([u](const CVec& y) {
      CVec out = y;
      const Scalar m = std::abs(y[0]);
      if (m * m > u) out[0] *= std::sqrt(u) / m;
      return out;
    });
    CVec start(1);
    start[0] = c;
    const CVec x_dyk = oracle::dykstra_project(start, projectors, 400);
    const Scalar err = std::abs(x_cf - x_dyk[0]) / std::max(Scalar(1), std::abs(x_cf - c));
    res.max_err = std::max(res.max_err, err);
    if (err > res.tol) ++res.failures;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

SuiteResult suite_qcqp_gradient(const ValidateOptions& opt) {
  SuiteResult res{"qcqp-gradient", opt.instances, 0, 0.0, 1e-5 * opt.tol_scale, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(mix_seed(opt.seed, 5));
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  auto rel_value_err = [](Scalar got, Scalar want) {
    return std::abs(got - want) / std::max(Scalar(1), std::abs(want));
  };
  for (int i = 0; i < opt.instances; ++i) {
    const int kind = i % 3;
    Scalar err = 0.0;
    if (kind == 0) {  // unconstrained quadratic
      const Eigen::Index d = 2 + (i / 3) % 4;
      CMat m(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index cc = 0; cc < d; ++cc) m(r, cc) = Complex(n01(rng), n01(rng));
      const CMat a = m.adjoint() * m / Scalar(d) + 0.5 * CMat::Identity(d, d);
      CVec b(d);
      for (Eigen::Index r = 0; r < d; ++r) b[r] = Complex(n01(rng), n01(rng));
      auto value = [&](const CVec& x) {
        return (x.adjoint() * a * x).value().real() - 2.0 * (b.adjoint() * x).value().real();
      };
      auto grad = [&](const CVec& x) { return CVec(2.0 * (a * x - b)); };
      auto ident = [](const CVec& x) { return x; };
      const CVec xstar = a.ldlt().solve(b);
      const auto pg = oracle::qcqp_oracle(value, grad, ident, CVec::Zero(d), 60000, 0.05);
      if (!pg.converged) err = 1.0;
      else err = rel_value_err(pg.value, value(xstar));
    } else if (kind == 1) {  // disk-constrained projection
      const Complex c(2.5 * n01(rng), 2.5 * n01(rng));
      const Scalar radius = 0.4 + 2.0 * unif(rng);
      auto value = [&](const CVec& x) { return std::norm(x[0] - c); };
      auto grad = [&](const CVec& x) {
        CVec g(1);
        g[0] = 2.0 * (x[0] - c);
        return g;
      };
      auto project = [radius](const CVec& x) {
        CVec out = x;
        const Scalar m = std::abs(out[0]);
        if (m > radius) out[0] *= radius / m;
        return out;
      };
      const Complex closed = std::abs(c) <= radius ? c : c * radius / std::abs(c);
      const auto pg = oracle::qcqp_oracle(value, grad, project, CVec::Zero(1), 40000, 0.1);
      if (!pg.converged) err = 1.0;
      else err = rel_value_err(pg.value, std::norm(closed - c));
    } else {  // halfspace + disk, Dykstra projector inside the gradient loop
      const Complex c(2.0 * n01(rng), 2.0 * n01(rng));
      Complex w(n01(rng), n01(rng));
      if (std::abs(w) < 0.3) w += Complex(0.5, 0.0);
      const Scalar u = 0.3 + 3.0 * unif(rng);
      const Scalar tau = (-0.5 + 1.4 * unif(rng)) * std::abs(w) * std::sqrt(u);
      const Complex closed = solve_halfspace_disk(c, w, tau, u).s;
      const Complex wc = w;
      std::vector<std::function<CVec(const CVec&)>> projectors;
      projectors.emplace_back([wc, tau](const CVec& y) {
        CVec out = y;
        const Scalar slack = tau - (std::conj(wc) * y[0]).real();
        if (slack > 0.0) out[0] += slack / std::norm(wc) * wc;
        return out;
      });
      projectors.emplace_back([u](const CVec& y) {
        CVec out = y;
        const Scalar m = std::abs(y[0]);
        if (m * m > u) out[0] *= std::sqrt(u) / m;
        return out;
      });
      auto value = [&](const CVec& x) { return std::norm(x[0] - c); };
      auto grad = [&](const CVec& x) {
        CVec g(1);
        g[0] = 2.0 * (x[0] - c);
        return g;
      };
      auto project = [&](const CVec& x) { return oracle::dykstra_project(x, projectors, 40); };
      const auto pg = oracle::qcqp_oracle(value, grad, project, CVec::Zero(1), 20000, 0.1);
      if (!pg.converged) err = 1.0;
      else err = rel_value_err(pg.value, std::norm(closed - c));
    }
    res.max_err = std::max(res.max_err, err);
    if (err > res.tol) ++res.failures;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

int cmd_validate(const ValidateOptions& opt) {
  if (opt.instances < 1) throw ConfigError("validate: --instances must be >= 1");
  if (!(opt.tol_scale > 0.0)) throw ConfigError("validate: --tol-scale must be > 0");
  using SuiteFn = SuiteResult (*)(const ValidateOptions&);
  const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"qc-kkt", suite_qc_kkt},
      {"lambda-monotone", suite_lambda_monotone},
      {"ci-projections", suite_ci_projections},
      {"scalar-box", suite_scalar_box},
      {"qcqp-gradient", suite_qcqp_gradient},
  };
  std::vector<SuiteResult> results;
  for (const auto& [name, fn] : suites) {
    if (!opt.filter.empty() && name.find(opt.filter) == std::string::npos) continue;
    log_debug("validate: running " + name);
    results.push_back(fn(opt));
  }
  if (results.empty()) throw ConfigError("validate: no suite matches filter '" + opt.filter + "'");

  std::ostringstream table;
  table << std::left << std::setw(18) << "suite" << std::right << std::setw(10) << "instances"
        << std::setw(10) << "failures" << std::setw(13) << "max_err" << std::setw(10) << "time_s"
        << "  status\n";
  bool all_pass = true;
  for (const SuiteResult& r : results) {
    const bool pass = r.failures == 0;
    all_pass = all_pass && pass;
    table << std::left << std::setw(18) << r.name << std::right << std::setw(10) << r.instances
          << std::setw(10) << r.failures << std::setw(13) << std::scientific
          << std::setprecision(2) << r.max_err << std::setw(10) << std::fixed
          << std::setprecision(2) << r.seconds << "  " << (pass ? "PASS" : "FAIL") << "\n";
    table.unsetf(std::ios::floatfield);
  }
  std::cout << table.str();
  std::cout << (all_pass ? "validate: all suites passed\n" : "validate: FAILURES present\n");
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// sweep: small parameter grid over eta, lambda_g, epsilon.

struct SweepOptions {
  std::string config_path;
  std::string out_dir{"out"};
  std::string eta_list, lambda_g_list, epsilon_list;
  int blocks{1};
};

int cmd_sweep(const SweepOptions& opt) {
  const KeyValueMap base = parse_config_file(opt.config_path);
  const Scenario base_sc = scenario_from_config(base);
  const std::vector<Scalar> etas = opt.eta_list.empty()
                                       ? std::vector<Scalar>{base_sc.eta}
                                       : parse_scalar_list(opt.eta_list, "eta");
  const std::vector<Scalar> lambdas = opt.lambda_g_list.empty()
                                          ? std::vector<Scalar>{base_sc.lambda_g}
                                          : parse_scalar_list(opt.lambda_g_list, "lambda_g");
  const std::vector<Scalar> epsilons = opt.epsilon_list.empty()
                                           ? std::vector<Scalar>{base_sc.epsilon}
                                           : parse_scalar_list(opt.epsilon_list, "epsilon");

  std::ostringstream csv;
  csv << "eta,lambda_g,epsilon,status,final_imsr_db,peak_sidelobe_db,min_ci_margin,"
         "ao_iterations\n";
  int ok_count = 0;
  int combo_count = 0;
  for (const Scalar eta : etas) {
    for (const Scalar lg : lambdas) {
      for (const Scalar eps : epsilons) {
        ++combo_count;
        KeyValueMap kv = base;
        kv["eta"] = format_scalar_cli(eta);
        kv["lambda_g"] = format_scalar_cli(lg);
        kv["epsilon"] = format_scalar_cli(eps);
        kv["num_blocks"] = std::to_string(opt.blocks);
        csv.precision(10);
        csv << eta << "," << lg << "," << eps << ",";
        try {
          const Scenario sc = scenario_from_config(kv);
          const AoConfig cfg = ao_config_from(kv);
          const ProblemModel model = build_model(sc);
          const std::vector<DesignResult> results =
              interleaved_schedule(model, opt.blocks, cfg);
          Scalar imsr_sum = 0.0, psl = -std::numeric_limits<Scalar>::infinity();
          Scalar margin = std::numeric_limits<Scalar>::infinity();
          long iters = 0;
          for (const DesignResult& r : results) {
            const std::vector<CIInstance> ci = make_ci_instances(sc, r.symbols);
            const EvaluationReport rep = evaluate_design(model, ci, r);
            imsr_sum += rep.imsr_db;
            psl = std::max(psl, rep.profile.peak_sidelobe_db);
            margin = std::min(margin, rep.feasibility.min_ci_margin);
            iters += r.iterations;
          }
          const Scalar n = static_cast<Scalar>(results.size());
          csv << "ok," << imsr_sum / n << "," << psl << "," << margin << ","
              << iters / results.size() << "\n";
          ++ok_count;
          std::ostringstream os;
          os.precision(4);
          os << "sweep: eta " << eta << " lambda_g " << lg << " epsilon " << eps << " -> imsr "
             << imsr_sum / n << " dB, psl " << psl << " dB";
          log_info(os.str());
        } catch (const InfeasibleError& e) {
          csv << "infeasible,,,,\n";
          log_info(std::string("sweep: combination infeasible: ") + e.what());
        } catch (const ConfigError& e) {
          csv << "invalid,,,,\n";
          log_info(std::string("sweep: combination rejected: ") + e.what());
        }
      }
    }
  }
  ensure_dir(opt.out_dir);
  write_text_file(join_path(opt.out_dir, "sweep.csv"), csv.str());
  log_info("sweep: " + std::to_string(ok_count) + "/" + std::to_string(combo_count) +
           " combinations solved; wrote " + join_path(opt.out_dir, "sweep.csv"));
  return ok_count > 0 ? 0 : 2;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const SolverConsistencyError& e) {
    std::cerr << "solver-consistency failure: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "solver divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC waveform / mismatched-filter co-design"};
  app.require_subcommand(1);

  DesignOptions dopt;
  CLI::App* design = app.add_subcommand("design", "co-design waveforms and filters");
  design->add_option("--config", dopt.config_path, "key = value scenario file")->required();
  design->add_option("--out", dopt.out_dir, "output directory (default: out)");
  design->add_option("--blocks", dopt.blocks, "override num_blocks from the config");
  design->add_option("--diagnostics", dopt.diagnostics_path,
                     "write per-iteration solver events to this JSONL file");
  design->add_option("--consistency-slack", dopt.consistency_slack,
                     "override the monotonicity guard slack (negative values turn the guard "
                     "into a tripwire)");

  EvaluateOptions eopt;
  CLI::App* evaluate = app.add_subcommand("evaluate", "metrics for a finished design");
  evaluate->add_option("--design", eopt.design_path, "design.json from the design command")
      ->required();
  evaluate->add_option("--out", eopt.out_dir, "output directory (default: out)");
  evaluate->add_option("--snr", eopt.snr_list, "comma-separated SNR offsets in dB for the SER sweep");
  evaluate->add_option("--trials", eopt.trials,
                       "Monte-Carlo trials per SNR point (0 disables, otherwise >= 10000)");
  evaluate->add_option("--threads", eopt.threads, "worker threads for the SER simulation");

  ValidateOptions vopt;
  CLI::App* validate = app.add_subcommand("validate", "run the oracle suites");
  validate->add_option("--filter", vopt.filter, "run only suites whose name contains this text");
  validate->add_option("--seed", vopt.seed, "base seed for instance generation");
  validate->add_option("--instances", vopt.instances, "instances per suite (default 100)");
  validate->add_option("--tol-scale", vopt.tol_scale,
                       "multiply every suite tolerance (testing aid; default 1)");

  SweepOptions sopt;
  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep over eta, lambda_g, epsilon");
  sweep->add_option("--config", sopt.config_path, "base key = value scenario file")->required();
  sweep->add_option("--out", sopt.out_dir, "output directory (default: out)");
  sweep->add_option("--eta", sopt.eta_list, "comma-separated eta values");
  sweep->add_option("--lambda-g", sopt.lambda_g_list, "comma-separated lambda_g values");
  sweep->add_option("--epsilon", sopt.epsilon_list, "comma-separated epsilon values");
  sweep->add_option("--blocks", sopt.blocks, "blocks per combination (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (design->parsed()) return guarded([&] { return cmd_design(dopt); });
  if (evaluate->parsed()) return guarded([&] { return cmd_evaluate(eopt); });
  if (validate->parsed()) return guarded([&] { return cmd_validate(vopt); });
  return guarded([&] { return cmd_sweep(sopt); });
}
