#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"
#include "report_io.hpp"

namespace pdmpis {

namespace {

using pdmp::models::HeaterStatus;

// CE streams use ids below 2^45; estimates start above.
constexpr std::uint64_t kEstimateStreams = std::uint64_t{1} << 56;
constexpr std::uint64_t kRowStreams = std::uint64_t{1} << 48;

struct Setup {
  std::unique_ptr<pdmp::Model> model;
  std::shared_ptr<const pdmp::UStarTable> table;
  pdmp::SimOptions sim;
};

std::shared_ptr<const pdmp::UStarTable> table_for(const RunConfig& cfg, const pdmp::Model& model) {
  return std::make_shared<const pdmp::UStarTable>(pdmp::compute_ustar_dp(model, cfg.h_dp));
}

Setup make_setup(const RunConfig& cfg) {
  Setup s;
  s.model = make_model(cfg);
  s.sim = sim_options(cfg);
  if (cfg.scheme == "exact") s.table = table_for(cfg, *s.model);
  if (s.table) {
    const auto o = pdmp::oracle_sim_options();
    s.sim.quadrature_tol = o.quadrature_tol;
    s.sim.quadrature_max_depth = o.quadrature_max_depth;
  }
  return s;
}

std::unique_ptr<pdmp::BiasScheme> make_scheme(const RunConfig& cfg, const Setup& s) {
  if (cfg.scheme == "neutral") return std::make_unique<pdmp::NeutralScheme>();
  if (cfg.scheme == "exact") return pdmp::exact_optimal_scheme(*s.model, s.table);
  if (cfg.scheme == "mode_exponential") {
    return std::make_unique<pdmp::models::ModeExponentialScheme>(cfg.alpha1,
                                                                 cfg.ctmc_components);
  }
  return std::make_unique<pdmp::models::HeatedRoomScheme>(cfg.alpha1, cfg.alpha2);
}

std::unique_ptr<pdmp::ParametricFamily> make_family(const RunConfig& cfg) {
  if (cfg.model == "heated_room") return std::make_unique<pdmp::HeatedRoomFamily>();
  return std::make_unique<pdmp::ModeExponentialFamily>(cfg.ctmc_components);
}

pdmp::EstimatorConfig estimator_config(const RunConfig& cfg, const Setup& s, std::size_t n,
                                       std::uint64_t offset, bool keep_weights) {
  pdmp::EstimatorConfig e;
  e.n = n;
  e.seed = cfg.seed;
  e.stream_offset = offset;
  e.workers = cfg.workers;
  e.sim = s.sim;
  e.keep_weights = keep_weights;
  e.top_k = cfg.top_k;
  return e;
}

pdmp::CeConfig ce_config(const RunConfig& cfg, const Setup& s, std::size_t start) {
  pdmp::CeConfig c;
  c.alpha0 = cfg.ce.alpha0.at(start);
  c.n_ce = cfg.ce.n_ce;
  c.eps = cfg.ce.eps;
  c.max_iters = cfg.ce.max_iters;
  c.max_draws_per_step = cfg.ce.max_draws_per_step;
  c.restarts = cfg.ce.restarts;
  c.simplex_scale = cfg.ce.simplex_scale;
  c.batch = cfg.ce.batch;
  c.workers = cfg.workers;
  c.sim = s.sim;
  c.seed = cfg.seed + start;
  return c;
}

Json scheme_json(const pdmp::BiasScheme* scheme, const std::string& type) {
  Json j{{"type", type}};
  Json params = Json::array();
  if (scheme) {
    for (double p : scheme->params()) params.push_back(p);
  }
  j["params"] = params;
  return j;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// IS estimate plus its weights.csv.
pdmp::EstimateReport run_is(const RunConfig& cfg, const Setup& s, const pdmp::BiasScheme& scheme,
                            std::size_t n, std::uint64_t offset, const std::string& csv_name) {
  auto r = pdmp::importance_sampling(*s.model, scheme, estimator_config(cfg, s, n, offset, true));
  const auto h =
      pdmp::weight_histogram(r.failing_weights, r.p_hat, cfg.histogram_bins, cfg.top_k);
  write_text(cfg.output_dir / csv_name, histogram_csv(h));
  append_run(cfg.output_dir / "runs.csv", r);
  return r;
}

void print_estimate(std::ostream& log, const pdmp::EstimateReport& r) {
  log << r.method << " n=" << r.n_sim << " hits=" << r.n_hits << " p_hat=" << format_double(r.p_hat)
      << " CI=[" << format_double(r.ci_lo) << ", " << format_double(r.ci_hi) << "]"
      << " t_sim=" << fmt("%.3g", r.t_sim) << "s eff=" << fmt("%.4g", r.efficiency) << '\n';
}

int cmd_mc(const RunConfig& cfg, const Setup& s, std::ostream& log) {
  auto r = pdmp::crude_mc(*s.model, estimator_config(cfg, s, cfg.n_sim, kEstimateStreams, false));
  append_run(cfg.output_dir / "runs.csv", r);
  write_json(cfg.output_dir / "report.json",
             Json{{"command", "mc"}, {"model", cfg.model}, {"estimate", to_json(r)}});
  print_estimate(log, r);
  return kExitOk;
}

int cmd_is(const RunConfig& cfg, const Setup& s, std::ostream& log) {
  const auto scheme = make_scheme(cfg, s);
  auto r = run_is(cfg, s, *scheme, cfg.n_sim, kEstimateStreams, "weights.csv");
  write_json(cfg.output_dir / "report.json", Json{{"command", "is"},
                                                  {"model", cfg.model},
                                                  {"scheme", scheme_json(scheme.get(), cfg.scheme)},
                                                  {"estimate", to_json(r)}});
  print_estimate(log, r);
  return kExitOk;
}

std::string trace_file(std::size_t start) {
  return start == 0 ? "ce_trace.csv" : "ce_trace_" + std::to_string(start) + ".csv";
}

void print_trace(std::ostream& log, const pdmp::CeTrace& t) {
  for (std::size_t i = 0; i < t.iterations.size(); ++i) {
    const auto& it = t.iterations[i];
    log << "  step " << i << " alpha=(";
    for (std::size_t k = 0; k < it.alpha.size(); ++k) log << (k ? ", " : "") << fmt("%.4f", it.alpha[k]);
    log << ") N=" << it.n_drawn << " hits=" << it.n_hits << '\n';
  }
  log << "  alpha=(";
  for (std::size_t k = 0; k < t.alpha.size(); ++k) log << (k ? ", " : "") << fmt("%.4f", t.alpha[k]);
  log << ")" << (t.converged ? " converged" : " not converged") << '\n';
}

int cmd_ce(const RunConfig& cfg, const Setup& s, std::ostream& log) {
  const auto family = make_family(cfg);
  Json doc{{"command", "ce"}, {"model", cfg.model}, {"family", family->name()}};
  Json traces = Json::array();
  std::vector<pdmp::CeTrace> results;
  for (std::size_t k = 0; k < cfg.ce.alpha0.size(); ++k) {
    try {
      results.push_back(pdmp::ce_optimize(*s.model, *family, ce_config(cfg, s, k)));
    } catch (const pdmp::CeFailure& e) {
      traces.push_back(to_json(e.trace()));
      doc["traces"] = traces;
      doc["error"] = e.what();
      write_json(cfg.output_dir / "report.json", doc);
      write_text(cfg.output_dir / trace_file(k), ce_trace_csv(e.trace()));
      throw;
    }
    traces.push_back(to_json(results.back()));
    write_text(cfg.output_dir / trace_file(k), ce_trace_csv(results.back()));
    log << "CE start " << k << ":\n";
    print_trace(log, results.back());
  }
  doc["traces"] = traces;
  if (cfg.ce.follow_up) {
    const auto scheme = family->make(results.front().alpha);
    auto r = run_is(cfg, s, *scheme, cfg.n_sim, kEstimateStreams, "weights.csv");
    doc["estimate"] = to_json(r);
    print_estimate(log, r);
  }
  write_json(cfg.output_dir / "report.json", doc);
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& log) {
  const auto chain =
      pdmp::models::tiny_ctmc_model(cfg.ctmc_a, cfg.ctmc_b, cfg.ctmc_components, cfg.ctmc_horizon);
  const auto table = table_for(cfg, chain);
  {
    std::ostringstream csv;
    table->write_csv(csv);
    write_text(cfg.output_dir / "ustar.csv", csv.str());
  }
  auto report = pdmp::check_ustar_identities(chain, *table, cfg.validate_points, cfg.validate_m,
                                             cfg.seed);
  const auto zv = zero_variance_check(chain, *table, 1000, cfg.seed, cfg.workers);
  report.add("zero_variance_hits", static_cast<double>(zv.hits), static_cast<double>(zv.n), 0.0);
  report.add("zero_variance_weights", zv.max_rel_dev, 0.0, 1e-5);
  report.add("zero_variance_variance", zv.var_ratio, 0.0, 1e-10);

  Json doc{{"command", "validate"}, {"p_dp", zv.p}, {"tiny_ctmc", to_json(report)}};
  bool ok = report.passed();
  if (cfg.validate_heated_room) {
    const auto spot = heated_room_spot_checks(cfg.heated_room, cfg.alpha1, cfg.alpha2,
                                              cfg.validate_nested_m, cfg.seed, sim_options(cfg));
    doc["heated_room"] = to_json(spot);
    ok = ok && spot.passed();
    report.checks.insert(report.checks.end(), spot.checks.begin(), spot.checks.end());
  }
  doc["passed"] = ok;
  write_json(cfg.output_dir / "report.json", doc);
  for (const auto& c : report.checks) {
    log << (c.passed ? "ok   " : "FAIL ") << c.name << " lhs=" << format_double(c.lhs)
        << " rhs=" << format_double(c.rhs) << " tol=" << fmt("%.3g", c.tolerance) << '\n';
  }
  log << (ok ? "all checks passed" : "identity checks failed") << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_reproduce(const RunConfig& cfg, const Setup& s, std::ostream& log) {
  Json doc{{"command", "reproduce"}, {"model", cfg.model}};
  std::unique_ptr<pdmp::BiasScheme> scheme;
  if (cfg.reproduce_run_ce) {
    const auto family = make_family(cfg);
    const auto trace = pdmp::ce_optimize(*s.model, *family, ce_config(cfg, s, 0));
    write_text(cfg.output_dir / "ce_trace.csv", ce_trace_csv(trace));
    doc["ce"] = to_json(trace);
    log << "CE:\n";
    print_trace(log, trace);
    scheme = family->make(trace.alpha);
  } else {
    scheme = make_scheme(cfg, s);
  }
  doc["scheme"] = scheme_json(scheme.get(), cfg.reproduce_run_ce ? "ce" : cfg.scheme);

  std::vector<pdmp::EstimateReport> rows;
  std::uint64_t row = 0;
  for (double n : cfg.reproduce_is_sizes) {
    const auto size = static_cast<std::size_t>(n);
    rows.push_back(run_is(cfg, s, *scheme, size, kEstimateStreams + (++row) * kRowStreams,
                          "weights_is_" + std::to_string(size) + ".csv"));
  }
  for (double n : cfg.reproduce_mc_sizes) {
    rows.push_back(pdmp::crude_mc(*s.model,
                                  estimator_config(cfg, s, static_cast<std::size_t>(n),
                                                   kEstimateStreams + (++row) * kRowStreams, false)));
    append_run(cfg.output_dir / "runs.csv", rows.back());
  }

  Json table = Json::array();
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %10s %12s %12s %27s %11s %11s\n", "method", "N_sim",
                "p_hat", "var/N", "95% CI", "t_sim", "eff");
  log << line;
  for (const auto& r : rows) {
    table.push_back(to_json(r));
    std::snprintf(line, sizeof line, "%-6s %10zu %12.4e %12.4e [%11.4e, %11.4e] %11.3e %11.4e\n",
                  r.method.c_str(), r.n_sim, r.p_hat, r.var_hat, r.ci_lo, r.ci_hi, r.t_sim,
                  r.efficiency);
    log << line;
  }
  doc["rows"] = table;
  const auto best_is = std::find_if(rows.rbegin(), rows.rend(),
                                    [](const auto& r) { return r.method == "is"; });
  const auto mc = std::find_if(rows.begin(), rows.end(),
                               [](const auto& r) { return r.method == "mc"; });
  if (best_is != rows.rend() && mc != rows.end() && mc->n_hits > 0) {
    const double ratio = best_is->efficiency / mc->efficiency;
    doc["timing"] = {{"efficiency_ratio", ratio}};
    log << "efficiency ratio IS/MC: " << fmt("%.4g", ratio) << '\n';
  }
  write_json(cfg.output_dir / "report.json", doc);
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const Setup& s, std::ostream& log) {
  const auto scheme = make_scheme(cfg, s);
  const pdmp::BiasScheme* active = cfg.scheme == "neutral" ? nullptr : scheme.get();
  pdmp::TrajectoryEngine engine(*s.model, active, s.sim);
  pdmp::RngStream rng(cfg.seed, 0);
  pdmp::Skeleton skeleton;
  const auto out = engine.run(rng, &skeleton);
  write_text(cfg.output_dir / "trajectory.csv",
             trajectory_csv(*s.model, skeleton, cfg.trajectory_dt, s.sim.step));
  write_json(cfg.output_dir / "report.json",
             Json{{"command", "simulate"},
                  {"model", cfg.model},
                  {"scheme", scheme_json(active, cfg.scheme)},
                  {"hit_failure", out.hit_failure},
                  {"log_weight", out.log_weight},
                  {"jumps", out.jumps}});
  log << "jumps=" << out.jumps << " failure=" << (out.hit_failure ? "yes" : "no")
      << " log_weight=" << format_double(out.log_weight) << '\n';
  return kExitOk;
}

}  // namespace

std::unique_ptr<pdmp::Model> make_model(const RunConfig& cfg) {
  if (cfg.model == "heated_room") return std::make_unique<pdmp::models::HeatedRoom>(cfg.heated_room);
  return std::make_unique<pdmp::models::ConstantRateChain>(pdmp::models::tiny_ctmc_model(
      cfg.ctmc_a, cfg.ctmc_b, cfg.ctmc_components, cfg.ctmc_horizon));
}

pdmp::SimOptions sim_options(const RunConfig& cfg) {
  pdmp::SimOptions o;
  o.step = cfg.step;
  return o;
}

ZeroVarianceResult zero_variance_check(const pdmp::Model& model, const pdmp::UStarTable& table,
                                       std::size_t n, std::uint64_t seed, int workers,
                                       double rel_tol, double var_tol) {
  ZeroVarianceResult res;
  res.p = table.value(model, model.initial_state(), 0.0);
  auto shared = std::make_shared<const pdmp::UStarTable>(table);
  const auto scheme = pdmp::exact_optimal_scheme(model, shared);
  pdmp::EstimatorConfig e;
  e.n = n;
  e.seed = seed;
  e.workers = workers;
  e.sim = pdmp::oracle_sim_options();
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = pdmp::importance_sampling(model, *scheme, e);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.n = r.n_sim;
  res.hits = r.n_hits;
  for (double w : r.failing_weights) {
    res.max_rel_dev = std::max(res.max_rel_dev, std::abs(w - res.p) / res.p);
  }
  res.var_ratio = r.sigma2 / (res.p * res.p);
  res.passed = res.hits == res.n && res.max_rel_dev <= rel_tol && res.var_ratio <= var_tol;
  return res;
}

pdmp::IdentityReport heated_room_spot_checks(const pdmp::models::HeatedRoomParams& params,
                                             double alpha1, double alpha2, std::size_t m,
                                             std::uint64_t seed, const pdmp::SimOptions& opts) {
  const pdmp::models::HeatedRoom model(params);
  const pdmp::models::HeatedRoomScheme scheme(alpha1, alpha2);
  const auto F = HeaterStatus::failed;
  const auto OFF = HeaterStatus::off;
  const double x_pre = params.x_min + 1e-4;
  const double s_pre = 0.5 * params.horizon;

  pdmp::IdentityReport report;
  auto bi = pdmp::boundary_invariance_check(model, model.make_state(x_pre, {F, F, OFF}), s_pre, m,
                                            seed, &scheme, opts);
  bi.name = "heated_room_boundary_FF_OFF";
  report.checks.push_back(bi);
  bi = pdmp::boundary_invariance_check(model, model.make_state(x_pre, {OFF, OFF, OFF}), s_pre, m,
                                       seed + 10, &scheme, opts);
  bi.name = "heated_room_boundary_OFF_OFF_OFF";
  report.checks.push_back(bi);
  const std::size_t inner = 10;
  auto tw = pdmp::nested_tower_check(model, model.make_state(2.0, {F, OFF, OFF}),
                                     0.6 * params.horizon, 0.05 * params.horizon, m, m / inner,
                                     inner, seed + 20, &scheme, opts);
  tw.name = "heated_room_nested_tower";
  report.checks.push_back(tw);
  return report;
}

int run(const RunConfig& cfg, const ConfigStore& store, std::ostream& log) {
  std::filesystem::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "resolved_config.json", store.to_json());
  if (cfg.method == "validate") return cmd_validate(cfg, log);
  const Setup s = make_setup(cfg);
  if (cfg.method == "mc") return cmd_mc(cfg, s, log);
  if (cfg.method == "is") return cmd_is(cfg, s, log);
  if (cfg.method == "ce") return cmd_ce(cfg, s, log);
  if (cfg.method == "reproduce") return cmd_reproduce(cfg, s, log);
  return cmd_simulate(cfg, s, log);
}

int run_guarded(const ConfigStore& store, std::ostream& log, std::ostream& err) {
  try {
    const RunConfig cfg = resolve(store);
    return run(cfg, store, log);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pdmp::Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == pdmp::ErrorCode::config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace pdmpis
