#include "pdmp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/estimate.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

UStarTable::UStarTable(std::size_t modes, double horizon, std::size_t steps)
    : modes_(modes),
      horizon_(horizon),
      steps_(steps),
      values_(modes * (steps + 1), 0.0),
      slopes_(modes * (steps + 1), 0.0) {
  if (steps == 0) throw Error(ErrorCode::invalid_argument, "table needs at least one step");
}

void UStarTable::set(std::size_t mode, std::size_t k, double value, double slope) {
  values_[k * modes_ + mode] = value;
  slopes_[k * modes_ + mode] = slope;
}

double UStarTable::value(std::size_t mode, double s) const {
  if (!(horizon_ > 0.0)) return at(mode, steps_);
  const double h = step();
  const double pos = std::clamp(s, 0.0, horizon_) / h;
  const auto k = std::min(static_cast<std::size_t>(pos), steps_ - 1);
  const double t = pos - static_cast<double>(k);
  const double r = static_cast<double>(k + 1) - pos;
  const double y0 = at(mode, k), y1 = at(mode, k + 1);
  const double d0 = slope_at(mode, k) * h, d1 = slope_at(mode, k + 1) * h;
  // factored Hermite basis: no cancellation when U* vanishes at a node
  const double v = r * r * ((1 + 2 * t) * y0 + t * d0) + t * t * ((3 - 2 * t) * y1 - r * d1);
  return std::clamp(v, 0.0, 1.0);
}

double UStarTable::value(const Model& model, const State& z, double s) const {
  return value(model.mode_index(z), s);
}

void UStarTable::write_csv(std::ostream& out) const {
  out << "mode,s,value\n" << std::setprecision(17);
  for (std::size_t k = 0; k <= steps_; ++k) {
    for (std::size_t m = 0; m < modes_; ++m) out << m << ',' << grid_time(k) << ',' << at(m, k) << '\n';
  }
}

namespace {

struct Generator {
  // rows of (arrival index, rate); absorbed modes have none
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<bool> absorbed;

  void apply(const std::vector<double>& v, std::vector<double>& dv) const {
    for (std::size_t m = 0; m < rows.size(); ++m) {
      double acc = 0.0;
      for (const auto& [to, rate] : rows[m]) acc += rate * (v[to] - v[m]);
      dv[m] = acc;
    }
  }
};

Generator build_generator(const Model& model) {
  const auto count = model.mode_count();
  if (!count || !model.static_position()) {
    throw Error(ErrorCode::unsupported,
                "dynamic programming needs a finite mode set and a frozen position");
  }
  Generator g;
  g.rows.resize(*count);
  g.absorbed.resize(*count);
  std::vector<Transition> trans;
  for (std::size_t m = 0; m < *count; ++m) {
    const State z = model.state_for_mode(m);
    if (model.mode_index(z) != m) {
      throw Error(ErrorCode::model_contract, "mode_index and state_for_mode disagree");
    }
    g.absorbed[m] = z.m_d || model.in_failure_region(z);
    if (g.absorbed[m]) continue;
    model.transitions(z, trans);
    for (const auto& t : trans) {
      if (!(t.rate >= 0.0) || !std::isfinite(t.rate)) {
        throw Error(ErrorCode::model_contract, "hazard must be finite and non-negative");
      }
      if (t.rate == 0.0) continue;
      g.rows[m].emplace_back(model.mode_index(finalize_arrival(model, z, t.arrival)), t.rate);
    }
  }
  return g;
}

int resolve_workers(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

}  // namespace

UStarTable compute_ustar_dp(const Model& model, double h_dp) {
  if (!(h_dp > 0.0)) throw Error(ErrorCode::invalid_argument, "h_dp must be positive");
  const Generator gen = build_generator(model);
  const double t_f = model.horizon();
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t_f / h_dp)));
  const std::size_t n = gen.rows.size();
  UStarTable table(n, t_f, steps);
  const double h = t_f / static_cast<double>(steps);

  std::vector<double> v(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t m = 0; m < n; ++m) v[m] = gen.absorbed[m] ? 1.0 : 0.0;
  auto store = [&](std::size_t k) {
    gen.apply(v, k1);
    for (std::size_t m = 0; m < n; ++m) table.set(m, k, v[m], -k1[m]);
  };
  store(steps);
  for (std::size_t i = steps; i-- > 0;) {
    gen.apply(v, k1);
    for (std::size_t m = 0; m < n; ++m) tmp[m] = v[m] + 0.5 * h * k1[m];
    gen.apply(tmp, k2);
    for (std::size_t m = 0; m < n; ++m) tmp[m] = v[m] + 0.5 * h * k2[m];
    gen.apply(tmp, k3);
    for (std::size_t m = 0; m < n; ++m) tmp[m] = v[m] + h * k3[m];
    gen.apply(tmp, k4);
    for (std::size_t m = 0; m < n; ++m) {
      v[m] += h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
    }
    store(i);
  }
  return table;
}

UStarScheme::UStarScheme(const Model& model, std::shared_ptr<const UStarTable> table, double power)
    : model_(model), table_(std::move(table)), power_(power) {
  if (!table_) throw Error(ErrorCode::invalid_argument, "missing table");
  if (!(power >= 0.0) || !std::isfinite(power)) {
    throw Error(ErrorCode::invalid_argument, "power must be finite and >= 0");
  }
}

double UStarScheme::u(const State& z, double s) const {
  const double v = std::max(table_->value(model_, z, s), kUStarFloor);
  return power_ == 1.0 ? v : std::max(std::pow(v, power_), kUStarFloor);
}

SimOptions oracle_sim_options() {
  SimOptions o;
  o.quadrature_tol = 1e-10;
  o.quadrature_max_depth = 40;
  return o;
}

std::unique_ptr<BiasScheme> exact_optimal_scheme(const Model& model,
                                                 std::shared_ptr<const UStarTable> table) {
  return std::make_unique<UStarScheme>(model, std::move(table), 1.0);
}

UStarEstimate estimate_ustar_mc(const Model& model, const State& z, double s, std::size_t m,
                                std::uint64_t seed, const BiasScheme* scheme,
                                const SimOptions& opts, int workers) {
  if (m == 0) throw Error(ErrorCode::invalid_argument, "need at least one trajectory");
  SimOptions o = opts;
  o.stop_at_failure = true;
  const int nw = resolve_workers(workers);
  std::vector<WeightAccumulator> partial(static_cast<std::size_t>(nw));
  for (auto& p : partial) p.keep_weights = false;
  std::exception_ptr error;
  const double t_f = model.horizon();

#pragma omp parallel num_threads(nw)
  {
#ifdef _OPENMP
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t tid = 0;
#endif
    TrajectoryEngine engine(model, scheme, o);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
      try {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        const auto out = engine.run_from(z, s, t_f, rng);
        partial[tid].add(static_cast<std::size_t>(i), out.hit_failure,
                         out.hit_failure ? std::exp(out.log_weight) : 0.0);
      } catch (...) {
#pragma omp critical(pdmp_oracle_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  WeightAccumulator acc = partial.front();
  for (std::size_t t = 1; t < partial.size(); ++t) acc.merge(partial[t]);

  UStarEstimate est;
  est.m = m;
  const double n = static_cast<double>(m);
  est.value = acc.sum.value() / n;
  if (m > 1) {
    const double var = std::max(0.0, (acc.sum_sq.value() - n * est.value * est.value) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

bool IdentityReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

void IdentityReport::add(std::string name, double lhs, double rhs, double tolerance) {
  checks.push_back({std::move(name), lhs, rhs, tolerance, std::abs(lhs - rhs) <= tolerance});
}

namespace {

IdentityCheck make_check(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, std::abs(lhs - rhs) <= tol};
}

}  // namespace

IdentityCheck tower_check(const Model& model, const UStarTable& table, const State& z, double s,
                          double delta, std::size_t m, std::uint64_t seed, double slack) {
  const double lhs = table.value(model, z, s);
  const double tau = std::min(s + delta, model.horizon());
  if (tau <= s) return make_check("tower", lhs, lhs, slack);

  SimOptions o;
  o.stop_at_failure = true;
  TrajectoryEngine engine(model, nullptr, o);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    RngStream rng(seed, i);
    const auto out = engine.run_from(z, s, tau, rng);
    const double v = out.final_state.m_d ? 1.0 : table.value(model, out.final_state, tau);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(m);
  const double mean = sum / n;
  const double var = m > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return make_check("tower", lhs, mean, 3.0 * std::sqrt(var / n) + slack);
}

IdentityCheck derivative_check(const Model& model, const UStarTable& table, std::size_t mode,
                               std::size_t k) {
  if (k == 0 || k >= table.steps()) {
    throw Error(ErrorCode::invalid_argument, "derivative check needs an interior grid point");
  }
  const double h = table.step();
  const double fd = (table.at(mode, k + 1) - table.at(mode, k - 1)) / (2.0 * h);
  const State z = model.state_for_mode(mode);
  double rhs = 0.0;
  if (!(z.m_d || model.in_failure_region(z))) {
    std::vector<Transition> trans;
    model.transitions(z, trans);
    const double u = table.at(mode, k);
    for (const auto& t : trans) {
      const auto to = model.mode_index(finalize_arrival(model, z, t.arrival));
      rhs += t.rate * (u - table.at(to, k));
    }
  }
  return make_check("derivative", fd, rhs, 5.0 * h);
}

IdentityCheck boundary_invariance_check(const Model& model, const State& z_pre, double s_pre,
                                        std::size_t m, std::uint64_t seed,
                                        const BiasScheme* scheme, const SimOptions& opts) {
  const BoundaryHit hit = boundary_hit_time(model, z_pre, model.horizon() - s_pre, opts);
  if (!std::isfinite(hit.time)) {
    throw Error(ErrorCode::invalid_argument, "flow does not reach the boundary before the horizon");
  }
  const double s = s_pre + hit.time;
  std::vector<KernelOutcome> kernel;
  model.boundary_kernel(hit.state, kernel);

  double lhs = 0.0, var_l = 0.0;
  std::uint64_t stream_seed = seed;
  for (const auto& atom : kernel) {
    if (atom.probability == 0.0) continue;
    const State arr = finalize_arrival(model, hit.state, atom.arrival);
    const auto est = estimate_ustar_mc(model, arr, s, m, ++stream_seed, scheme, opts);
    lhs += atom.probability * est.value;
    var_l += atom.probability * atom.probability * est.std_error * est.std_error;
  }
  const auto pre = estimate_ustar_mc(model, z_pre, s_pre, m, seed, scheme, opts);
  const double tol = 3.0 * std::sqrt(var_l + pre.std_error * pre.std_error);
  return make_check("boundary_invariance", lhs, pre.value, tol);
}

IdentityCheck nested_tower_check(const Model& model, const State& z, double s, double delta,
                                 std::size_t m_direct, std::size_t m_outer, std::size_t m_inner,
                                 std::uint64_t seed, const BiasScheme* scheme,
                                 const SimOptions& opts) {
  const auto direct = estimate_ustar_mc(model, z, s, m_direct, seed, scheme, opts);
  const double tau = std::min(s + delta, model.horizon());
  SimOptions o = opts;
  o.stop_at_failure = true;
  TrajectoryEngine engine(model, scheme, o);
  // outer states from a stream family disjoint from the direct estimate
  const std::uint64_t outer_seed = seed ^ 0x5bd1e995u;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < m_outer; ++i) {
    RngStream rng(outer_seed, i);
    const auto out = engine.run_from(z, s, tau, rng);
    const double u = out.final_state.m_d ? 1.0
                                         : estimate_ustar_mc(model, out.final_state, tau, m_inner,
                                                             outer_seed + 1 + i, scheme, opts)
                                               .value;
    const double v = std::exp(out.log_weight) * u;
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(m_outer);
  const double mean = sum / n;
  const double var = m_outer > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  const double tol = 3.0 * std::sqrt(var / n + direct.std_error * direct.std_error);
  return make_check("nested_tower", direct.value, mean, tol);
}

IdentityReport check_ustar_identities(const Model& model, const UStarTable& table,
                                      std::size_t points, std::size_t m, std::uint64_t seed) {
  IdentityReport report;
  double lo = 1.0, hi = 0.0;
  for (std::size_t mode = 0; mode < table.modes(); ++mode) {
    for (std::size_t k = 0; k <= table.steps(); ++k) {
      lo = std::min(lo, table.at(mode, k));
      hi = std::max(hi, table.at(mode, k));
    }
  }
  report.checks.push_back({"range", lo, hi, 0.0, lo >= 0.0 && hi <= 1.0});

  RngStream rng(seed, 0);
  const double t_f = table.horizon();
  for (std::size_t p = 0; p < points; ++p) {
    const auto mode = static_cast<std::size_t>(rng.uniform() * static_cast<double>(table.modes()));
    const double s = rng.uniform() * t_f;
    const State z = model.state_for_mode(mode);
    if (z.m_d) {
      report.checks.push_back(make_check("absorption", table.value(mode, s), 1.0, 0.0));
      continue;
    }
    const double delta = rng.uniform() * (t_f - s);
    report.checks.push_back(tower_check(model, table, z, s, delta, m, seed + 1 + p));
    report.checks.push_back(tower_check(model, table, z, s, 0.0, m, seed + 1 + p));
    const auto k = 1 + static_cast<std::size_t>(rng.uniform() *
                                                 static_cast<double>(table.steps() - 1));
    report.checks.push_back(derivative_check(model, table, mode, std::min(k, table.steps() - 1)));
  }
  return report;
}

}  // namespace pdmp
