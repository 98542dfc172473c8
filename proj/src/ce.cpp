#include "pdmp/ce.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pdmp/measure.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

std::unique_ptr<BiasScheme> HeatedRoomFamily::make(std::span<const double> alpha) const {
  return std::make_unique<models::HeatedRoomScheme>(alpha[0], alpha[1]);
}

std::unique_ptr<BiasScheme> ModeExponentialFamily::make(std::span<const double> alpha) const {
  return std::make_unique<models::ModeExponentialScheme>(alpha[0], top_);
}

double record_log_density(const BiasScheme& scheme, const TrajectoryRecord& record) {
  double total = 0.0;
  for (const SegmentRecord& seg : record.segments) {
    const State& z = seg.departure;
    const double s = seg.start_time;
    const double u0 = z.m_d ? 1.0 : effective_u(scheme, z, s);
    double chosen_mult = 1.0;
    for (std::size_t j = 0; j < seg.arrivals.size(); ++j) {
      const double c = z.m_d ? 1.0 : effective_u(scheme, seg.arrivals[j], s) / u0;
      total -= c * seg.hazard_integrals[j];
      if (j == seg.chosen) chosen_mult = c;
    }
    if (seg.kind == JumpKind::spontaneous) {
      total += std::log(seg.chosen_rate * chosen_mult);
    } else if (seg.kind == JumpKind::boundary && !seg.failure_entry) {
      double sum = 0.0;
      double taken = 0.0;
      for (std::size_t i = 0; i < seg.kernel.size(); ++i) {
        const auto& atom = seg.kernel[i];
        const double w =
            atom.probability *
            (z.m_d ? 1.0 : effective_u_boundary(scheme, atom.arrival, s + seg.duration));
        sum += w;
        if (i == seg.chosen) taken = w;
      }
      total += std::log(taken / sum);
    }
  }
  return total;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts) {
  const std::size_t d = x0.size();
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < d; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return f(x);
  };

  project(x0);
  std::vector<std::vector<double>> pts(d + 1, x0);
  for (std::size_t i = 0; i < d; ++i) {
    // step inward when the vertex would leave the box
    const double step = x0[i] + opts.scale <= upper[i] ? opts.scale : -opts.scale;
    pts[i + 1][i] += step;
    project(pts[i + 1]);
  }
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i <= d; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), trial(d), trial2(d);
  while (res.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - (d > 0)];

    double spread = 0.0;
    for (std::size_t i = 0; i <= d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        spread = std::max(spread, std::abs(pts[i][k] - pts[best][k]));
      }
    }
    if (std::abs(vals[worst] - vals[best]) <= opts.f_tol && spread <= opts.x_tol) break;
    if (spread == 0.0) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    }
    auto along = [&](double t, std::vector<double>& out) {
      for (std::size_t k = 0; k < d; ++k) out[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      project(out);
    };

    along(-1.0, trial);
    const double fr = eval(trial);
    if (fr < vals[best]) {
      along(-2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    along(outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

namespace {

struct FailingSample {
  std::vector<TrajectoryRecord> records;
  std::vector<Skeleton> skeletons;
  std::vector<double> log_weights;
  std::size_t drawn = 0;
};

struct Slot {
  bool hit = false;
  double log_weight = 0.0;
  TrajectoryRecord record;
  Skeleton skeleton;
};

int worker_count(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

FailingSample draw_failing(const Model& model, const BiasScheme& scheme, const CeConfig& cfg,
                           bool use_records, std::uint64_t iter) {
  SimOptions opts = cfg.sim;
  // full skeletons are needed by the density evaluator; records are
  // self-contained once the failure is reached
  opts.stop_at_failure = use_records;
  const int workers = worker_count(cfg.workers);
  FailingSample out;
  std::vector<Slot> slots(std::max<std::size_t>(cfg.batch, 1));

  while (out.records.size() + out.skeletons.size() < cfg.n_ce &&
         out.drawn < cfg.max_draws_per_step) {
    const std::size_t start = out.drawn;
    const std::size_t count = std::min(slots.size(), cfg.max_draws_per_step - start);
    std::exception_ptr error;
#pragma omp parallel num_threads(workers)
    {
      TrajectoryEngine engine(model, &scheme, opts);
#pragma omp for schedule(static)
      for (std::int64_t k = 0; k < static_cast<std::int64_t>(count); ++k) {
        try {
          Slot& slot = slots[static_cast<std::size_t>(k)];
          RngStream rng(cfg.seed, (iter << 40) + start + static_cast<std::size_t>(k));
          const auto res = engine.run(rng, use_records ? nullptr : &slot.skeleton,
                                      use_records ? &slot.record : nullptr);
          slot.hit = res.hit_failure;
          slot.log_weight = res.log_weight;
        } catch (...) {
#pragma omp critical(pdmp_ce_error)
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t k = 0; k < count; ++k) {
      Slot& slot = slots[k];
      if (!slot.hit) continue;
      out.log_weights.push_back(slot.log_weight);
      if (use_records) {
        out.records.push_back(std::move(slot.record));
      } else {
        out.skeletons.push_back(std::move(slot.skeleton));
      }
      if (out.log_weights.size() == cfg.n_ce) {
        out.drawn = start + k + 1;
        return out;
      }
    }
    out.drawn = start + count;
  }
  return out;
}

std::string format_alpha(const std::vector<double>& a) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
  os << ')';
  return os.str();
}

}  // namespace

CeTrace ce_optimize(const Model& model, const ParametricFamily& family, const CeConfig& cfg) {
  const std::size_t d = family.dimension();
  if (cfg.alpha0.size() != d) {
    throw Error(ErrorCode::invalid_argument, "alpha0 does not match the family dimension");
  }
  if (cfg.n_ce == 0 || !(cfg.eps > 0.0) || cfg.max_iters == 0) {
    throw Error(ErrorCode::invalid_argument, "need n_ce >= 1, eps > 0 and max_iters >= 1");
  }
  const auto lo = family.lower();
  const auto hi = family.upper();
  for (std::size_t i = 0; i < d; ++i) {
    if (!(cfg.alpha0[i] >= lo[i] && cfg.alpha0[i] <= hi[i])) {
      throw Error(ErrorCode::invalid_argument, "alpha0 lies outside the family bounds");
    }
  }
  const bool use_records = family.mode_only() && !cfg.force_generic;

  CeTrace trace;
  std::vector<double> alpha = cfg.alpha0;
  for (std::uint64_t iter = 0; iter < cfg.max_iters; ++iter) {
    CeIteration it;
    it.alpha = alpha;
    const auto current = family.make(alpha);
    FailingSample sample = draw_failing(model, *current, cfg, use_records, iter);
    it.n_drawn = sample.drawn;
    it.n_hits = sample.log_weights.size();
    if (it.n_hits < cfg.n_ce) {
      trace.alpha = alpha;
      throw CeFailure(ErrorCode::ce_initialization,
                      "only " + std::to_string(it.n_hits) + " failing trajectories in " +
                          std::to_string(it.n_drawn) + " draws at alpha " + format_alpha(alpha) +
                          ": the parameter under-biases; start from a stronger value",
                      trace);
    }

    const double lw_max = *std::max_element(sample.log_weights.begin(), sample.log_weights.end());
    std::vector<double> w(it.n_hits);
    double w_sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(sample.log_weights[i] - lw_max);
      w_sum += w[i];
    }
    for (double& v : w) v /= w_sum;

    std::size_t evaluations = 0;
    std::vector<double> lg(w.size());
    const int workers = use_records ? 1 : worker_count(cfg.workers);
    auto objective = [&](std::span<const double> a) {
      ++evaluations;
      const auto scheme = family.make(a);
      if (use_records) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          lg[i] = record_log_density(*scheme, sample.records[i]);
        }
      } else {
        // full re-integration dominates here; summed serially below
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (std::size_t i = 0; i < w.size(); ++i) {
          try {
            lg[i] = log_density_under_scheme(model, *scheme, sample.skeletons[i], cfg.sim).total;
          } catch (...) {
#pragma omp critical(pdmp_ce_error)
            if (!error) error = std::current_exception();
          }
        }
        if (error) std::rethrow_exception(error);
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) acc -= w[i] * lg[i];
      if (!std::isfinite(acc)) {
        throw CeFailure(ErrorCode::ce_objective,
                        "non-finite objective at alpha " +
                            format_alpha(std::vector<double>(a.begin(), a.end())) +
                            ": weights degenerate, the parameter over-biases",
                        trace);
      }
      return acc;
    };

    it.objective_start = objective(alpha);
    NelderMeadOptions nm;
    nm.scale = cfg.simplex_scale;
    nm.x_tol = 1e-3 * cfg.eps;
    nm.f_tol = 1e-8;
    NelderMeadResult best = nelder_mead(objective, alpha, lo, hi, nm);
    if (it.objective_start <= best.value) {
      best.x = alpha;
      best.value = it.objective_start;
    }
    RngStream restart_rng(cfg.seed, (iter << 40) + (std::uint64_t{1} << 39));
    for (int r = 0; r < cfg.restarts; ++r) {
      std::vector<double> start = best.x;
      for (std::size_t k = 0; k < d; ++k) {
        start[k] += cfg.simplex_scale * (2.0 * restart_rng.uniform() - 1.0);
      }
      const NelderMeadResult cand = nelder_mead(objective, start, lo, hi, nm);
      if (cand.value < best.value) best = cand;
    }
    it.alpha_next = best.x;
    it.objective = best.value;
    it.evaluations = evaluations;
    trace.iterations.push_back(it);

    double step = 0.0;
    for (std::size_t k = 0; k < d; ++k) step = std::max(step, std::abs(best.x[k] - alpha[k]));
    alpha = best.x;
    if (step < cfg.eps) {
      trace.converged = true;
      break;
    }
  }
  trace.alpha = alpha;
  return trace;
}

}  // namespace pdmp
