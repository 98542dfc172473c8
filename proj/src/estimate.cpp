#include "pdmp/estimate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"

namespace pdmp {

void WeightAccumulator::add(std::size_t replication, bool hit, double weight) {
  ++n;
  if (!hit) return;
  ++hits;
  sum.add(weight);
  sum_sq.add(weight * weight);
  max_weight = std::max(max_weight, weight);
  if (keep_weights) failing.emplace_back(replication, weight);
}

void WeightAccumulator::merge(const WeightAccumulator& o) {
  n += o.n;
  hits += o.hits;
  sum.merge(o.sum);
  sum_sq.merge(o.sum_sq);
  max_weight = std::max(max_weight, o.max_weight);
  failing.insert(failing.end(), o.failing.begin(), o.failing.end());
}

std::vector<double> WeightAccumulator::ordered_weights() const {
  auto tagged = failing;
  std::sort(tagged.begin(), tagged.end());
  std::vector<double> out;
  out.reserve(tagged.size());
  for (const auto& [i, w] : tagged) out.push_back(w);
  return out;
}

namespace {

void replicate(TrajectoryEngine& engine, const EstimatorConfig& cfg, std::size_t i,
               WeightAccumulator& acc) {
  RngStream rng(cfg.seed, cfg.stream_offset + i);
  const TrajectoryOutcome out = engine.run(rng);
  acc.add(i, out.hit_failure, out.hit_failure ? std::exp(out.log_weight) : 0.0);
}

SimOptions estimation_options(const EstimatorConfig& cfg) {
  SimOptions o = cfg.sim;
  o.stop_at_failure = true;
  return o;
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

WeightAccumulator run_replications_serial(const Model& model, const BiasScheme* scheme,
                                          const EstimatorConfig& cfg) {
  TrajectoryEngine engine(model, scheme, estimation_options(cfg));
  WeightAccumulator acc;
  acc.keep_weights = cfg.keep_weights;
  for (std::size_t i = 0; i < cfg.n; ++i) replicate(engine, cfg, i, acc);
  return acc;
}

WeightAccumulator run_replications_parallel(const Model& model, const BiasScheme* scheme,
                                            const EstimatorConfig& cfg) {
  const int workers = resolve_workers(cfg.workers);
  std::vector<WeightAccumulator> partial(static_cast<std::size_t>(workers));
  for (auto& p : partial) p.keep_weights = cfg.keep_weights;
  std::exception_ptr error;
  const SimOptions opts = estimation_options(cfg);
  const auto n = static_cast<std::int64_t>(cfg.n);

#pragma omp parallel num_threads(workers)
  {
#ifdef _OPENMP
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t tid = 0;
#endif
    TrajectoryEngine engine(model, scheme, opts);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        replicate(engine, cfg, static_cast<std::size_t>(i), partial[tid]);
      } catch (...) {
#pragma omp critical(pdmp_estimator_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);

  WeightAccumulator acc = std::move(partial.front());
  for (std::size_t t = 1; t < partial.size(); ++t) acc.merge(partial[t]);
  return acc;
}

double quantile_sorted(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) return 0.0;
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

namespace {

EstimateReport summarize(const WeightAccumulator& acc, const EstimatorConfig& cfg,
                         std::string method, double wall, bool crude) {
  EstimateReport r;
  r.method = std::move(method);
  r.n_sim = acc.n;
  r.n_hits = acc.hits;
  r.workers = resolve_workers(cfg.workers);
  r.seed = cfg.seed;
  const double n = static_cast<double>(acc.n);
  r.failing_weights = acc.ordered_weights();

  if (crude) {
    r.p_hat = static_cast<double>(acc.hits) / n;
    r.sigma2 = r.p_hat * (1.0 - r.p_hat);
  } else {
    r.p_hat = acc.sum.value() / n;
    if (acc.n > 1) {
      if (acc.keep_weights) {
        // two-pass form: stable when every weight is close to p
        CompensatedSum ss;
        for (double w : r.failing_weights) ss.add((w - r.p_hat) * (w - r.p_hat));
        ss.add(static_cast<double>(acc.n - acc.hits) * r.p_hat * r.p_hat);
        r.sigma2 = ss.value() / (n - 1.0);
      } else {
        r.sigma2 = std::max(0.0, (acc.sum_sq.value() - n * r.p_hat * r.p_hat) / (n - 1.0));
      }
    }
  }
  r.var_hat = r.sigma2 / n;
  const double half = 1.96 * std::sqrt(r.var_hat);
  r.ci_lo = r.p_hat - half;
  r.ci_hi = r.p_hat + half;
  r.t_sim = wall / n;
  r.efficiency = r.sigma2 > 0.0 && r.t_sim > 0.0 ? 1.0 / (r.sigma2 * r.t_sim)
                                                  : std::numeric_limits<double>::infinity();
  r.max_weight = acc.max_weight;

  std::vector<double> sorted = r.failing_weights;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < kWeightQuantileLevels.size(); ++i) {
    r.weight_quantiles[i] = quantile_sorted(sorted, kWeightQuantileLevels[i]);
  }
  for (std::size_t i = 0; i < std::min(cfg.top_k, sorted.size()); ++i) {
    r.top_weights.push_back(sorted[sorted.size() - 1 - i]);
  }
  return r;
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EstimateReport crude_mc(const Model& model, const EstimatorConfig& cfg) {
  if (cfg.n == 0) throw Error(ErrorCode::invalid_argument, "need at least one replication");
  WeightAccumulator acc;
  const double wall = timed([&] { acc = run_replications_parallel(model, nullptr, cfg); });
  return summarize(acc, cfg, "mc", wall, true);
}

EstimateReport importance_sampling(const Model& model, const BiasScheme& scheme,
                                   const EstimatorConfig& cfg) {
  if (cfg.n == 0) throw Error(ErrorCode::invalid_argument, "need at least one replication");
  WeightAccumulator acc;
  const double wall = timed([&] { acc = run_replications_parallel(model, &scheme, cfg); });
  return summarize(acc, cfg, "is", wall, false);
}

WeightHistogram weight_histogram(const std::vector<double>& weights, double center,
                                 std::size_t bins, std::size_t top_k) {
  WeightHistogram h;
  if (bins == 0) throw Error(ErrorCode::invalid_argument, "need at least one bin");
  std::vector<double> positive;
  for (double w : weights) {
    if (w > 0.0) positive.push_back(w);
  }
  if (!(center > 0.0)) {
    center = positive.empty() ? 1.0 : positive[positive.size() / 2];
  }
  double half_decades = 0.5;
  for (double w : positive) half_decades = std::max(half_decades, std::abs(std::log10(w / center)));
  half_decades *= 1.0 + 1e-9;
  // the center sits in the middle of bin `mid`, never on an edge
  const double mid = static_cast<double>(bins / 2);
  const double width =
      half_decades / std::min(mid + 0.5, static_cast<double>(bins) - mid - 0.5);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = center * std::pow(10.0, (static_cast<double>(i) - mid - 0.5) * width);
  }
  h.counts.assign(bins, 0);
  const double lo = std::log10(h.edges.front());
  const double span = std::log10(h.edges.back()) - lo;
  for (double w : positive) {
    auto idx = static_cast<std::size_t>((std::log10(w) - lo) / span * static_cast<double>(bins));
    h.counts[std::min(idx, bins - 1)]++;
  }
  std::sort(positive.begin(), positive.end(), std::greater<>());
  positive.resize(std::min(top_k, positive.size()));
  h.top_weights = std::move(positive);
  return h;
}

}  // namespace pdmp
