#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"

namespace pdmp {

/// Kahan-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum_);
    add(-o.c_);
  }
  double value() const { return sum_ - c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

/// Commutative monoid of replication results: counts, compensated sums of
/// weighted indicators and of their squares, the largest weight and the
/// failing weights tagged with their replication index.
struct WeightAccumulator {
  std::size_t n = 0;
  std::size_t hits = 0;
  CompensatedSum sum;
  CompensatedSum sum_sq;
  double max_weight = 0.0;
  bool keep_weights = true;
  std::vector<std::pair<std::size_t, double>> failing;  // (replication, weight)

  void add(std::size_t replication, bool hit, double weight);
  void merge(const WeightAccumulator& other);
  /// Failing weights in replication order.
  std::vector<double> ordered_weights() const;
};

struct EstimatorConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream_offset = 0;  // first replication stream id
  int workers = 0;                  // 0: all available
  SimOptions sim{};
  bool keep_weights = true;
  std::size_t top_k = 10;
};

struct EstimateReport {
  std::string method;
  std::size_t n_sim = 0;
  std::size_t n_hits = 0;
  double p_hat = 0.0;
  double sigma2 = 0.0;   // per-replication variance
  double var_hat = 0.0;  // sigma2 / n
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double t_sim = 0.0;       // wall seconds per replication
  double efficiency = 0.0;  // 1 / (sigma2 * t_sim); +inf when sigma2 = 0
  double max_weight = 0.0;
  std::vector<double> top_weights;
  std::array<double, 7> weight_quantiles{};  // 0, 5, 25, 50, 75, 95, 100 %
  std::vector<double> failing_weights;       // replication order
  int workers = 1;
  std::uint64_t seed = 0;
};

inline constexpr std::array<double, 7> kWeightQuantileLevels{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

/// Replication kernels. `scheme` null simulates the original process.
/// The serial loop is the reference the OpenMP kernel is tested against.
WeightAccumulator run_replications_serial(const Model& model, const BiasScheme* scheme,
                                          const EstimatorConfig& cfg);
WeightAccumulator run_replications_parallel(const Model& model, const BiasScheme* scheme,
                                            const EstimatorConfig& cfg);

/// Plain Monte Carlo: p = mean of indicators, variance p(1-p)/n.
EstimateReport crude_mc(const Model& model, const EstimatorConfig& cfg);

/// Importance sampling with the weights f/g of the scheme's process.
EstimateReport importance_sampling(const Model& model, const BiasScheme& scheme,
                                   const EstimatorConfig& cfg);

struct WeightHistogram {
  std::vector<double> edges;  // bins + 1, log-spaced
  std::vector<std::size_t> counts;
  std::vector<double> top_weights;  // descending
};

/// Log-spaced histogram of weights. `center` (usually p_hat) is the
/// log-midpoint of the middle bin.
WeightHistogram weight_histogram(const std::vector<double>& weights, double center,
                                 std::size_t bins = 50, std::size_t top_k = 10);

/// Linear-interpolated empirical quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double level);

}  // namespace pdmp
