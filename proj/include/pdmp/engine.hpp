#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

namespace detail {
class SegmentWalker;
}

/// Everything about one simulated segment that the importance density of a
/// mode-only scheme depends on. Lets the cross-entropy objective be
/// re-evaluated for new parameters without re-integrating flows.
struct SegmentRecord {
  State departure;
  double start_time = 0.0;
  double duration = 0.0;
  JumpKind kind = JumpKind::horizon;
  bool failure_entry = false;
  std::vector<State> arrivals;           // spontaneous transition targets
  std::vector<double> hazard_integrals;  // per-transition f-cumulative intensity
  std::size_t chosen = 0;                // transition or kernel atom taken
  double chosen_rate = 0.0;              // f-rate of the taken transition
  std::vector<KernelOutcome> kernel;     // boundary kernel (original law)
};

struct TrajectoryRecord {
  std::vector<SegmentRecord> segments;
};

struct TrajectoryOutcome {
  bool hit_failure = false;
  double log_weight = 0.0;  // log f - log g; zero for the original process
  std::size_t jumps = 0;
  State final_state;  // state at the end time, or right after entering D when stopping there
};

/// Jump-by-jump simulator. With a scheme the importance process is
/// simulated and the log-likelihood ratio accumulated online.
/// Not thread-safe: each worker owns one engine.
class TrajectoryEngine {
 public:
  TrajectoryEngine(const Model& model, const BiasScheme* scheme, const SimOptions& opts);
  ~TrajectoryEngine();
  TrajectoryEngine(TrajectoryEngine&&) noexcept;

  TrajectoryOutcome run(RngStream& rng, Skeleton* skeleton = nullptr,
                        TrajectoryRecord* record = nullptr);

  /// Trajectory started from `z0` at absolute time `s0` and stopped at
  /// `end_time` (at most the model horizon). The skeleton horizon is
  /// end_time - s0.
  TrajectoryOutcome run_from(const State& z0, double s0, double end_time, RngStream& rng,
                             Skeleton* skeleton = nullptr, TrajectoryRecord* record = nullptr);

 private:
  const Model& model_;
  const BiasScheme* scheme_;
  SimOptions opts_;
  std::unique_ptr<detail::SegmentWalker> walker_;
  std::vector<Transition> trans_;
  std::vector<KernelOutcome> kernel_;
  std::vector<double> weights_;
};

/// Index drawn with probability weights[i] / sum(weights).
std::size_t draw_index(const std::vector<double>& weights, double total, RngStream& rng);

/// Throws model_contract unless the kernel is a probability distribution
/// without self-jump.
void validate_kernel(const State& z_minus, const std::vector<KernelOutcome>& kernel);

}  // namespace pdmp
